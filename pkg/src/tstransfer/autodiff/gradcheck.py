"""Central finite-difference gradient checking."""
import numpy as np

from .ops import record_kinks

STEP = 1e-3
RTOL = 1e-4
ATOL = 1e-6


def _pattern(fn):
    with record_kinks() as kinks:
        value = float(fn().data)
    return value, kinks


def _same(a, b):
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def check_gradients(fn, tensors, rng, max_coords=8, step=STEP, rtol=RTOL, atol=ATOL):
    """Compare analytic gradients of scalar ``fn()`` against central differences.

    ``tensors`` are leaves with ``requires_grad``. At most ``max_coords``
    randomly chosen coordinates of each are probed. A probe whose +/- step
    changes any relu sign or max-pool winner is skipped and another
    coordinate is drawn, since the difference quotient is meaningless across
    a kink. Returns a list of (tensor index, flat index, analytic, numeric)
    tuples that failed, and the number of coordinates checked.
    """
    for t in tensors:
        t.zero_grad()
    with record_kinks() as base_kinks:
        out = fn()
    out.backward()
    analytic = [t.grad.copy() for t in tensors]
    failures, checked = [], 0
    for ti, t in enumerate(tensors):
        flat = t.data.reshape(-1)
        order = rng.permutation(flat.size)
        done = 0
        for j in order:
            if done >= max_coords:
                break
            orig = flat[j]
            flat[j] = orig + step
            f_plus, k_plus = _pattern(fn)
            flat[j] = orig - step
            f_minus, k_minus = _pattern(fn)
            flat[j] = orig
            if not (_same(k_plus, base_kinks) and _same(k_minus, base_kinks)):
                continue
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(analytic[ti].reshape(-1)[j])
            done += 1
            checked += 1
            if abs(a - numeric) > max(rtol * max(abs(a), abs(numeric)), atol):
                failures.append((ti, int(j), a, numeric))
    return failures, checked
