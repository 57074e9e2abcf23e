"""Two-stage adaptive linear step-up false discovery rate control."""
import numpy as np

from ..errors import ParameterError


def _step_up_count(sorted_p, level, m_eff):
    """Largest k with p_(k) <= k * level / m_eff (0 if none)."""
    k = np.arange(1, len(sorted_p) + 1)
    ok = np.flatnonzero(sorted_p <= k * level / m_eff)
    return int(ok[-1] + 1) if ok.size else 0


def _rejections(sorted_p, q1):
    """Number of smallest p-values rejected when both stages run at level q1."""
    m = len(sorted_p)
    r1 = _step_up_count(sorted_p, q1, m)
    if r1 == 0:
        return 0
    if r1 == m:
        return m
    m0 = m - r1
    return _step_up_count(sorted_p, q1, m0)


def bky_correct(pvalues, q=0.05):
    """Returns (rejected flags, adjusted p-values).

    The adjusted value of a hypothesis is the smallest level q at which the
    procedure rejects it (1.0 if it is not rejected at any q < 1). Rejection
    counts only change where q / (1 + q) crosses p_(k) * j / k for some j, k,
    so those breakpoints are scanned in increasing order.
    """
    p = np.asarray(pvalues, dtype=np.float64).ravel()
    if not 0 < q < 1:
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    if p.size == 0:
        return np.zeros(0, dtype=bool), np.zeros(0)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ParameterError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="mergesort")
    sp = p[order]
    rejected = np.zeros(m, dtype=bool)
    rejected[order[:_rejections(sp, q / (1 + q))]] = True

    k = np.arange(1, m + 1)
    breakpoints = np.unique((sp[:, None] * np.arange(1, m + 1)[None, :] / k[:, None]).ravel())
    breakpoints = breakpoints[breakpoints < 1]
    adjusted_sorted = np.ones(m)
    done = 0
    for c in breakpoints:
        level = c / (1 - c)
        if level >= 1:
            break
        # probe just above c: p * j / k * k / j need not round back to p
        r = _rejections(sp, c * (1 + 1e-12))
        if r > done:
            adjusted_sorted[done:r] = level
            done = r
            if done == m:
                break
    adjusted = np.empty(m)
    adjusted[order] = np.clip(adjusted_sorted, 0.0, 1.0)
    return rejected, adjusted
