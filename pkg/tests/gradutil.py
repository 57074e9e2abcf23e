import numpy as np

from tstransfer.autodiff import RngStream, Tensor, check_gradients, ops


def leaf(rng, shape, scale=1.0):
    return Tensor(rng.normal(shape, scale), requires_grad=True)


def projected(out_fn, rng):
    """Scalar sum(out * R) for a fixed random R, so every output coordinate matters."""
    holder = {}

    def fn():
        out = out_fn()
        flat = ops.reshape(out, (1, int(np.prod(out.shape))))
        if "r" not in holder:
            holder["r"] = Tensor(rng.normal((1, flat.shape[1])))
        return ops.sum_all(ops.dense(flat, holder["r"], Tensor(np.zeros(1))))
    return fn


def assert_gradients(fn, tensors, seed, max_coords=6):
    failures, checked = check_gradients(fn, tensors, RngStream(seed), max_coords=max_coords)
    assert checked > 0, "every probe crossed a kink"
    assert not failures, failures[:5]
    return checked
