"""Keras-compatible weight initializers.

Conv kernels are stored (out, in, width); fans follow the Keras convention
fan_in = width * in, fan_out = width * out.
"""
import numpy as np

from ..errors import ParameterError

# stddev of a unit normal truncated to [-2, 2]
_TRUNC_STD = 0.87962566103423978


def fans(shape):
    if len(shape) == 2:  # dense weight stored (out, in)
        return shape[1], shape[0]
    if len(shape) == 3:
        receptive = shape[2]
        return shape[1] * receptive, shape[0] * receptive
    raise ParameterError(f"cannot compute fans for shape {shape}")


def glorot_uniform(rng, shape):
    fan_in, fan_out = fans(shape)
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(shape, -limit, limit)


def glorot_normal(rng, shape):
    fan_in, fan_out = fans(shape)
    return rng.truncated_normal(shape, np.sqrt(2.0 / (fan_in + fan_out)) / _TRUNC_STD)


def he_normal(rng, shape):
    fan_in, _ = fans(shape)
    return rng.truncated_normal(shape, np.sqrt(2.0 / fan_in) / _TRUNC_STD)


def he_uniform(rng, shape):
    fan_in, _ = fans(shape)
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(shape, -limit, limit)


def orthogonal(rng, shape):
    rows, cols = shape
    a = rng.normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if rows >= cols else q.T


INITIALIZERS = {
    "glorot_uniform": glorot_uniform,
    "glorot_normal": glorot_normal,
    "he_normal": he_normal,
    "he_uniform": he_uniform,
}


def get(name):
    try:
        return INITIALIZERS[name]
    except KeyError:
        raise ParameterError(f"unknown initializer {name!r}") from None
