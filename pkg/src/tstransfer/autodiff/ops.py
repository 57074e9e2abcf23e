"""Differentiable operations needed by the four architectures.

Sequence tensors are batched as (batch, channels, length). Functions that
the architectures never call unbatched still accept an unbatched
(channels, length) input and return an unbatched result.
"""
import contextlib

import numpy as np

from .. import kernels
from ..errors import DimensionError, NumericFailure, ParameterError
from .tensor import Tensor, as_tensor, result

BN_EPS = 1e-5
WN_EPS = 1e-12
CE_FLOOR = 1e-12

_kinks = None


@contextlib.contextmanager
def record_kinks():
    """Collect relu sign patterns and max-pool argmax indices of every op run
    inside the block. Gradient checks use this to skip finite-difference steps
    that cross a non-differentiable point."""
    global _kinks
    previous, _kinks = _kinks, []
    try:
        yield _kinks
    finally:
        _kinks = previous


def _batched(x, ndim):
    if x.ndim == ndim - 1:
        return reshape(x, (1,) + x.shape), True
    if x.ndim != ndim:
        raise DimensionError(f"expected {ndim - 1}-D or {ndim}-D input, got shape {x.shape}")
    return x, False


def _unbatch(y, squeeze):
    return reshape(y, y.shape[1:]) if squeeze else y


# -- elementwise / structural -------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"add: shapes {a.shape} and {b.shape} differ")
    return result(a.data + b.data, (a, b), lambda g: (g, g))


def scale(x, factor):
    x = as_tensor(x)
    return result(x.data * factor, (x,), lambda g: (g * factor,))


def reshape(x, shape):
    x = as_tensor(x)
    old = x.shape
    return result(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def flatten(x):
    return reshape(x, (x.shape[0], -1))


def swap_last(x):
    """(B, C, N) -> (B, N, C)."""
    x = as_tensor(x)
    return result(np.ascontiguousarray(x.data.swapaxes(-1, -2)), (x,),
                  lambda g: (np.ascontiguousarray(g.swapaxes(-1, -2)),))


def last_step(x):
    """(B, C, N) -> (B, C): the features at the final time step."""
    x = as_tensor(x)
    shape = x.shape

    def back(g):
        out = np.zeros(shape, dtype=g.dtype)
        out[..., -1] = g
        return (out,)

    return result(np.ascontiguousarray(x.data[..., -1]), (x,), back)


def concat(tensors, axis=1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, cuts, axis=axis))

    return result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), back)


def sum_all(x):
    x = as_tensor(x)
    shape = x.shape
    total = np.sum(x.data, dtype=np.float64).astype(x.data.dtype)
    return result(total, (x,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean_all(x):
    x = as_tensor(x)
    shape, n = x.shape, x.data.size
    m = (np.sum(x.data, dtype=np.float64) / n).astype(x.data.dtype)
    return result(m, (x,), lambda g: (np.full(shape, g / n, dtype=x.data.dtype),))


def square_sum(x):
    x = as_tensor(x)
    s = np.sum(np.square(x.data, dtype=np.float64)).astype(x.data.dtype)
    return result(s, (x,), lambda g: (2.0 * g * x.data,))


def scale_channels(x, s):
    """Multiply each channel of x (B, C, N) by s (B, C)."""
    x, s = as_tensor(x), as_tensor(s)
    if s.shape != x.shape[:2]:
        raise DimensionError(f"scale_channels: {s.shape} does not match {x.shape}")

    def back(g):
        return g * s.data[..., None], np.einsum("bcn,bcn->bc", g, x.data)

    return result(x.data * s.data[..., None], (x, s), back)


# -- affine layers -----------------------------------------------------------

def dense(x, weight, bias):
    """weight @ x + bias for x of shape (D,) or (B, D); weight is (M, D)."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise DimensionError(f"dense: input width {x.shape[-1]} vs weight {weight.shape}")
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"dense: bias {bias.shape} vs weight {weight.shape}")
    xd = x.data

    def back(g):
        g2 = g.reshape(-1, g.shape[-1])
        x2 = xd.reshape(-1, xd.shape[-1])
        return (g @ weight.data, g2.T @ x2, g2.sum(axis=0))

    return result(xd @ weight.data.T + bias.data, (x, weight, bias), back)


def _padding(n, k, stride, dilation, padding):
    span = dilation * (k - 1) + 1
    if padding == "valid":
        return 0, 0
    if padding == "causal":
        return span - 1, 0
    if padding == "same":
        n_out = -(-n // stride)
        total = max((n_out - 1) * stride + span - n, 0)
        return total // 2, total - total // 2
    raise ParameterError(f"unknown padding {padding!r}")


def conv1d(x, kernel, bias, stride=1, dilation=1, padding="valid", causal=False):
    """Cross-correlation of x (B, C_in, N) with kernel (C_out, C_in, K).

    ``causal=True`` is shorthand for ``padding="causal"``: (K-1)*dilation
    zeros on the left so that output t only sees inputs <= t.
    """
    if causal:
        padding = "causal"
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    x, squeeze = _batched(x, 3)
    if stride < 1 or dilation < 1:
        raise ParameterError("stride and dilation must be positive")
    c_out, c_in, k = kernel.shape
    if k < 1:
        raise ParameterError("kernel width must be >= 1")
    if x.shape[1] != c_in:
        raise DimensionError(f"conv1d: input has {x.shape[1]} channels, kernel expects {c_in}")
    if bias.shape != (c_out,):
        raise DimensionError(f"conv1d: bias {bias.shape} vs {c_out} filters")
    n = x.shape[2]
    left, right = _padding(n, k, stride, dilation, padding)
    if n + left + right < dilation * (k - 1) + 1:
        raise DimensionError(
            f"conv1d: receptive field {dilation * (k - 1) + 1} exceeds padded length {n + left + right}")
    xp = x.data
    if left or right:
        xp = np.pad(xp, ((0, 0), (0, 0), (left, right)))
    y = kernels.conv1d_forward(xp, kernel.data, stride, dilation)
    y += bias.data[None, :, None]

    def back(g):
        gxp, gw = kernels.conv1d_backward(xp, kernel.data, g, stride, dilation)
        gx = gxp[:, :, left:left + n] if (left or right) else gxp
        return gx, gw, g.sum(axis=(0, 2))

    return _unbatch(result(y, (x, kernel, bias), back), squeeze)


def weight_norm(v, g):
    """Kernel g * v / ||v|| with the norm taken per output filter."""
    v, g = as_tensor(v), as_tensor(g)
    axes = tuple(range(1, v.ndim))
    norms = np.sqrt(np.sum(np.square(v.data, dtype=np.float64), axis=axes))
    if np.any(norms < WN_EPS):
        raise NumericFailure("weight_norm: direction vector has zero norm")
    shape = (-1,) + (1,) * (v.ndim - 1)
    direction = (v.data / norms.reshape(shape)).astype(v.data.dtype)
    w = g.data.reshape(shape) * direction

    def back(gw):
        dot = np.sum(gw * direction, axis=axes)
        gv = (g.data / norms).reshape(shape) * (gw - direction * dot.reshape(shape))
        return gv.astype(v.data.dtype), dot.astype(g.data.dtype)

    return result(w, (v, g), back)


# -- activations -------------------------------------------------------------

def relu(x):
    x = as_tensor(x)
    mask = x.data > 0
    if _kinks is not None:
        _kinks.append(mask)
    return result(x.data * mask, (x,), lambda g: (g * mask,))


def sigmoid(x):
    x = as_tensor(x)
    y = kernels._numpy.sigmoid(x.data)
    return result(y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x):
    x = as_tensor(x)
    y = np.tanh(x.data)
    return result(y, (x,), lambda g: (g * (1.0 - y * y),))


def softmax(x):
    """Softmax over the last axis, stabilised by subtracting the max."""
    x = as_tensor(x)
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (y * (g - np.sum(g * y, axis=-1, keepdims=True)),)

    return result(y, (x,), back)


def activation(x, kind):
    if kind == "linear":
        return as_tensor(x)
    fn = {"relu": relu, "sigmoid": sigmoid, "tanh": tanh, "softmax": softmax}.get(kind)
    if fn is None:
        raise ParameterError(f"unknown activation {kind!r}")
    return fn(x)


# -- pooling, normalisation, dropout ------------------------------------------

def max_pool(x, window):
    x = as_tensor(x)
    x, squeeze = _batched(x, 3)
    n = x.shape[2]
    if window < 1 or window > n:
        raise DimensionError(f"max_pool: window {window} vs length {n}")
    y, idx = kernels.maxpool_forward(x.data, window)
    if _kinks is not None:
        _kinks.append(idx)
    out = result(y, (x,), lambda g: (kernels.maxpool_backward(g, idx, window, n),))
    return _unbatch(out, squeeze)


def global_average_pool(x):
    """(B, C, N) -> (B, C); (C, N) -> (C,)."""
    x = as_tensor(x)
    n = x.shape[-1]
    y = (np.sum(x.data, axis=-1, dtype=np.float64) / n).astype(x.data.dtype)
    return result(y, (x,), lambda g: (np.repeat(g[..., None] / n, n, axis=-1),))


def pooling(x, kind, window=None):
    if kind == "max":
        return max_pool(x, window)
    if kind == "global_average":
        return global_average_pool(x)
    raise ParameterError(f"unknown pooling kind {kind!r}")


class RunningStats:
    """Mutable running mean / variance pair owned by a batch-norm layer."""

    def __init__(self, channels, dtype):
        self.mean = np.zeros(channels, dtype=dtype)
        self.var = np.ones(channels, dtype=dtype)


def batch_norm(x, gamma, beta, running, train, momentum=0.99, eps=BN_EPS):
    """Per-channel normalisation of (B, C, N) (statistics over batch and time).

    Running statistics move as ``running = momentum * running + (1 - momentum) * batch``.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    x, squeeze = _batched(x, 3)
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError(f"batch_norm: gamma/beta {gamma.shape} vs {c} channels")
    dt = x.data.dtype
    if train:
        mean = np.mean(x.data, axis=(0, 2), dtype=np.float64)
        var = np.mean(np.square(x.data - mean[None, :, None].astype(dt), dtype=np.float64), axis=(0, 2))
        running.mean[...] = momentum * running.mean + (1.0 - momentum) * mean
        running.var[...] = momentum * running.var + (1.0 - momentum) * var
    else:
        mean = running.mean.astype(np.float64)
        var = running.var.astype(np.float64)
    inv = (1.0 / np.sqrt(var + eps)).astype(dt)
    xhat = (x.data - mean[None, :, None].astype(dt)) * inv[None, :, None]
    y = gamma.data[None, :, None] * xhat + beta.data[None, :, None]
    m = x.shape[0] * x.shape[2]

    def back(g):
        dgamma = np.sum(g * xhat, axis=(0, 2))
        dbeta = np.sum(g, axis=(0, 2))
        gx_hat = g * gamma.data[None, :, None]
        if train:
            gx = (inv[None, :, None] / m) * (
                m * gx_hat
                - np.sum(gx_hat, axis=(0, 2))[None, :, None]
                - xhat * np.sum(gx_hat * xhat, axis=(0, 2))[None, :, None])
        else:
            gx = gx_hat * inv[None, :, None]
        return gx.astype(dt), dgamma.astype(dt), dbeta.astype(dt)

    return _unbatch(result(y, (x, gamma, beta), back), squeeze)


def dropout(x, rate, train, rng=None):
    """Inverted dropout: survivors are scaled by 1 / (1 - rate)."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    x = as_tensor(x)
    if not train or rate == 0.0:
        return x
    if rng is None:
        raise ParameterError("dropout in train mode needs an rng")
    keep = rng.uniform(x.shape) >= rate
    mask = (keep / (1.0 - rate)).astype(x.data.dtype)
    return result(x.data * mask, (x,), lambda g: (g * mask,))


# -- recurrent ---------------------------------------------------------------

def lstm(x, kernel, recurrent, bias, reverse=False):
    """Final hidden state of an LSTM over x (B, T, D).

    kernel (D, 4H), recurrent (H, 4H), bias (4H,), gate order i, f, c, o.
    With ``reverse`` the sequence is consumed from the last step to the first.
    """
    x, kernel, recurrent, bias = (as_tensor(t) for t in (x, kernel, recurrent, bias))
    x, squeeze = _batched(x, 3)
    if x.shape[1] == 0:
        raise DimensionError("lstm: empty sequence")
    if x.shape[2] != kernel.shape[0]:
        raise DimensionError(f"lstm: step width {x.shape[2]} vs kernel {kernel.shape}")
    xd = x.data[:, ::-1] if reverse else x.data
    xw = xd @ kernel.data + bias.data
    hs, cs, acts = kernels.lstm_forward(xw, recurrent.data)
    h_last = hs[:, -1].copy()

    def back(g):
        dxw, dwh = kernels.lstm_backward(recurrent.data, hs, cs, acts, g)
        dk = np.tensordot(xd, dxw, axes=([0, 1], [0, 1]))
        db = dxw.sum(axis=(0, 1))
        dx = dxw @ kernel.data.T
        if reverse:
            dx = dx[:, ::-1]
        return np.ascontiguousarray(dx), dk, dwh, db

    return _unbatch(result(h_last, (x, kernel, recurrent, bias), back), squeeze)


# -- losses ------------------------------------------------------------------

def mse_loss(pred, target):
    pred = as_tensor(pred)
    t = np.asarray(target, dtype=pred.data.dtype).reshape(pred.shape)
    diff = pred.data - t
    n = diff.size
    val = (np.sum(np.square(diff, dtype=np.float64)) / n).astype(pred.data.dtype)
    return result(val, (pred,), lambda g: (g * 2.0 * diff / n,))


def crossentropy_loss(probs, labels):
    """Mean of -ln p[label] with probabilities floored at 1e-12."""
    probs = as_tensor(probs)
    labels = np.asarray(labels, dtype=np.int64)
    b, k = probs.shape
    if labels.shape != (b,) or labels.min() < 0 or labels.max() >= k:
        raise ParameterError("crossentropy: labels out of range")
    rows = np.arange(b)
    p = probs.data[rows, labels]
    clipped = np.maximum(p, CE_FLOOR)
    val = (np.sum(-np.log(clipped.astype(np.float64))) / b).astype(probs.data.dtype)

    def back(g):
        out = np.zeros_like(probs.data)
        out[rows, labels] = np.where(p > CE_FLOOR, -g / (b * clipped), 0.0)
        return (out,)

    return result(val, (probs,), back)


def squeeze_excite(x, w1, b1, w2, b2):
    """Channel recalibration: GAP -> dense -> relu -> dense -> sigmoid -> rescale."""
    s = global_average_pool(x)
    s = relu(dense(s, w1, b1))
    s = sigmoid(dense(s, w2, b2))
    return scale_channels(x, s)
