"""numba-compiled kernels mirroring ``_numpy`` signature for signature.

Convolutions lower to im2col + one BLAS GEMM (``np.dot``); the recurrent
kernels run one batch GEMM per time step with fused elementwise gate loops.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _tanh(z):
    # scalar libm tanh/expm1 are several times slower than exp here
    a = abs(z)
    if a < 1e-5:
        return z
    e = math.exp(-2.0 * a)
    r = (1.0 - e) / (1.0 + e)
    return r if z >= 0 else -r


@njit(cache=True, inline="always")
def _sigmoid(z):
    return 0.5 * (1.0 + _tanh(0.5 * z))


@njit(cache=True)
def _im2col(xp, k_n, stride, dilation, n_out):
    b_n, c_n, _ = xp.shape
    cols = np.empty((c_n * k_n, b_n * n_out), dtype=xp.dtype)
    for c in range(c_n):
        for k in range(k_n):
            row = c * k_n + k
            off = k * dilation
            for b in range(b_n):
                base = b * n_out
                for t in range(n_out):
                    cols[row, base + t] = xp[b, c, off + t * stride]
    return cols


@njit(cache=True)
def conv1d_forward(xp, w, stride, dilation):
    b_n, c_n, n_padded = xp.shape
    o_n, _, k_n = w.shape
    n_out = (n_padded - dilation * (k_n - 1) - 1) // stride + 1
    cols = _im2col(xp, k_n, stride, dilation, n_out)
    y2 = np.dot(np.ascontiguousarray(w.reshape(o_n, c_n * k_n)), cols)
    y = np.empty((b_n, o_n, n_out), dtype=xp.dtype)
    for b in range(b_n):
        for o in range(o_n):
            for t in range(n_out):
                y[b, o, t] = y2[o, b * n_out + t]
    return y


@njit(cache=True)
def conv1d_backward(xp, w, gy, stride, dilation):
    b_n, c_n, n_padded = xp.shape
    o_n, _, k_n = w.shape
    n_out = gy.shape[2]
    g2 = np.empty((o_n, b_n * n_out), dtype=gy.dtype)
    for b in range(b_n):
        for o in range(o_n):
            for t in range(n_out):
                g2[o, b * n_out + t] = gy[b, o, t]
    cols = _im2col(xp, k_n, stride, dilation, n_out)
    gw = np.dot(g2, np.ascontiguousarray(cols.T)).reshape(o_n, c_n, k_n)
    w2 = np.ascontiguousarray(w.reshape(o_n, c_n * k_n).T)
    gcols = np.dot(w2, g2)
    gxp = np.zeros_like(xp)
    for c in range(c_n):
        for k in range(k_n):
            row = c * k_n + k
            off = k * dilation
            for b in range(b_n):
                base = b * n_out
                for t in range(n_out):
                    gxp[b, c, off + t * stride] += gcols[row, base + t]
    return gxp, gw


@njit(cache=True)
def maxpool_forward(x, window):
    b_n, c_n, n = x.shape
    length = n // window
    y = np.empty((b_n, c_n, length), dtype=x.dtype)
    idx = np.empty((b_n, c_n, length), dtype=np.int64)
    for b in range(b_n):
        for c in range(c_n):
            for j in range(length):
                best = 0
                start = j * window
                for s in range(1, window):
                    # strict comparison keeps the first maximal index
                    if x[b, c, start + s] > x[b, c, start + best]:
                        best = s
                idx[b, c, j] = best
                y[b, c, j] = x[b, c, start + best]
    return y, idx


@njit(cache=True)
def maxpool_backward(gy, idx, window, n):
    b_n, c_n, length = gy.shape
    gx = np.zeros((b_n, c_n, n), dtype=gy.dtype)
    for b in range(b_n):
        for c in range(c_n):
            for j in range(length):
                gx[b, c, j * window + idx[b, c, j]] += gy[b, c, j]
    return gx


@njit(cache=True)
def lstm_forward(xw, wh):
    b_n, t_len, g4 = xw.shape
    h_dim = g4 // 4
    hs = np.zeros((b_n, t_len, h_dim), dtype=xw.dtype)
    cs = np.zeros((b_n, t_len, h_dim), dtype=xw.dtype)
    acts = np.zeros((b_n, t_len, g4), dtype=xw.dtype)
    h = np.zeros((b_n, h_dim), dtype=xw.dtype)
    c = np.zeros((b_n, h_dim), dtype=xw.dtype)
    for t in range(t_len):
        # batch GEMM per step; the gates are fused into one elementwise pass
        z = np.dot(h, wh)
        for b in range(b_n):
            for m in range(h_dim):
                i = _sigmoid(xw[b, t, m] + z[b, m])
                f = _sigmoid(xw[b, t, h_dim + m] + z[b, h_dim + m])
                g = _tanh(xw[b, t, 2 * h_dim + m] + z[b, 2 * h_dim + m])
                o = _sigmoid(xw[b, t, 3 * h_dim + m] + z[b, 3 * h_dim + m])
                cm = f * c[b, m] + i * g
                c[b, m] = cm
                h[b, m] = o * _tanh(cm)
                cs[b, t, m] = cm
                hs[b, t, m] = h[b, m]
                acts[b, t, m] = i
                acts[b, t, h_dim + m] = f
                acts[b, t, 2 * h_dim + m] = g
                acts[b, t, 3 * h_dim + m] = o
    return hs, cs, acts


@njit(cache=True)
def lstm_backward(wh, hs, cs, acts, dh_last):
    b_n, t_len, h_dim = hs.shape
    g4 = 4 * h_dim
    dxw = np.zeros((b_n, t_len, g4), dtype=hs.dtype)
    dwh = np.zeros((h_dim, g4), dtype=hs.dtype)
    dh = dh_last.astype(hs.dtype)
    dc = np.zeros((b_n, h_dim), dtype=hs.dtype)
    dz = np.empty((b_n, g4), dtype=hs.dtype)
    h_prev = np.empty((b_n, h_dim), dtype=hs.dtype)
    wh_t = np.ascontiguousarray(wh.T)
    for t in range(t_len - 1, -1, -1):
        for b in range(b_n):
            for m in range(h_dim):
                i = acts[b, t, m]
                f = acts[b, t, h_dim + m]
                g = acts[b, t, 2 * h_dim + m]
                o = acts[b, t, 3 * h_dim + m]
                c_prev = cs[b, t - 1, m] if t > 0 else 0.0
                tc = _tanh(cs[b, t, m])
                dcm = dc[b, m] + dh[b, m] * o * (1.0 - tc * tc)
                dz[b, m] = dcm * g * i * (1.0 - i)
                dz[b, h_dim + m] = dcm * c_prev * f * (1.0 - f)
                dz[b, 2 * h_dim + m] = dcm * i * (1.0 - g * g)
                dz[b, 3 * h_dim + m] = dh[b, m] * tc * o * (1.0 - o)
                dc[b, m] = dcm * f
            for j in range(g4):
                dxw[b, t, j] = dz[b, j]
        if t > 0:
            for b in range(b_n):
                for m in range(h_dim):
                    h_prev[b, m] = hs[b, t - 1, m]
            dwh += np.dot(h_prev.T.copy(), dz)
            dh = np.dot(dz, wh_t)
    return dxw, dwh
