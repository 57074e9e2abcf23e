"""Pure-numpy kernels. Reference path, also used when numba is disabled."""
import numpy as np


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def conv_out_length(n_padded, k, stride, dilation):
    return (n_padded - dilation * (k - 1) - 1) // stride + 1


def _im2col(xp, k, stride, dilation, n_out):
    """(B, C, Np) -> (C*K, B*n_out) column matrix."""
    span = stride * (n_out - 1) + 1
    cols = np.stack([xp[:, :, tap * dilation:tap * dilation + span:stride] for tap in range(k)], axis=2)
    b, c = xp.shape[:2]
    return cols.transpose(1, 2, 0, 3).reshape(c * k, b * n_out)


def conv1d_forward(xp, w, stride, dilation):
    b = xp.shape[0]
    o, _, k = w.shape
    n_out = conv_out_length(xp.shape[2], k, stride, dilation)
    y = w.reshape(o, -1) @ _im2col(xp, k, stride, dilation, n_out)
    return np.ascontiguousarray(y.reshape(o, b, n_out).transpose(1, 0, 2))


def conv1d_backward(xp, w, gy, stride, dilation):
    b, c, _ = xp.shape
    o, _, k = w.shape
    n_out = gy.shape[2]
    g2 = gy.transpose(1, 0, 2).reshape(o, b * n_out)
    gw = (g2 @ _im2col(xp, k, stride, dilation, n_out).T).reshape(w.shape)
    gcols = (w.reshape(o, -1).T @ g2).reshape(c, k, b, n_out)
    span = stride * (n_out - 1) + 1
    gxp = np.zeros_like(xp)
    for tap in range(k):
        start = tap * dilation
        gxp[:, :, start:start + span:stride] += gcols[:, tap].transpose(1, 0, 2)
    return gxp, gw.astype(w.dtype, copy=False)


def maxpool_forward(x, window):
    b, c, n = x.shape
    length = n // window
    xr = x[:, :, :length * window].reshape(b, c, length, window)
    # argmax returns the first maximal index, which fixes tie routing.
    idx = xr.argmax(axis=3)
    y = np.take_along_axis(xr, idx[..., None], axis=3)[..., 0]
    return np.ascontiguousarray(y), idx.astype(np.int64)


def maxpool_backward(gy, idx, window, n):
    b, c, length = gy.shape
    gxr = np.zeros((b, c, length, window), dtype=gy.dtype)
    np.put_along_axis(gxr, idx[..., None], gy[..., None], axis=3)
    gx = np.zeros((b, c, n), dtype=gy.dtype)
    gx[:, :, :length * window] = gxr.reshape(b, c, length * window)
    return gx


def lstm_forward(xw, wh):
    """Run the recurrence. ``xw`` is (B, T, 4H) input projections incl. bias.

    Gate order along the last axis is input, forget, cell, output.
    Returns hidden states, cell states and post-activation gates.
    """
    b, t_len, g4 = xw.shape
    h_dim = g4 // 4
    hs = np.zeros((b, t_len, h_dim), dtype=xw.dtype)
    cs = np.zeros((b, t_len, h_dim), dtype=xw.dtype)
    acts = np.zeros((b, t_len, g4), dtype=xw.dtype)
    h = np.zeros((b, h_dim), dtype=xw.dtype)
    c = np.zeros((b, h_dim), dtype=xw.dtype)
    for t in range(t_len):
        z = xw[:, t] + h @ wh
        i = sigmoid(z[:, :h_dim])
        f = sigmoid(z[:, h_dim:2 * h_dim])
        g = np.tanh(z[:, 2 * h_dim:3 * h_dim])
        o = sigmoid(z[:, 3 * h_dim:])
        c = f * c + i * g
        h = o * np.tanh(c)
        hs[:, t] = h
        cs[:, t] = c
        acts[:, t] = np.concatenate([i, f, g, o], axis=1)
    return hs, cs, acts


def lstm_backward(wh, hs, cs, acts, dh_last):
    """Backpropagate a gradient on the final hidden state through time."""
    b, t_len, h_dim = hs.shape
    dxw = np.zeros((b, t_len, 4 * h_dim), dtype=hs.dtype)
    dwh = np.zeros_like(wh)
    dh = dh_last.astype(hs.dtype, copy=True)
    dc = np.zeros((b, h_dim), dtype=hs.dtype)
    zeros = np.zeros((b, h_dim), dtype=hs.dtype)
    for t in range(t_len - 1, -1, -1):
        a = acts[:, t]
        i = a[:, :h_dim]
        f = a[:, h_dim:2 * h_dim]
        g = a[:, 2 * h_dim:3 * h_dim]
        o = a[:, 3 * h_dim:]
        c_prev = cs[:, t - 1] if t > 0 else zeros
        h_prev = hs[:, t - 1] if t > 0 else zeros
        tc = np.tanh(cs[:, t])
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=1)
        dxw[:, t] = dz
        dwh += h_prev.T @ dz
        dh = dz @ wh.T
        dc = dc * f
    return dxw, dwh
