"""Hot inner loops with two interchangeable backends.

The numba backend is used when numba imports and ``TSTRANSFER_NUMBA`` is not
set to a false value (``0``, ``false``, ``no``, ``off``). Otherwise the
pure-numpy path runs. ``set_backend`` switches at runtime.
"""
import os

import numpy as np

from . import _numpy

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

__all__ = [
    "backend", "set_backend", "available_backends",
    "conv1d_forward", "conv1d_backward",
    "maxpool_forward", "maxpool_backward",
    "lstm_forward", "lstm_backward",
]

_FALSE = {"0", "false", "no", "off"}


def _initial():
    wanted = os.environ.get("TSTRANSFER_NUMBA", "1").strip().lower()
    if _numba is not None and wanted not in _FALSE:
        return _numba
    return _numpy


_active = _initial()


def available_backends():
    return ["numpy"] + (["numba"] if _numba is not None else [])


def backend():
    return "numba" if _active is _numba else "numpy"


def set_backend(name):
    global _active
    if name == "numba":
        if _numba is None:
            raise RuntimeError("numba is not importable")
        _active = _numba
    elif name == "numpy":
        _active = _numpy
    else:
        raise ValueError(f"unknown backend {name!r}")


def _contig(a):
    return a if a.flags.c_contiguous else np.ascontiguousarray(a)


def conv1d_forward(xp, w, stride, dilation):
    return _active.conv1d_forward(_contig(xp), _contig(w), int(stride), int(dilation))


def conv1d_backward(xp, w, gy, stride, dilation):
    return _active.conv1d_backward(_contig(xp), _contig(w), _contig(gy), int(stride), int(dilation))


def maxpool_forward(x, window):
    return _active.maxpool_forward(_contig(x), int(window))


def maxpool_backward(gy, idx, window, n):
    return _active.maxpool_backward(_contig(gy), _contig(idx), int(window), int(n))


def lstm_forward(xw, wh):
    return _active.lstm_forward(_contig(xw), _contig(wh))


def lstm_backward(wh, hs, cs, acts, dh_last):
    return _active.lstm_backward(_contig(wh), hs, cs, acts, _contig(dh_last))

