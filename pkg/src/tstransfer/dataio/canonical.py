"""Canonical on-disk dataset format.

64-byte header (see ``container``) followed by ``count`` records, each the
C*N float32 observation matrix in row-major order then the target (float32
for regression, int32 class index for classification). All little-endian.
"""
import os

import numpy as np

from ..errors import FormatError
from .container import HEADER, VERSION, Header, read_header
from .dataset import TimeSeriesDataset

MAGIC = b"TSDSET\x00\x01"
_TASK_CODES = {"regression": 0, "classification": 1}
_TASK_NAMES = {v: k for k, v in _TASK_CODES.items()}


def _record_dtype(c, n, classification):
    return np.dtype([("x", "<f4", (c, n)), ("y", "<i4" if classification else "<f4")])


def save_canonical(ds, path):
    cls = ds.task == "classification"
    rec = np.empty(len(ds), dtype=_record_dtype(ds.channels, ds.length, cls))
    rec["x"] = ds.X
    rec["y"] = ds.y
    header = Header(MAGIC, VERSION, _TASK_CODES[ds.task], ds.channels, ds.length, len(ds),
                    ds.num_classes or 0, 1 if cls else 0)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header.pack())
        fh.write(rec.tobytes())
    os.replace(tmp, path)


def load_canonical(path, name=None):
    with open(path, "rb") as fh:
        buf = fh.read()
    h = read_header(buf, MAGIC)
    if h.kind not in _TASK_NAMES:
        raise FormatError(f"unknown task code {h.kind}", offset=12)
    task = _TASK_NAMES[h.kind]
    if h.dtype_code != (1 if task == "classification" else 0):
        raise FormatError(f"target dtype code {h.dtype_code} inconsistent with {task}", offset=36)
    rdt = _record_dtype(h.channels, h.length, task == "classification")
    expected = HEADER.size + h.count * rdt.itemsize
    if len(buf) != expected:
        raise FormatError(f"payload size mismatch: expected {expected} bytes, got {len(buf)}",
                          offset=min(len(buf), expected))
    rec = np.frombuffer(buf, dtype=rdt, count=h.count, offset=HEADER.size)
    finite = np.isfinite(rec["x"].reshape(h.count, -1)).all(axis=1)
    if task == "regression":
        finite &= np.isfinite(rec["y"])
    if not finite.all():
        bad = int(np.argmin(finite))
        raise FormatError(f"non-finite value in record {bad}",
                          offset=HEADER.size + bad * rdt.itemsize)
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return TimeSeriesDataset(X=rec["x"].copy(), y=rec["y"].copy(), task=task,
                             num_classes=h.aux if task == "classification" else None, name=name)
