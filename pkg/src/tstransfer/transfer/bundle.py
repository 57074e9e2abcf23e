"""WeightBundle and its on-disk form.

A bundle file is the 64-byte dataset container header (distinct magic),
then a uint64 length and a UTF-8 JSON block describing the entries, then the
raw little-endian arrays back to back in entry order.
"""
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from ..dataio.container import HEADER, VERSION, Header, read_header
from ..errors import FormatError

BUNDLE_MAGIC = b"TSWBDL\x00\x01"
_LEN = struct.Struct("<Q")


@dataclass(frozen=True)
class WeightBundle:
    """Ordered (name, array) pairs from a model's transferable layers.

    ``input_entries`` names the kernels whose second axis runs over input
    channels; ``gain_entries`` maps a weight-normed input kernel ``v`` to its
    gain ``g``.
    """

    entries: tuple
    source_channels: int
    source_family: str
    provenance: dict = field(default_factory=dict)
    input_replication: int = 1
    input_entries: tuple = ()
    gain_entries: dict = field(default_factory=dict)

    def names(self):
        return [name for name, _ in self.entries]

    def as_dict(self):
        return dict(self.entries)

    def __len__(self):
        return len(self.entries)

    def equals(self, other):
        """Bitwise equality of names, shapes and values."""
        if self.names() != other.names():
            return False
        return all(a.shape == b.shape and a.dtype == b.dtype and np.array_equal(a, b)
                   for (_, a), (_, b) in zip(self.entries, other.entries))


def save_bundle(bundle, path):
    meta = {
        "source_family": bundle.source_family,
        "provenance": bundle.provenance,
        "input_replication": bundle.input_replication,
        "input_entries": list(bundle.input_entries),
        "gain_entries": bundle.gain_entries,
        "entries": [{"name": n, "shape": list(a.shape), "dtype": a.dtype.str.replace(">", "<")}
                    for n, a in bundle.entries],
    }
    blob = json.dumps(meta, sort_keys=True).encode()
    header = Header(BUNDLE_MAGIC, VERSION, 0, bundle.source_channels, 0, len(bundle.entries),
                    bundle.input_replication, 0)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header.pack())
        fh.write(_LEN.pack(len(blob)))
        fh.write(blob)
        for _, a in bundle.entries:
            fh.write(np.ascontiguousarray(a, dtype=a.dtype.newbyteorder("<")).tobytes())
    os.replace(tmp, path)


def load_bundle(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    h = read_header(buf, BUNDLE_MAGIC)
    pos = HEADER.size
    if len(buf) < pos + _LEN.size:
        raise FormatError("truncated bundle metadata length", offset=len(buf))
    (n,) = _LEN.unpack_from(buf, pos)
    pos += _LEN.size
    if len(buf) < pos + n:
        raise FormatError(f"truncated bundle metadata: expected {n} bytes, got {len(buf) - pos}",
                          offset=len(buf))
    try:
        meta = json.loads(buf[pos:pos + n])
    except ValueError as exc:
        raise FormatError(f"unreadable bundle metadata: {exc}", offset=pos) from None
    pos += n
    if len(meta["entries"]) != h.count:
        raise FormatError("entry count disagrees with header", offset=24)
    entries = []
    for e in meta["entries"]:
        dt = np.dtype(e["dtype"])
        size = int(np.prod(e["shape"], dtype=np.int64)) * dt.itemsize
        if len(buf) < pos + size:
            raise FormatError(f"truncated entry {e['name']}: expected {size} bytes, "
                              f"got {len(buf) - pos}", offset=len(buf))
        arr = np.frombuffer(buf, dtype=dt, count=size // dt.itemsize, offset=pos)
        entries.append((e["name"], arr.reshape(e["shape"]).astype(dt.newbyteorder("="))))
        pos += size
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after last entry", offset=pos)
    return WeightBundle(tuple(entries), h.channels, meta["source_family"], meta["provenance"],
                        meta["input_replication"], tuple(meta["input_entries"]),
                        meta["gain_entries"])
