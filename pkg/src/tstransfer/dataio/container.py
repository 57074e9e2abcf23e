"""Fixed 64-byte little-endian header shared by dataset and bundle files.

    offset  size  field
    0       8     magic
    8       4     version (uint32)
    12      4     kind (uint32)
    16      4     channels (uint32)
    20      4     length (uint32)
    24      8     count (uint64)
    32      4     num_classes / aux (uint32)
    36      4     dtype code (uint32)
    40      24    reserved, zero
"""
import struct
from dataclasses import dataclass

from ..errors import FormatError

HEADER = struct.Struct("<8sIIIIQII24x")
assert HEADER.size == 64
VERSION = 1


@dataclass
class Header:
    magic: bytes
    version: int
    kind: int
    channels: int
    length: int
    count: int
    aux: int
    dtype_code: int

    def pack(self):
        return HEADER.pack(self.magic, self.version, self.kind, self.channels, self.length,
                           self.count, self.aux, self.dtype_code)


def read_header(buf, magic):
    if len(buf) < HEADER.size:
        raise FormatError(f"truncated header: expected {HEADER.size} bytes, got {len(buf)}",
                          offset=len(buf))
    h = Header(*HEADER.unpack_from(buf, 0))
    if h.magic != magic:
        raise FormatError(f"bad magic {h.magic!r}, expected {magic!r}", offset=0)
    if h.version != VERSION:
        raise FormatError(f"unsupported version {h.version}, expected {VERSION}", offset=8)
    return h
