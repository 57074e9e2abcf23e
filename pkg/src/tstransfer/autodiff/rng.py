import hashlib

import numpy as np


class RngStream:
    """Seeded random stream backed by PCG64.

    PCG64 output is specified bit-for-bit by numpy, so the same seed and the
    same sequence of draws give the same numbers on every platform.
    ``counter`` counts the values drawn so far.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = 0
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, shape, low=0.0, high=1.0):
        out = self._gen.uniform(low, high, size=shape)
        self.counter += int(np.prod(shape))
        return out

    def normal(self, shape, scale=1.0):
        out = self._gen.normal(0.0, scale, size=shape)
        self.counter += int(np.prod(shape))
        return out

    def truncated_normal(self, shape, scale=1.0):
        # Keras-style: redraw anything beyond two standard deviations.
        out = self._gen.normal(0.0, 1.0, size=shape)
        bad = np.abs(out) > 2.0
        while bad.any():
            out[bad] = self._gen.normal(0.0, 1.0, size=int(bad.sum()))
            bad = np.abs(out) > 2.0
        self.counter += int(np.prod(shape))
        return out * scale

    def permutation(self, n: int):
        self.counter += n
        return self._gen.permutation(n)

    def integers(self, low, high, size=None):
        self.counter += 1 if size is None else int(np.prod(size))
        return self._gen.integers(low, high, size=size)

    def choice(self, n, size, replace=False):
        self.counter += size
        return self._gen.choice(n, size=size, replace=replace)

    def spawn(self, *labels) -> "RngStream":
        """Child stream whose seed depends only on this seed and ``labels``."""
        return RngStream(derive_seed(self.seed, *labels))


def derive_seed(*parts) -> int:
    """Injective-in-practice 64-bit seed from an ordered tuple of labels."""
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
