import numpy as np

from ..autodiff import RngStream
from ..errors import DegenerateInstanceError, ParameterError
from .dataset import SplitDataset


class PreprocessState:
    """Training-set mask plus the raw-amplitude stream_max of every instance."""

    def __init__(self, mask, stream_max):
        self.mask = mask
        self.stream_max = stream_max  # {"train": array, "val": ..., "test": ...}


def split(ds, seed):
    """Seeded shuffle, then floor(0.7n) train, floor(0.15n) val, rest test."""
    n = len(ds)
    if n < 10:
        raise ParameterError(f"need at least 10 instances to split, got {n}")
    perm = RngStream(seed).permutation(n)
    n_train = n * 70 // 100
    n_val = n * 15 // 100
    return SplitDataset(ds.subset(perm[:n_train]), ds.subset(perm[n_train:n_train + n_val]),
                        ds.subset(perm[n_train + n_val:]), split_seed=seed)


def minmax_scale(X, name=""):
    """Per-instance min-max scaling to [0, 1]; also returns stream_max = max(|m|, |M|)."""
    X = np.asarray(X, dtype=np.float64)
    flat = X.reshape(len(X), -1)
    lo = flat.min(axis=1)
    hi = flat.max(axis=1)
    constant = hi == lo
    if constant.any():
        raise DegenerateInstanceError(
            f"{name or 'dataset'}: instance {int(np.argmax(constant))} is constant; "
            "min-max scaling is undefined")
    span = (hi - lo)[:, None, None]
    scaled = (X - lo[:, None, None]) / span
    stream_max = np.maximum(np.abs(lo), np.abs(hi))
    return scaled, stream_max


def preprocess(split_ds):
    """Scale every subset, centre it with the training-set mask.

    The mask is the per-position mean of the scaled training instances only.
    """
    scaled = {}
    sms = {}
    for part in ("train", "val", "test"):
        ds = getattr(split_ds, part)
        scaled[part], sms[part] = minmax_scale(ds.X, f"{ds.name}/{part}")
    mask = scaled["train"].mean(axis=0)
    out = {}
    for part in ("train", "val", "test"):
        ds = getattr(split_ds, part)
        centred = (scaled[part] - mask[None]).astype(np.float32)
        out[part] = ds.with_arrays(centred, stream_max=sms[part].astype(np.float32))
    state = PreprocessState(mask.astype(np.float32), {k: v.astype(np.float32) for k, v in sms.items()})
    return SplitDataset(out["train"], out["val"], out["test"], split_ds.split_seed), state


def stratified_quota(counts, size):
    """Per-class sample sizes summing to ``size`` (largest remainder rule)."""
    counts = np.asarray(counts, dtype=np.int64)
    total = counts.sum()
    exact = counts * size / total
    quota = np.floor(exact).astype(np.int64)
    remainder = exact - quota
    # ties broken by lower class index
    for c in sorted(range(len(counts)), key=lambda c: (-remainder[c], c)):
        if quota.sum() >= size:
            break
        if quota[c] < counts[c]:
            quota[c] += 1
    return quota


def reduce_training(split_ds, size, seed):
    """Subsample the training set to exactly ``size`` instances; val/test untouched.

    Classification keeps class proportions (stratified sampling).
    """
    train = split_ds.train
    if size > len(train):
        raise ParameterError(f"cannot reduce {len(train)} training instances to {size}")
    if size < 1:
        raise ParameterError("reduced size must be positive")
    rng = RngStream(seed)
    if train.task == "classification":
        picked = []
        counts = np.bincount(train.y, minlength=train.num_classes)
        for c, q in enumerate(stratified_quota(counts, size)):
            members = np.flatnonzero(train.y == c)
            if q:
                picked.append(members[rng.choice(len(members), int(q))])
        idx = np.sort(np.concatenate(picked))
    else:
        idx = np.sort(rng.choice(len(train), size))
    return split_ds.with_train(train.subset(idx))
