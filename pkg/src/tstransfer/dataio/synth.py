"""Synthetic task generators for desk-scale experiments.

``shared_filter_pair`` draws a random bank of short filters once; both the
source and the target task place filter-shaped events into noise, so the
features a conv layer learns on one task are useful on the other by
construction. ``noise`` pairs such a source with a target whose labels are
independent of the inputs.
"""
import numpy as np

from ..autodiff import RngStream, derive_seed
from ..errors import ParameterError
from .dataset import TimeSeriesDataset

DEFAULTS = {
    "channels": 3,
    "length": 64,
    "source_size": 1200,
    "target_size": 1400,
    "source_task": "regression",
    "target_task": "classification",
    "num_classes": 4,
    "n_filters": 4,
    "filter_length": 9,
    "noise": 0.3,
    "max_events": 3,
}


def filter_bank(seed, n_filters, filter_length):
    rng = RngStream(derive_seed(seed, "bank"))
    bank = rng.normal((n_filters, filter_length))
    return bank / np.linalg.norm(bank, axis=1, keepdims=True)


def _events(rng, bank, n, channels, length, noise, max_events):
    n_filters, flen = bank.shape
    if flen > length:
        raise ParameterError("filter longer than the series")
    X = rng.normal((n, channels, length), scale=noise)
    gain = rng.uniform((n,), 0.5, 5.0)  # overall amplitude, what stream_max recovers
    counts = rng.integers(1, max_events + 1, size=n)
    info = []
    for i in range(n):
        evs = []
        for _ in range(int(counts[i])):
            f = int(rng.integers(0, n_filters))
            amp = float(rng.uniform((1,), 0.5, 2.0)[0])
            pos = int(rng.integers(0, length - flen + 1))
            chan_gain = rng.uniform((channels,), 0.3, 1.0)
            X[i, :, pos:pos + flen] += amp * chan_gain[:, None] * bank[f][None, :] * 3.0
            evs.append((f, amp))
        X[i] *= gain[i]
        info.append(evs)
    return X, gain, info


def shared_filter_task(size, task, seed, bank_seed, channels=3, length=64, num_classes=4,
                       n_filters=4, filter_length=9, noise=0.3, max_events=3, name="synthetic"):
    """One task over the filter bank identified by ``bank_seed``.

    Regression target: weighted sum of event amplitudes (weights drawn from
    ``seed``) plus log of the instance gain. Classification target: identity
    of the strongest event's filter, modulo ``num_classes``.
    """
    bank = filter_bank(bank_seed, n_filters, filter_length)
    rng = RngStream(derive_seed(seed, "instances"))
    X, gain, info = _events(rng, bank, size, channels, length, noise, max_events)
    if task == "regression":
        w = RngStream(derive_seed(seed, "weights")).uniform((n_filters,), 0.5, 1.5)
        y = np.array([sum(w[f] * a for f, a in evs) + np.log(g) for evs, g in zip(info, gain)])
        return TimeSeriesDataset(X, y, "regression", name=name)
    if task == "classification":
        y = np.array([max(evs, key=lambda e: e[1])[0] % num_classes for evs in info])
        return TimeSeriesDataset(X, y, "classification", num_classes=num_classes, name=name)
    raise ParameterError(f"unknown task kind {task!r}")


def noise_task(size, task, seed, channels=3, length=64, num_classes=4, noise=0.3, name="noise"):
    """Inputs shaped like the shared-filter tasks; targets independent of them."""
    bank = filter_bank(derive_seed(seed, "decoy"), 4, 9)
    rng = RngStream(derive_seed(seed, "instances"))
    X, _, _ = _events(rng, bank, size, channels, length, noise, 3)
    trng = RngStream(derive_seed(seed, "targets"))
    if task == "regression":
        return TimeSeriesDataset(X, trng.normal((size,)), "regression", name=name)
    y = trng.integers(0, num_classes, size=size)
    return TimeSeriesDataset(X, y, "classification", num_classes=num_classes, name=name)


def synth_task(kind, params=None, seed=0):
    """Return (source, target) datasets for ``kind`` in {shared_filter_pair, noise}.

    ``params`` overrides ``DEFAULTS``; ``source_seed`` / ``target_seed``
    default to values derived from ``seed``.
    """
    p = dict(DEFAULTS)
    p.update(params or {})
    src_seed = p.get("source_seed", derive_seed(seed, "source"))
    tgt_seed = p.get("target_seed", derive_seed(seed, "target"))
    common = dict(channels=p["channels"], length=p["length"], num_classes=p["num_classes"],
                  noise=p["noise"])
    source = shared_filter_task(p["source_size"], p["source_task"], src_seed, seed,
                                n_filters=p["n_filters"], filter_length=p["filter_length"],
                                max_events=p["max_events"], name="source", **common)
    if kind == "shared_filter_pair":
        target = shared_filter_task(p["target_size"], p["target_task"], tgt_seed, seed,
                                    n_filters=p["n_filters"], filter_length=p["filter_length"],
                                    max_events=p["max_events"], name="target", **common)
    elif kind == "noise":
        target = noise_task(p["target_size"], p["target_task"], tgt_seed, name="target", **common)
    else:
        raise ParameterError(f"unknown synthetic kind {kind!r}")
    return source, target
