import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import DegenerateSampleError, ParameterError

EXACT_MAX_N = 15


@dataclass(frozen=True)
class PairedSample:
    """Per-case deltas oriented so that positive means the transferred model did better."""

    deltas: tuple

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=np.float64)
        if d.ndim != 1 or d.size == 0:
            raise ParameterError("paired sample needs at least one delta")
        if not np.all(np.isfinite(d)):
            raise ParameterError("paired sample contains non-finite deltas")


def average_ranks(values):
    """1-based ranks with ties sharing their mean rank."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_lower_tail(doubled_ranks, w2):
    """P(T+ <= w) under random signs; ranks and w given doubled so they are integers."""
    counts = {0: 1}
    for r in doubled_ranks:
        nxt = dict(counts)
        for s, c in counts.items():
            nxt[s + r] = nxt.get(s + r, 0) + c
        counts = nxt
    hits = sum(c for s, c in counts.items() if s <= w2)
    return Fraction(hits, 2 ** len(doubled_ranks))


def wilcoxon(sample):
    """Two-sided signed-ranks test. Returns (W, p) with W = min(T+, T-).

    Zero deltas are discarded. Up to EXACT_MAX_N remaining cases the null
    distribution is enumerated exactly; beyond that a normal approximation
    with tie-corrected variance and continuity correction is used.
    """
    if not isinstance(sample, PairedSample):
        sample = PairedSample(tuple(np.ravel(sample)))
    d = np.asarray(sample.deltas, dtype=np.float64)
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise DegenerateSampleError("all deltas are zero")
    ranks = average_ranks(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    t_minus = float(ranks[d < 0].sum())
    w = min(t_plus, t_minus)
    if n <= EXACT_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        p = 2 * _exact_lower_tail(doubled, int(round(2 * w)))
        return w, float(min(Fraction(1), p))
    mean = n * (n + 1) / 4
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48
    z = (w - mean + 0.5) / math.sqrt(var)
    z = min(z, 0.0)
    p = math.erfc(-z / math.sqrt(2))  # 2 * Phi(z)
    return w, min(1.0, p)
