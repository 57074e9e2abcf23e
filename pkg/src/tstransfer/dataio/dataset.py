from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DimensionError, ParameterError


@dataclass
class TimeSeriesDataset:
    """Instances stacked as ``X`` (n, C, N) with targets ``y`` (n,).

    ``ids`` give each instance a stable identity across subsetting, which is
    what the split-disjointness checks compare. ``stream_max`` is filled in
    by preprocessing.
    """

    X: np.ndarray
    y: np.ndarray
    task: str
    num_classes: int = None
    name: str = ""
    ids: np.ndarray = None
    stream_max: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float32)
        if self.task == "classification":
            self.y = np.asarray(self.y, dtype=np.int64)
        else:
            self.y = np.asarray(self.y, dtype=np.float32)
        if self.ids is None:
            self.ids = np.arange(len(self.X), dtype=np.int64)
        self.validate()

    def validate(self):
        if self.X.ndim != 3:
            raise DimensionError(f"X must be (n, C, N), got {self.X.shape}")
        if self.y.shape != (len(self.X),):
            raise DimensionError(f"y must be ({len(self.X)},), got {self.y.shape}")
        if self.task not in ("regression", "classification"):
            raise ParameterError(f"unknown task kind {self.task!r}")
        if self.task == "classification":
            if self.num_classes is None or self.num_classes < 2:
                raise ParameterError("classification datasets need num_classes >= 2")
            if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.num_classes):
                raise ParameterError("class targets must lie in [0, num_classes)")
        if len(self.ids) != len(self.X):
            raise DimensionError("ids length differs from instance count")

    def __len__(self):
        return len(self.X)

    @property
    def channels(self):
        return self.X.shape[1]

    @property
    def length(self):
        return self.X.shape[2]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        sm = None if self.stream_max is None else self.stream_max[idx]
        return replace(self, X=self.X[idx], y=self.y[idx], ids=self.ids[idx], stream_max=sm,
                       meta=dict(self.meta))

    def with_arrays(self, X, stream_max=None):
        return replace(self, X=X, stream_max=stream_max, meta=dict(self.meta))


@dataclass
class SplitDataset:
    train: TimeSeriesDataset
    val: TimeSeriesDataset
    test: TimeSeriesDataset
    split_seed: int = 0

    @property
    def task(self):
        return self.train.task

    def with_train(self, train):
        return SplitDataset(train, self.val, self.test, self.split_seed)
