"""Datasets: canonical file format, splitting, preprocessing, synthetic tasks."""
from .canonical import load_canonical, save_canonical
from .dataset import SplitDataset, TimeSeriesDataset
from .preprocess import PreprocessState, minmax_scale, preprocess, reduce_training, split
from .synth import noise_task, shared_filter_task, synth_task

__all__ = [
    "PreprocessState", "SplitDataset", "TimeSeriesDataset", "load_canonical", "minmax_scale",
    "noise_task", "preprocess", "reduce_training", "save_canonical", "shared_filter_task",
    "split", "synth_task",
]
