"""Training protocol: losses, plateau schedule, early stopping, epoch loop."""
from .history import SCHEMA_VERSION, EpochRecord, RunHistory
from .loop import crossentropy, evaluate, mse, train
from .protocol import EarlyStopping, PlateauSchedule, Protocol, TrainConfig, simulate

__all__ = [
    "EarlyStopping", "EpochRecord", "PlateauSchedule", "Protocol", "RunHistory", "SCHEMA_VERSION",
    "TrainConfig", "crossentropy", "evaluate", "mse", "simulate", "train",
]
