"""Validation-loss driven learning-rate plateau cuts and early stopping.

Both counters follow the usual Keras callback semantics and run
independently: a learning-rate cut does not reset the early-stopping wait.
"""
from dataclasses import dataclass, field

from ..errors import ParameterError

MIN_DELTA = 1e-8


@dataclass
class TrainConfig:
    base_lr: float = 1e-3
    plateau_patience: int = 4
    plateau_factor: float = 0.2
    lr_floor: float = 5e-7
    early_stop_patience: int = 10
    max_epochs: int = 250
    batch_size: int = 32
    seed: int = 0
    min_delta: float = MIN_DELTA

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0 < self.plateau_factor < 1:
            raise ParameterError("plateau_factor must lie in (0, 1)")
        if not self.lr_floor > 0:
            raise ParameterError("lr_floor must be positive")
        if self.base_lr <= 0:
            raise ParameterError("base_lr must be positive")
        if self.plateau_patience < 1 or self.early_stop_patience < 1:
            raise ParameterError("patience values must be at least 1")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ParameterError("max_epochs and batch_size must be positive")

    def to_dict(self):
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class PlateauSchedule:
    def __init__(self, lr, patience=4, factor=0.2, floor=5e-7, min_delta=MIN_DELTA):
        self.lr = lr
        self.patience, self.factor, self.floor, self.min_delta = patience, factor, floor, min_delta
        self.best = float("inf")
        self.wait = 0

    def update(self, loss):
        """Feed one epoch's val loss; returns the lr for the next epoch."""
        if loss < self.best - self.min_delta:
            self.best = loss
            self.wait = 0
        else:
            self.wait += 1
            if self.wait >= self.patience and self.lr > self.floor:
                self.lr = max(self.lr * self.factor, self.floor)
                self.wait = 0
        return self.lr


class EarlyStopping:
    def __init__(self, patience=10, min_delta=MIN_DELTA):
        self.patience, self.min_delta = patience, min_delta
        self.best = float("inf")
        self.wait = 0

    def update(self, loss):
        """Feed one epoch's val loss; True means stop after this epoch."""
        if loss < self.best - self.min_delta:
            self.best = loss
            self.wait = 0
        else:
            self.wait += 1
        return self.wait >= self.patience


@dataclass
class Protocol:
    """Both automata together plus the epoch cap."""

    cfg: TrainConfig
    schedule: PlateauSchedule = field(init=False)
    stopper: EarlyStopping = field(init=False)

    def __post_init__(self):
        c = self.cfg
        self.schedule = PlateauSchedule(c.base_lr, c.plateau_patience, c.plateau_factor,
                                        c.lr_floor, c.min_delta)
        self.stopper = EarlyStopping(c.early_stop_patience, c.min_delta)

    @property
    def lr(self):
        return self.schedule.lr

    def update(self, epoch, val_loss):
        """Returns (next_lr, stop_reason or None)."""
        stop = self.stopper.update(val_loss)
        lr = self.schedule.update(val_loss)
        if stop:
            return lr, "early_stop"
        if epoch + 1 >= self.cfg.max_epochs:
            return lr, "max_epochs"
        return lr, None


def simulate(val_losses, cfg):
    """Drive the protocol with scripted losses.

    Returns (per-epoch lrs used, stop epoch, stop reason); losses past the
    stop are ignored. Handy for checking the automaton without training.
    """
    proto = Protocol(cfg)
    lrs = []
    for epoch, loss in enumerate(val_losses):
        lrs.append(proto.lr)
        _, reason = proto.update(epoch, loss)
        if reason:
            return lrs, epoch, reason
    return lrs, len(val_losses) - 1, None
