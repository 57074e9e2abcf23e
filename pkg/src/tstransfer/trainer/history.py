"""RunHistory and its line-delimited JSON form.

Schema version 1: one ``{"kind": "epoch", ...}`` record per epoch, then a
final ``{"kind": "summary", ...}`` record.
"""
import json
import os
from dataclasses import dataclass, field

from ..errors import FormatError

SCHEMA_VERSION = 1


@dataclass
class EpochRecord:
    train_loss: float
    val_loss: float
    val_metric: float
    lr: float


@dataclass
class RunHistory:
    epochs: list
    stopped_by: str
    best_epoch: int
    final_test_score: float
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n_epochs(self):
        return len(self.epochs)

    def curve(self, key="val_metric"):
        return [getattr(e, key) for e in self.epochs]

    @property
    def best_val_loss(self):
        return self.epochs[self.best_epoch].val_loss

    @property
    def best_val_metric(self):
        return self.epochs[self.best_epoch].val_metric

    def records(self, include_wall_time=True):
        out = [{"kind": "epoch", "epoch": i, **e.__dict__} for i, e in enumerate(self.epochs)]
        summary = {"kind": "summary", "schema": SCHEMA_VERSION, "stopped_by": self.stopped_by,
                   "best_epoch": self.best_epoch, "final_test_score": self.final_test_score,
                   "meta": self.meta}
        if include_wall_time:
            summary["wall_time"] = self.wall_time
        out.append(summary)
        return out

    def dumps(self, include_wall_time=True):
        return "".join(json.dumps(r, sort_keys=True) + "\n"
                       for r in self.records(include_wall_time))

    @classmethod
    def loads(cls, text):
        epochs, summary = [], None
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
            if rec.get("kind") == "epoch":
                epochs.append(EpochRecord(rec["train_loss"], rec["val_loss"], rec["val_metric"],
                                          rec["lr"]))
            elif rec.get("kind") == "summary":
                if rec.get("schema") != SCHEMA_VERSION:
                    raise FormatError(f"unsupported history schema {rec.get('schema')}")
                summary = rec
        if summary is None or not epochs:
            raise FormatError("history log lacks a summary record or epochs")
        return cls(epochs, summary["stopped_by"], summary["best_epoch"],
                   summary["final_test_score"], summary.get("wall_time", 0.0),
                   summary.get("meta", {}))

    def save(self, path, include_wall_time=True):
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            fh.write(self.dumps(include_wall_time))
        os.replace(tmp, path)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())
