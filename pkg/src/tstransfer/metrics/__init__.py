"""Final-score metrics and the convergence rate of a per-epoch metric curve."""
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, ParameterError

__all__ = ["ConvergenceInput", "convergence_rate", "convergence_rate_flagged", "mae",
           "weighted_f1", "per_class_f1", "score", "higher_is_better"]


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise ParameterError(f"length mismatch: {pred.size} predictions, {truth.size} targets")
    if pred.size == 0:
        raise ParameterError("need at least one instance")
    return pred, truth


def mae(pred, truth):
    pred, truth = _pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def _labels(a, num_classes, what):
    a = np.asarray(a).ravel()
    if a.size and (not np.issubdtype(a.dtype, np.integer)):
        if not np.all(a == np.round(a)):
            raise ParameterError(f"{what} must be integer class indices")
        a = a.astype(np.int64)
    if a.size and (a.min() < 0 or a.max() >= num_classes):
        raise ParameterError(f"{what} outside [0, {num_classes})")
    return a.astype(np.int64)


def per_class_f1(pred_labels, truth, num_classes):
    """One-vs-all F1 per class and the class supports."""
    pred = _labels(pred_labels, num_classes, "predicted labels")
    true = _labels(truth, num_classes, "true labels")
    if pred.shape != true.shape:
        raise ParameterError(f"length mismatch: {pred.size} predictions, {true.size} targets")
    if pred.size == 0:
        raise ParameterError("need at least one instance")
    tp = np.bincount(true[pred == true], minlength=num_classes).astype(np.float64)
    n_pred = np.bincount(pred, minlength=num_classes).astype(np.float64)
    support = np.bincount(true, minlength=num_classes).astype(np.float64)
    # F1 = 2tp / (predicted + actual); 0 when both are empty
    denom = n_pred + support
    f1 = np.divide(2 * tp, denom, out=np.zeros(num_classes), where=denom > 0)
    return f1, support


def weighted_f1(pred_labels, truth, num_classes):
    f1, support = per_class_f1(pred_labels, truth, num_classes)
    return float(np.sum(f1 * support) / support.sum())


def higher_is_better(task):
    return task == "classification"


def score(task, pred, truth, num_classes=None):
    """MAE for regression; weighted F1 of argmax predictions for classification."""
    if task == "regression":
        return mae(pred, truth)
    if task == "classification":
        pred = np.asarray(pred)
        labels = pred.argmax(axis=1) if pred.ndim == 2 else pred
        return weighted_f1(labels, truth, num_classes)
    raise ParameterError(f"unknown task kind {task!r}")


@dataclass(frozen=True)
class ConvergenceInput:
    curve: tuple
    task: str

    def __post_init__(self):
        c = np.asarray(self.curve, dtype=np.float64)
        if c.ndim != 1 or c.size == 0:
            raise DimensionError("convergence curve must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ParameterError("convergence curve contains non-finite values")
        if self.task not in ("regression", "classification"):
            raise ParameterError(f"unknown task kind {self.task!r}")


def convergence_rate_flagged(inp):
    """(rate, degenerate). Rectangle rule with unit epoch width.

    Classification curves (F1) measure area above their minimum, regression
    curves (MAE) area below their maximum, both relative to the bounding box.
    A constant curve gives (1.0, True).
    """
    c = np.asarray(inp.curve, dtype=np.float64)
    lo, hi = c.min(), c.max()
    if hi == lo:
        return 1.0, True
    if inp.task == "classification":
        area = np.sum(c - lo)
    else:
        area = np.sum(hi - c)
    rate = float(area / (c.size * (hi - lo)))
    return min(1.0, max(0.0, rate)), False


def convergence_rate(inp, task=None):
    if not isinstance(inp, ConvergenceInput):
        inp = ConvergenceInput(tuple(inp), task)
    return convergence_rate_flagged(inp)[0]
