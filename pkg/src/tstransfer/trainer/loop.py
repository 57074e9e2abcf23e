import time

import numpy as np

from ..autodiff import Adam, RngStream, ops
from ..errors import NumericFailure, ParameterError
from ..metrics import score
from ..models import predict
from .history import EpochRecord, RunHistory
from .protocol import Protocol, TrainConfig


def mse(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape or pred.size == 0:
        raise ParameterError("mse needs two non-empty vectors of equal length")
    return float(np.mean((pred - truth) ** 2))


def crossentropy(probs, labels):
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels).ravel()
    if probs.ndim != 2 or probs.shape[0] != labels.size:
        raise ParameterError("crossentropy needs (n, K) probabilities and n labels")
    if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise ParameterError("label out of range")
    p = probs[np.arange(labels.size), labels.astype(np.int64)]
    return float(np.mean(-np.log(np.maximum(p, 1e-12))))


def _check_task(model, ds):
    if model.spec.task != ds.task:
        raise ParameterError(f"model solves {model.spec.task}, dataset is {ds.task}")


def _stream_max(model, ds):
    return ds.stream_max if model.spec.stream_max else None


def _loss(task, out, truth):
    return mse(out, truth) if task == "regression" else crossentropy(out, truth)


def evaluate(model, ds, batch_size=256):
    """Eval-mode MAE (regression) or weighted F1 (classification)."""
    _check_task(model, ds)
    out = predict(model, ds.X, _stream_max(model, ds), batch_size)
    return score(ds.task, out, ds.y, ds.num_classes)


def _validate(model, ds):
    out = predict(model, ds.X, _stream_max(model, ds))
    return _loss(ds.task, out, ds.y), score(ds.task, out, ds.y, ds.num_classes)


def train(model, data, cfg=None, rng=None, on_epoch=None):
    """Fit ``model`` on ``data.train``, driven by ``data.val``; returns a RunHistory.

    The best-validation-loss weights are restored before the test set is scored.
    """
    cfg = cfg or TrainConfig()
    _check_task(model, data.train)
    t0 = time.perf_counter()
    rng = rng if rng is not None else RngStream(cfg.seed)
    shuffle_rng = rng.spawn("shuffle")
    dropout_rng = rng.spawn("dropout")
    opt = Adam(model.parameters(), lr=cfg.base_lr)
    proto = Protocol(cfg)
    train_ds = data.train
    sm = _stream_max(model, train_ds)
    n = len(train_ds)
    epochs = []
    best_loss, best_epoch, best_state = float("inf"), 0, None
    stopped_by = "max_epochs"
    for epoch in range(cfg.max_epochs):
        opt.lr = proto.lr
        perm = shuffle_rng.permutation(n)
        total = 0.0
        try:
            for start in range(0, n, cfg.batch_size):
                idx = perm[start:start + cfg.batch_size]
                opt.zero_grad()
                out = model.forward(train_ds.X[idx], None if sm is None else sm[idx],
                                    train=True, rng=dropout_rng)
                if train_ds.task == "regression":
                    data_loss = ops.mse_loss(out, train_ds.y[idx])
                else:
                    data_loss = ops.crossentropy_loss(out, train_ds.y[idx])
                loss = ops.add(data_loss, model.l2_penalty())
                loss.backward()
                opt.step()
                total += float(data_loss.data) * len(idx)
            val_loss, val_metric = _validate(model, data.val)
        except NumericFailure as exc:
            raise NumericFailure(str(exc), epoch=epoch) from None
        if not (np.isfinite(val_loss) and np.isfinite(total)):
            raise NumericFailure("non-finite loss", epoch=epoch)
        epochs.append(EpochRecord(total / n, val_loss, val_metric, opt.lr))
        if val_loss < best_loss:
            best_loss, best_epoch, best_state = val_loss, epoch, model.state_dict()
        if on_epoch is not None:
            on_epoch(epoch, epochs[-1])
        _, reason = proto.update(epoch, val_loss)
        if reason:
            stopped_by = reason
            break
    model.load_state_dict(best_state)
    test = evaluate(model, data.test)
    return RunHistory(epochs, stopped_by, best_epoch, test, time.perf_counter() - t0)
