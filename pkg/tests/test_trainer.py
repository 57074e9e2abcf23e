import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import protocol_reference
from tstransfer.autodiff import RngStream, ops
from tstransfer.dataio import preprocess, reduce_training, split, synth_task
from tstransfer.errors import NumericFailure, ParameterError
from tstransfer.models import ArchitectureSpec, build
from tstransfer.trainer import (PlateauSchedule, RunHistory, TrainConfig, crossentropy, evaluate,
                                mse, simulate, train)


def test_mse_examples():
    assert mse([1, 2], [1, 2]) == 0
    assert mse([2, 0], [0, 0]) == 2
    with pytest.raises(ParameterError):
        mse([1, 2], [1])


def test_mse_matches_summation_oracle():
    r = RngStream(0)
    a, b = r.normal((1000,)), r.normal((1000,))
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    assert mse(a, b) == pytest.approx(total / 1000, rel=1e-9)


def test_crossentropy_examples():
    assert crossentropy([[0, 1, 0]], [1]) == 0
    assert crossentropy([[0.25] * 4], [2]) == pytest.approx(math.log(4), abs=1e-12)
    assert crossentropy([[0.5, 0.5], [0.75, 0.25]], [0, 1]) == pytest.approx(
        (math.log(2) + math.log(4)) / 2, abs=1e-12)
    assert crossentropy([[1.0, 0.0]], [1]) == pytest.approx(-math.log(1e-12))
    with pytest.raises(ParameterError):
        crossentropy([[0.5, 0.5]], [2])


def test_config_validation():
    for bad in (dict(plateau_factor=1.0), dict(plateau_factor=0.0), dict(lr_floor=0.0),
                dict(plateau_patience=0), dict(early_stop_patience=0)):
        with pytest.raises(ParameterError):
            TrainConfig(**bad)


def test_decreasing_losses_never_cut():
    cfg = TrainConfig()
    lrs, last, reason = simulate([1.0 / (e + 1) for e in range(300)], cfg)
    assert reason == "max_epochs" and last == 249
    assert set(lrs) == {0.001}


def test_flat_losses_schedule():
    lrs, last, reason = simulate([1.0] * 300, TrainConfig())
    assert lrs[:5] == [0.001] * 5 and lrs[5] == pytest.approx(0.0002)
    assert last == 10 and reason == "early_stop"


def test_plateau_lr_sequence_clamps():
    s = PlateauSchedule(1e-3)
    seen = []
    for _ in range(40):
        seen.append(s.update(1.0))
    distinct = sorted(set(seen), reverse=True)
    np.testing.assert_allclose(distinct, [1e-3, 2e-4, 4e-5, 8e-6, 1.6e-6, 5e-7], rtol=1e-12)
    assert min(seen) == 5e-7


def random_loss_sequence(r, length):
    kind = int(r.integers(0, 3))
    if kind == 0:
        return list(r.uniform((length,), 0, 1))
    if kind == 1:  # rounded values make exact ties likely
        return list(np.round(r.uniform((length,), 0, 1), 1))
    steps = r.normal((length,)) * 0.05 - 0.01
    return list(1 + np.cumsum(steps))


def protocol_matches_reference(seed):
    r = RngStream(seed)
    losses = random_loss_sequence(r, int(r.integers(1, 300)))
    cfg = TrainConfig()
    got = simulate(losses, cfg)
    want = protocol_reference(losses)
    return got[1:] == want[1:] and np.allclose(got[0], want[0], rtol=1e-12, atol=0)


@given(st.integers(0, 2 ** 40))
def test_protocol_matches_reference(seed):
    assert protocol_matches_reference(seed)


# -- training loop ---------------------------------------------------------------

@pytest.fixture(scope="module")
def small_task():
    _, tgt = synth_task("shared_filter_pair", dict(length=32, target_size=300,
                                                   target_task="classification"), seed=2)
    return preprocess(reduce_training(split(tgt, 0), 120, 0))[0]


@pytest.fixture(scope="module")
def small_regression():
    src, _ = synth_task("shared_filter_pair", dict(length=32, source_size=200), seed=2)
    return preprocess(split(src, 0))[0]


def test_loss_decreases_over_first_steps():
    src, _ = synth_task("shared_filter_pair", dict(length=32, source_size=64), seed=4)
    data = preprocess(split(src, 0))[0]
    failures = 0
    for seed in range(6):
        m = build(ArchitectureSpec(family="tcn", input_length=32, scale=0.25, seed=seed))
        from tstransfer.autodiff import Adam
        opt = Adam(m.parameters())
        xb, yb = data.train.X[:32], data.train.y[:32]
        losses = []
        for _ in range(6):
            opt.zero_grad()
            loss = ops.mse_loss(m(xb, train=True, rng=RngStream(seed)), yb)
            losses.append(float(loss.data))
            loss.backward()
            opt.step()
        failures += not losses[5] < losses[0]
    assert failures <= 1


def test_train_records_history(small_task):
    m = build(ArchitectureSpec(family="tcn", input_length=32, scale=0.25, task="classification",
                               num_classes=4))
    h = train(m, small_task, TrainConfig(max_epochs=12, seed=1))
    assert 1 <= h.n_epochs <= 12
    assert h.stopped_by in ("early_stop", "max_epochs")
    lrs = h.curve("lr")
    assert all(a >= b for a, b in zip(lrs, lrs[1:])) and min(lrs) >= 5e-7
    assert 0 <= h.best_epoch < h.n_epochs
    assert h.best_val_loss == min(h.curve("val_loss"))
    assert 0 <= h.final_test_score <= 1


def test_best_weights_restored(small_regression):
    m = build(ArchitectureSpec(family="magnet", input_length=32, scale=0.25))
    h = train(m, small_regression, TrainConfig(max_epochs=8, seed=2))
    from tstransfer.models import predict
    val_pred = predict(m, small_regression.val.X)
    assert mse(val_pred, small_regression.val.y) == pytest.approx(h.best_val_loss, rel=1e-6)


def test_training_is_deterministic(small_task):
    runs = []
    for _ in range(2):
        m = build(ArchitectureSpec(family="mlstm_fcn", input_length=32, scale=0.25,
                                   task="classification", num_classes=4, seed=3))
        runs.append(train(m, small_task, TrainConfig(max_epochs=3, seed=5)))
    assert runs[0].dumps(include_wall_time=False) == runs[1].dumps(include_wall_time=False)


def test_task_mismatch(small_task):
    m = build(ArchitectureSpec(family="tcn", input_length=32, scale=0.25))
    with pytest.raises(ParameterError):
        train(m, small_task, TrainConfig(max_epochs=1))
    with pytest.raises(ParameterError):
        evaluate(m, small_task.test)


def test_non_finite_loss_reports_epoch(small_regression):
    m = build(ArchitectureSpec(family="tcn", input_length=32, scale=0.25))
    # an absurd learning rate blows the weights up within a few epochs
    with pytest.raises(NumericFailure) as err:
        train(m, small_regression, TrainConfig(base_lr=1e30, max_epochs=20))
    assert err.value.epoch is not None


def test_evaluate_examples(small_regression):
    m = build(ArchitectureSpec(family="tcn", input_length=32, scale=0.25))
    for layer in m.head:
        for p in layer.params.values():
            p.data[...] = 0
    zero = small_regression.test.subset(np.arange(5))
    zero.y = np.zeros(5, dtype=np.float32)
    assert evaluate(m, zero) == 0.0
    a, b = evaluate(m, small_regression.test), evaluate(m, small_regression.test)
    assert a == b


def test_eval_ignores_dropout_rate(small_regression):
    from tstransfer.models.architectures import MagNet
    m = build(ArchitectureSpec(family="magnet", input_length=32, scale=0.25))
    a = evaluate(m, small_regression.test)
    m.dropout = 0.9
    assert evaluate(m, small_regression.test) == a
    assert MagNet.dropout == 0.2


def test_history_round_trip(tmp_path, small_task):
    m = build(ArchitectureSpec(family="tcn", input_length=32, scale=0.25, task="classification",
                               num_classes=4))
    h = train(m, small_task, TrainConfig(max_epochs=2))
    h.save(tmp_path / "h.jsonl")
    back = RunHistory.load(tmp_path / "h.jsonl")
    assert back.epochs == h.epochs and back.best_epoch == h.best_epoch
    assert back.final_test_score == h.final_test_score and back.wall_time == h.wall_time
