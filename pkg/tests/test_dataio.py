import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tstransfer.autodiff import RngStream
from tstransfer.dataio import (SplitDataset, TimeSeriesDataset, load_canonical, minmax_scale,
                               preprocess, reduce_training, save_canonical, split, synth_task)
from tstransfer.dataio.canonical import MAGIC
from tstransfer.dataio.preprocess import stratified_quota
from tstransfer.errors import DegenerateInstanceError, FormatError, ParameterError


def regression(n, c=2, length=8, seed=0):
    r = RngStream(seed)
    return TimeSeriesDataset(r.normal((n, c, length)), r.normal((n,)), "regression", name="reg")


def classification(n, k=3, c=1, length=6, seed=0, labels=None):
    r = RngStream(seed)
    y = labels if labels is not None else r.integers(0, k, size=n)
    return TimeSeriesDataset(r.normal((n, c, length)), y, "classification", num_classes=k)


# -- canonical format ------------------------------------------------------------

@pytest.mark.parametrize("make", [lambda: regression(7), lambda: classification(9, k=4)])
def test_round_trip_is_bitwise(tmp_path, make):
    ds = make()
    path = tmp_path / "d.tsd"
    save_canonical(ds, path)
    back = load_canonical(path)
    assert back.task == ds.task and back.num_classes == ds.num_classes
    assert back.X.tobytes() == ds.X.tobytes()
    assert np.array_equal(back.y, ds.y)


def test_single_1x4_instance(tmp_path):
    header = struct.pack("<8sIIIIQII24x", MAGIC, 1, 0, 1, 4, 1, 0, 0)
    payload = struct.pack("<5f", 1, 2, 3, 4, 0.5)
    path = tmp_path / "one.tsd"
    path.write_bytes(header + payload)
    ds = load_canonical(path)
    assert (ds.channels, ds.length, len(ds)) == (1, 4, 1)
    np.testing.assert_array_equal(ds.X[0], [[1, 2, 3, 4]])
    assert ds.y[0] == 0.5


def test_truncated_payload_reports_sizes(tmp_path):
    path = tmp_path / "d.tsd"
    save_canonical(regression(3), path)
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(FormatError) as err:
        load_canonical(path)
    assert str(len(data)) in str(err.value) and str(len(data) - 5) in str(err.value)
    assert err.value.offset == len(data) - 5


def test_bad_magic_and_version(tmp_path):
    path = tmp_path / "d.tsd"
    save_canonical(regression(3), path)
    data = bytearray(path.read_bytes())
    bad = bytearray(data)
    bad[0] = ord("X")
    path.write_bytes(bad)
    with pytest.raises(FormatError) as err:
        load_canonical(path)
    assert err.value.offset == 0
    bad = bytearray(data)
    bad[8] = 9
    path.write_bytes(bad)
    with pytest.raises(FormatError) as err:
        load_canonical(path)
    assert err.value.offset == 8


def test_nan_payload_names_record_offset(tmp_path):
    ds = regression(4, c=1, length=3)
    path = tmp_path / "d.tsd"
    save_canonical(ds, path)
    data = bytearray(path.read_bytes())
    rec = 4 * 4  # 3 values + target
    struct.pack_into("<f", data, 64 + 2 * rec + 4, float("nan"))
    path.write_bytes(data)
    with pytest.raises(FormatError) as err:
        load_canonical(path)
    assert err.value.offset == 64 + 2 * rec


def test_truncated_header(tmp_path):
    path = tmp_path / "d.tsd"
    path.write_bytes(MAGIC + b"\x01")
    with pytest.raises(FormatError):
        load_canonical(path)


def test_dataset_invariants():
    with pytest.raises(ParameterError):
        TimeSeriesDataset(np.zeros((2, 1, 3)), [0, 5], "classification", num_classes=3)
    with pytest.raises(ParameterError):
        TimeSeriesDataset(np.zeros((2, 1, 3)), [0, 1], "ranking")


# -- split -------------------------------------------------------------------

@pytest.mark.parametrize("n,expected", [(100, (70, 15, 15)), (20, (14, 3, 3)), (10, (7, 1, 2))])
def test_split_sizes(n, expected):
    sp = split(regression(n), 5)
    assert (len(sp.train), len(sp.val), len(sp.test)) == expected


def test_split_needs_ten():
    with pytest.raises(ParameterError):
        split(regression(9), 0)


@given(st.integers(10, 300), st.integers(0, 2 ** 32))
def test_split_disjoint_and_deterministic(n, seed):
    ds = regression(n, c=1, length=2)
    a, b = split(ds, seed), split(ds, seed)
    ids = [set(a.train.ids), set(a.val.ids), set(a.test.ids)]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    assert set().union(*ids) == set(range(n))
    assert np.array_equal(a.train.ids, b.train.ids)
    assert abs(len(a.train) - 0.7 * n) < 1 and abs(len(a.val) - 0.15 * n) < 1


# -- preprocess ------------------------------------------------------------------

def test_minmax_example():
    scaled, sm = minmax_scale(np.array([[[-4.0, 0.0, 2.0]]]))
    np.testing.assert_allclose(scaled, [[[0, 2 / 3, 1]]])
    assert sm[0] == 4


def test_mask_example():
    train = TimeSeriesDataset(np.array([[[0.0, 1.0]], [[1.0, 0.0]]]), [0.0, 0.0], "regression")
    other = TimeSeriesDataset(np.array([[[0.0, 1.0]]]), [0.0], "regression")
    out, state = preprocess(SplitDataset(train, other, other))
    np.testing.assert_allclose(state.mask, [[0.5, 0.5]])
    np.testing.assert_allclose(out.train.X, [[[-0.5, 0.5]], [[0.5, -0.5]]])


def test_constant_instance_rejected():
    X = np.ones((3, 1, 4))
    X[1] = np.arange(4)
    ds = TimeSeriesDataset(X, np.zeros(3), "regression")
    with pytest.raises(DegenerateInstanceError, match="instance 0"):
        preprocess(SplitDataset(ds, ds, ds))


@given(st.integers(0, 2 ** 32), st.integers(10, 60), st.integers(1, 3), st.integers(2, 20))
def test_preprocess_properties(seed, n, c, length):
    r = RngStream(seed)
    raw = r.normal((n, c, length)) * r.uniform((n, 1, 1), 0.1, 10)
    ds = TimeSeriesDataset(raw, np.zeros(n), "regression")
    sp = split(ds, seed)
    out, state = preprocess(sp)
    # centred training mean per position is zero (direct summation oracle)
    total = np.zeros((c, length))
    for inst in out.train.X.astype(np.float64):
        total += inst
    assert np.all(np.abs(total / len(out.train)) < 1e-6)
    assert out.train.X.min() >= -1 - 1e-6 and out.train.X.max() <= 1 + 1e-6
    scaled, _ = minmax_scale(sp.train.X)
    assert scaled.min() >= 0 and scaled.max() <= 1
    for part in ("train", "val", "test"):
        raw_part = getattr(sp, part).X
        sm = getattr(out, part).stream_max
        assert np.all(sm > 0)
        np.testing.assert_allclose(sm, np.abs(raw_part).reshape(len(raw_part), -1).max(axis=1),
                                   rtol=1e-6)


@given(st.integers(0, 2 ** 32))
def test_no_leakage_from_val_and_test(seed):
    r = RngStream(seed)
    ds = TimeSeriesDataset(r.normal((40, 2, 5)), np.zeros(40), "regression")
    sp = split(ds, 1)
    out1, st1 = preprocess(sp)
    val = sp.val.X.copy()
    val[int(r.integers(0, len(val)))] += r.normal((2, 5)) * 100
    test = sp.test.X.copy()
    test[0] *= -3
    sp2 = SplitDataset(sp.train, sp.val.with_arrays(val), sp.test.with_arrays(test))
    out2, st2 = preprocess(sp2)
    assert np.array_equal(st1.mask, st2.mask)
    assert np.array_equal(out1.train.X, out2.train.X)
    assert np.array_equal(out1.train.stream_max, out2.train.stream_max)


# -- reduction ---------------------------------------------------------------------

def test_reduce_regression_exact_size():
    sp = split(regression(2000, c=1, length=2), 0)
    red = reduce_training(sp, 150, 3)
    assert len(red.train) == 150
    assert red.val is sp.val and red.test is sp.test
    assert set(red.train.ids) <= set(sp.train.ids)
    assert np.array_equal(reduce_training(sp, 150, 3).train.ids, red.train.ids)


def test_reduce_larger_than_train():
    sp = split(regression(20), 0)
    with pytest.raises(ParameterError):
        reduce_training(sp, 15, 0)


def test_reduce_balanced_two_class():
    labels = np.array([0, 1] * 150)
    ds = classification(300, k=2, labels=labels)
    sp = SplitDataset(ds, ds.subset([0]), ds.subset([1]))
    counts = np.bincount(reduce_training(sp, 100, 1).train.y)
    assert abs(counts[0] - 50) <= 1 and abs(counts[1] - 50) <= 1


@given(st.lists(st.integers(0, 40), min_size=2, max_size=5).filter(lambda c: sum(c) > 0),
       st.data())
def test_stratified_quota_within_one(counts, data):
    total = sum(counts)
    size = data.draw(st.integers(1, total))
    q = stratified_quota(counts, size)
    assert q.sum() == size
    for qc, nc in zip(q, counts):
        assert qc <= nc
        assert abs(qc - size * nc / total) <= 1


def test_stratified_reduction_proportions_small_exhaustive():
    labels = np.array([0] * 7 + [1] * 3 + [2] * 10)
    ds = classification(20, k=3, labels=labels)
    sp = SplitDataset(ds, ds.subset([0]), ds.subset([1]))
    for size in range(1, 21):
        counts = np.bincount(reduce_training(sp, size, size).train.y, minlength=3)
        assert counts.sum() == size
        assert np.all(np.abs(counts - size * np.array([7, 3, 10]) / 20) <= 1)


# -- synthetic tasks -----------------------------------------------------------------

def test_shared_filter_identical_seeds_identical():
    params = dict(channels=2, length=32, source_size=50, target_size=50, source_seed=5,
                  target_seed=5, source_task="regression", target_task="regression")
    src, tgt = synth_task("shared_filter_pair", params, seed=1)
    assert np.array_equal(src.X, tgt.X) and np.array_equal(src.y, tgt.y)


def test_synth_shapes_follow_params():
    src, tgt = synth_task("shared_filter_pair", dict(channels=1, length=40, source_size=30,
                                                     target_size=20), seed=2)
    assert src.X.shape == (30, 1, 40) and tgt.X.shape == (20, 1, 40)
    assert tgt.task == "classification" and tgt.num_classes == 4


def test_noise_target_only_mean_predictable():
    _, tgt = synth_task("noise", dict(target_task="regression", target_size=4000), seed=3)
    sp = split(tgt, 0)
    mean_mae = np.mean(np.abs(sp.test.y - sp.train.y.mean()))
    # best achievable MAE for independent targets: the median/mean predictor
    best = min(np.mean(np.abs(sp.test.y - c)) for c in np.linspace(-0.5, 0.5, 201))
    assert abs(mean_mae - best) / best < 0.05
    # inputs carry no information: least squares on features does not beat the mean on test
    feats = lambda X: np.c_[np.ones(len(X)), X.reshape(len(X), -1).std(axis=1),
                            np.abs(X).reshape(len(X), -1).max(axis=1)]
    coef, *_ = np.linalg.lstsq(feats(sp.train.X), sp.train.y, rcond=None)
    lin_mae = np.mean(np.abs(sp.test.y - feats(sp.test.X) @ coef))
    assert lin_mae >= 0.95 * mean_mae
