import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.metrics import f1_score

from oracles import convergence_reference
from tstransfer.autodiff import RngStream
from tstransfer.errors import ParameterError
from tstransfer.metrics import (ConvergenceInput, convergence_rate, convergence_rate_flagged, mae,
                                weighted_f1)


def test_mae_examples():
    assert mae([1, 2, 3], [1, 2, 3]) == 0
    assert mae([2, 0], [0, 0]) == 1
    with pytest.raises(ParameterError):
        mae([1], [1, 2])


def test_mae_summation_oracle():
    r = RngStream(1)
    a, b = r.normal((777,)), r.normal((777,))
    total = 0.0
    for x, y in zip(a, b):
        total += abs(x - y)
    assert mae(a, b) == pytest.approx(total / 777, rel=1e-9)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), st.data())
def test_mae_symmetric(a, data):
    b = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=len(a), max_size=len(a)))
    assert mae(a, b) == mae(b, a)


def test_weighted_f1_examples():
    assert weighted_f1([0, 1, 2], [0, 1, 2], 3) == 1.0
    assert weighted_f1([0, 0, 0, 0], [0, 0, 1, 1], 2) == pytest.approx(1 / 3)
    with pytest.raises(ParameterError):
        weighted_f1([0, 3], [0, 1], 3)


@given(st.integers(0, 2 ** 32), st.integers(1, 60), st.integers(2, 6))
def test_weighted_f1_matches_sklearn(seed, n, k):
    r = RngStream(seed)
    truth, pred = r.integers(0, k, size=n), r.integers(0, k, size=n)
    ref = f1_score(truth, pred, labels=list(range(k)), average="weighted", zero_division=0)
    assert weighted_f1(pred, truth, k) == pytest.approx(ref, abs=1e-12)


@given(st.integers(0, 2 ** 32))
def test_weighted_f1_permutation_invariant(seed):
    r = RngStream(seed)
    truth, pred = r.integers(0, 4, size=30), r.integers(0, 4, size=30)
    perm = r.permutation(30)
    assert weighted_f1(pred, truth, 4) == pytest.approx(weighted_f1(pred[perm], truth[perm], 4),
                                                        abs=1e-15)


def test_weighted_f1_equals_accuracy_when_perfect_precision_balanced():
    # classes 0,1 balanced; the only errors predict an unused class 2 -> precision 1 for 0 and 1
    truth = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    pred = np.array([0, 0, 0, 2, 1, 1, 1, 2])
    f1_0 = 2 * 1 * 0.75 / 1.75
    assert weighted_f1(pred, truth, 3) == pytest.approx(f1_0)
    # and with recall 1 / precision 1 everywhere it equals accuracy exactly
    assert weighted_f1(truth, truth, 3) == np.mean(truth == truth)


def test_convergence_examples():
    assert convergence_rate([0, 1, 1, 1], "classification") == 0.75
    assert convergence_rate([0, 1 / 3, 2 / 3, 1], "classification") == pytest.approx(0.5)
    assert convergence_rate([4, 2, 1, 1], "regression") == pytest.approx(2 / 3)


def test_constant_curve_flagged():
    assert convergence_rate_flagged(ConvergenceInput((0.4, 0.4), "classification")) == (1.0, True)
    assert convergence_rate_flagged(ConvergenceInput((0.4,), "regression")) == (1.0, True)


def test_convergence_input_validation():
    with pytest.raises(Exception):
        ConvergenceInput((), "classification")
    with pytest.raises(ParameterError):
        ConvergenceInput((1.0, float("nan")), "classification")


curves = st.lists(st.floats(-100, 100), min_size=1, max_size=40)


@given(curves, st.sampled_from(["classification", "regression"]))
def test_convergence_bounds_and_oracle(curve, task):
    rate = convergence_rate(curve, task)
    assert 0 <= rate <= 1
    assert rate == pytest.approx(convergence_reference(curve, task == "classification"), abs=1e-9)


@given(curves, st.floats(0.01, 100), st.floats(-100, 100),
       st.sampled_from(["classification", "regression"]))
def test_convergence_affine_invariant(curve, a, b, task):
    c = np.asarray(curve)
    if np.ptp(c) < 1e-3:
        return
    assert convergence_rate(list(a * c + b), task) == pytest.approx(convergence_rate(curve, task),
                                                                    abs=1e-6)


@given(curves)
def test_convergence_monotone_shape(curve):
    c = list(curve)
    base = convergence_rate(c, "classification")
    assert convergence_rate(c + [max(c)], "classification") >= base - 1e-12
    assert convergence_rate([min(c)] + c, "classification") <= base + 1e-12
