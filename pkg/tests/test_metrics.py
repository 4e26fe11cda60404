import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparsetomo.metrics import TrialRecord, fidelity, merge_groups, recovery_probability


def rec(f):
    return TrialRecord(7, 35.0, 0.02, 0, f, 0.01, 10, f > 0.95)


def test_fidelity_examples():
    p = np.array([0.2, 0.3, 0.5])
    assert math.isclose(fidelity(p, p), 1.0, abs_tol=1e-15)
    assert fidelity([0.5, 0.5, 0], [0, 0, 1]) == 0.0
    assert math.isclose(fidelity([0.5, 0.5], [1, 0]), math.sqrt(0.5), rel_tol=1e-15)
    assert math.isclose(fidelity([0.5, 0.5], [1, 0]), 0.70711, abs_tol=1e-5)


def test_fidelity_normalises_inputs():
    assert math.isclose(fidelity([1, 1], [3, 3]), 1.0, abs_tol=1e-15)
    assert fidelity([0.1, 0.0], [0.2, 0.0]) == 1.0


def test_fidelity_rejects_negative():
    with pytest.raises(ValueError):
        fidelity([0.5, -1e-6], [0.5, 0.5])
    assert fidelity([1.0, -1e-13], [1.0, 0.0]) == 1.0


def test_fidelity_length_mismatch():
    with pytest.raises(ValueError):
        fidelity([1, 0], [1, 0, 0])


vec = arrays(np.float64, 12, elements=st.floats(0, 1))


@given(vec, vec)
@settings(max_examples=200)
def test_fidelity_bounds_and_symmetry(p, q):
    f = fidelity(p, q)
    assert 0.0 <= f <= 1.0
    assert f == fidelity(q, p)


@given(vec)
@settings(max_examples=100)
def test_fidelity_self_is_one(p):
    if p.sum() > 0:
        assert abs(fidelity(p, p) - 1) < 1e-12


def test_fidelity_cauchy_schwarz_equality_case():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p, q = rng.random(30), rng.random(30)
        f = fidelity(p, q)
        assert f < 1.0
        assert abs(f - np.sum(np.sqrt(p / p.sum() * q / q.sum()))) < 1e-14


def test_recovery_probability_examples():
    assert recovery_probability([rec(1.0)] * 4) == 1.0
    assert recovery_probability([rec(0.99), rec(0.90)]) == 0.5
    assert recovery_probability([rec(0.2), rec(0.01)], threshold=0.0) == 1.0


def test_recovery_probability_strict():
    assert recovery_probability([rec(0.95)]) == 0.0


def test_recovery_probability_empty():
    with pytest.raises(ValueError):
        recovery_probability([])


def test_merge_groups():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(merge_groups(p, [[1, 3]]), [0.1, 0.6, 0.3, 0.0])
    np.testing.assert_array_equal(merge_groups(p, []), p)


def test_csv_row():
    r = TrialRecord(20, math.inf, 0.02, 3, 0.5, 0.01, 40, False)
    assert TrialRecord.CSV_COLUMNS == (
        "K", "snr_db", "lambda", "seed", "fidelity", "residual", "iterations", "success"
    )
    assert r.csv_row() == [20, "inf", "0.02", 3, "0.5", "0.01", 40, 0]
