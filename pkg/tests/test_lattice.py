import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from qnl.lattice import (
    Fate,
    NoSolution,
    Truncation,
    bracket_general,
    classify_trajectory,
    ratio_fixed_points,
    ratio_map,
    step_backward_eta1,
    step_backward_general,
    step_forward_eta1,
    step_forward_general,
)

pos = st.floats(1e-3, 1e3)
etas = st.floats(0.05, 0.99)


def test_forward_eta1_examples():
    p2 = step_forward_eta1(1.0, 1.0, 1.0)
    assert p2 == pytest.approx(math.exp(-1), rel=1e-15)
    assert step_forward_eta1(1.0, p2, 1.0) == pytest.approx(math.exp(-1) * math.exp(-math.e), rel=1e-14)
    assert step_forward_eta1(1.0, p2, 1.0) == pytest.approx(0.0242756, abs=1e-7)
    assert step_forward_eta1(3.7, 3.7, 0.0) == 3.7


def test_forward_eta1_range_errors():
    with pytest.raises(OverflowError):
        step_forward_eta1(1e-300, 1.0, -800.0)
    assert step_forward_eta1(1e300, 1.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        step_forward_eta1(0.0, 1.0, 1.0)


def test_backward_eta1_examples():
    assert step_backward_eta1(1.0, math.exp(-1), 1.0) == pytest.approx(1.0, rel=1e-15)
    assert isinstance(step_backward_eta1(1.0, 1.0, 1.0), Truncation)
    assert step_backward_eta1(1.0, 1.0, 0.0) == 1.0


@given(pos, pos, st.floats(-2, 2))
def test_eta1_inverse_consistency(a, b, c):
    nxt = step_forward_eta1(a, b, c)
    assume(nxt > 1e-200 and math.isfinite(nxt))
    assert step_backward_eta1(b, nxt, c) == pytest.approx(a, rel=1e-12)


@given(pos, pos, st.floats(-2, 2), etas)
def test_general_inverse_consistency(a, b, c, eta):
    nxt = step_forward_general(a, b, c, eta)
    assume(isinstance(nxt, float) and 1e-200 < nxt < 1e200)
    back = step_backward_general(b, nxt, c, eta)
    assert isinstance(back, float)
    assert back == pytest.approx(a, rel=1e-12)


@given(pos, pos, st.floats(-2, 2))
def test_general_reduces_to_eta1(a, b, c):
    try:
        ref = step_forward_eta1(a, b, c)
    except OverflowError:
        return
    assert step_forward_general(a, b, c, 1.0) == ref


@given(etas, pos)
def test_constant_solution_for_all_eta(eta, p):
    assert bracket_general(1.0, p, p, eta) == pytest.approx(0.0, abs=1e-15)
    assert step_forward_general(p, p, 0.0, eta) == pytest.approx(p, rel=1e-12)


@given(etas, pos, pos, st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
def test_bracket_strictly_decreasing(eta, a, b, u1, u2):
    assume(abs(u1 - u2) > 1e-6 * max(u1, u2))
    lo, hi = sorted((u1, u2))
    assert bracket_general(lo, a, b, eta) > bracket_general(hi, a, b, eta)


def test_general_no_solution():
    eta = 0.5
    res = step_forward_general(1.0, 1.0, 100.0, eta)
    assert isinstance(res, NoSolution)
    assert res.supremum == pytest.approx(-math.log(0.5) - 0.5)


def test_ratio_fixed_points_examples():
    a0 = ratio_fixed_points(0.0)
    assert a0.fixed_points == (1.0,)
    assert ratio_fixed_points(0.1).fixed_points == ()
    a = ratio_fixed_points(-0.5)
    t_minus, t_plus = a.fixed_points
    assert t_minus == pytest.approx(0.3017, abs=1e-4)
    assert t_plus > 1
    assert a.stable == (True, False)


@given(st.floats(-20, -1e-6))
def test_fixed_points_satisfy_map(c):
    a = ratio_fixed_points(c)
    assert len(a.fixed_points) == 2
    for t in a.fixed_points:
        assert abs(t - ratio_map(t, c)) <= 1e-12 * max(1.0, t)


@given(st.floats(0.01, 3.0), pos, pos)
def test_ratio_increases_forward_for_positive_energy(c, a, b):
    tr = classify_trajectory(1.0, c, a, b, window=60)
    fwd = tr.values[-tr.start_index:]
    fwd = fwd[fwd > 1e-250]
    t = fwd[:-1] / fwd[1:]
    assert np.all(np.diff(t) > 0)


def test_classification_examples():
    tr = classify_trajectory(1.0, 1.0, 1.0, 1.0)
    assert tr.forward is Fate.BOUNDED_DECAYING
    assert tr.backward is Fate.TRUNCATED and tr.truncation_index == -1
    assert tr.classification is Fate.TRUNCATED

    tr = classify_trajectory(1.0, 0.0, 1.0, 1.0, window=500)
    assert tr.classification is Fate.CONSTANT and tr.truncation_index is None
    assert np.all(tr.values == 1.0)

    t_minus = ratio_fixed_points(-0.5).fixed_points[0]
    tr = classify_trajectory(1.0, -0.5, t_minus, 1.0)
    assert tr.classification is Fate.UNBOUNDED
    v = tr.values[-tr.start_index:]
    assert v[5] / v[4] == pytest.approx(1 / t_minus, rel=1e-3)
    assert 1 / t_minus == pytest.approx(3.31, abs=0.01)


@pytest.mark.parametrize("c", [0.1, 0.5, 1.0, 2.0])
def test_positive_energy_truncates_and_decays(c, rng):
    for p0, p1 in np.exp(rng.uniform(-5, 5, size=(25, 2))):
        tr = classify_trajectory(1.0, c, float(p0), float(p1))
        assert tr.truncation_index is not None and tr.truncation_index < 0
        assert tr.forward is Fate.BOUNDED_DECAYING
        assert np.all(tr.values > 0)


@pytest.mark.parametrize("c", [-0.1, -0.5])
def test_negative_energy_unbounded(c, rng):
    for p0, p1 in np.exp(rng.uniform(-5, 5, size=(25, 2))):
        assert classify_trajectory(1.0, c, float(p0), float(p1)).classification is Fate.UNBOUNDED


@pytest.mark.parametrize("eta", [0.3, 0.7])
def test_general_eta_probe(eta, rng):
    # the general-eta analogue of truncation, probed empirically
    for p0, p1 in np.exp(rng.uniform(-2, 2, size=(10, 2))):
        tr = classify_trajectory(eta, 0.5, float(p0), float(p1), window=2000)
        assert tr.classification in (Fate.TRUNCATED, Fate.UNBOUNDED, Fate.BOUNDED_DECAYING, Fate.INCONCLUSIVE)
        assert np.all(tr.values > 0)


def test_window_limits_and_inconclusive():
    with pytest.raises(ValueError):
        classify_trajectory(1.0, 1.0, 1.0, 1.0, window=2_000_000)
    with pytest.raises(ValueError):
        classify_trajectory(1.0, 1.0, -1.0, 1.0)
    tr = classify_trajectory(1.0, 0.1, 1.0, 1.0, window=2)
    assert tr.forward is Fate.INCONCLUSIVE


def test_csv_rows_and_summary():
    tr = classify_trajectory(1.0, 1.0, 1.0, 1.0, window=10)
    rows = tr.csv_rows()
    assert rows[0][:3] == [1.0, 1.0, tr.start_index]
    assert [r[2] for r in rows] == list(range(tr.start_index, tr.start_index + len(rows)))
    assert "classification=TruncatedAt" in tr.summary()
