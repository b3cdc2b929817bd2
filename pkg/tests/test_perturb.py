import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import roots_hermite

from qnl.core import DensityField, ModelParams, PotentialSpec, make_grid
from qnl.perturb import (
    ResolutionError,
    eta_minimizer_perturbative,
    eta_scan,
    eta_shape_factor,
    extract_C2,
    first_order_shift,
    resolved_grid,
    scaling_exponent,
    shift_at,
    shift_of_density,
)
from qnl.spectra import hermite_functions

ETA_M = (7 + math.sqrt(33)) / 16


def test_shape_factor_values():
    assert eta_shape_factor(0.25) == 0.0
    assert eta_shape_factor(0.5) == -0.5
    closed = math.sqrt(ETA_M * (1 - ETA_M)) * (1 - 4 * ETA_M)
    assert eta_shape_factor(ETA_M) == pytest.approx(closed, rel=1e-14)
    assert closed == pytest.approx(-0.880086, abs=1e-6)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            eta_shape_factor(bad)


@given(st.floats(0.001, 0.999))
def test_shape_factor_sign_and_minimum(eta):
    s = eta_shape_factor(eta)
    assert (s > 0) == (eta < 0.25) or eta == 0.25
    assert s >= eta_shape_factor(ETA_M)


def test_perturbative_minimizer():
    eta = eta_minimizer_perturbative()
    assert eta == pytest.approx(ETA_M, abs=1e-8)
    assert abs(eta - 0.80) < 0.01
    # stationarity of S: 16 eta^2 - 14 eta + 1 = 0
    assert 16 * eta**2 - 14 * eta + 1 == pytest.approx(0.0, abs=1e-7)
    for e in np.arange(0.1, 0.95, 0.1):
        assert eta_shape_factor(eta) < eta_shape_factor(float(e))


def test_constant_density_has_no_shift():
    params = ModelParams(0.5, 0.01)
    g = make_grid(3.0, 0.5, 0.01, 0.0005, "periodic")
    p = DensityField(g, np.full(g.count, 1.0 / g.length))
    assert abs(shift_of_density(p, params)) < 1e-12


def test_resolution_rule_is_enforced():
    params = ModelParams(0.5, 1e-3)
    coarse = make_grid(10.0, 0.5, 1e-3, 5e-4)
    with pytest.raises(ResolutionError):
        first_order_shift(1, params, coarse, PotentialSpec.harmonic())
    fine = resolved_grid(1, params)
    assert fine.dx <= params.shift_length / 20 * (1 + 1e-12)


@pytest.mark.parametrize("n,ratio", [(0, 4.0), (5, 2.0)])
def test_halving_L(n, ratio):
    a = shift_at(n, 0.5, 2e-3).deltaE
    b = shift_at(n, 0.5, 1e-3).deltaE
    assert a / b == pytest.approx(ratio, rel=0.02)


def test_sign_matches_shape_factor_for_nodal_states():
    for n in (1, 3):
        for eta in (0.1, 0.15, 0.4, 0.6, 0.9):
            dE = shift_at(n, eta, 1e-3).deltaE
            assert np.sign(dE) == np.sign(eta_shape_factor(eta))


def test_eta_scan_bracket_and_argmin():
    scan = eta_scan(5, 1e-3, np.linspace(0.05, 0.95, 19))
    lo, hi = scan.sign_change
    assert 0.2 <= lo and hi <= 0.3
    assert scan.argmin_eta == pytest.approx(0.797, abs=0.02)
    assert [r.eta for r in scan.rows] == sorted(r.eta for r in scan.rows)


def test_scaling_exponent_fit():
    Ls = np.geomspace(1e-3, 1e-2, 4)
    assert scaling_exponent(Ls, 3.0 * Ls**1.5)[0] == pytest.approx(1.5, abs=1e-12)
    slope, r2 = scaling_exponent(Ls, [shift_at(1, 0.5, float(L)).deltaE for L in Ls])
    assert slope == pytest.approx(1.0, abs=0.1) and r2 > 0.99


def node_slope_sum(n):
    """sum over nodes of psi_n'(x_k)^2 for the unit oscillator."""
    xs, _ = roots_hermite(n)
    h = 1e-6
    d = (hermite_functions(n, xs + h) - hermite_functions(n, xs - h)) / (2 * h)
    return float(np.sum(d**2))


@pytest.mark.parametrize("n", [1, 5])
def test_extract_c2_matches_node_slopes(n):
    fit = extract_C2(n, 0.5, [1e-3, 1.7e-3, 3e-3])
    assert fit.exponent == pytest.approx(1.0, abs=0.1)
    assert fit.good_fit
    assert fit.c2_estimate == pytest.approx(node_slope_sum(n), rel=0.01)


def test_extract_c2_window_robustness():
    a = extract_C2(1, 0.5, [1e-3, 1.7e-3, 3e-3]).c2_estimate
    b = extract_C2(1, 0.5, [3e-3, 5.5e-3, 1e-2]).c2_estimate
    assert a == pytest.approx(b, rel=0.05)


def test_extract_c2_refuses_node_free_state():
    with pytest.raises(ValueError):
        extract_C2(0, 0.5, [1e-3, 3e-3, 1e-2])


def test_quartic_well_is_supported():
    r = shift_at(3, 0.6, 1e-3, "quartic")
    assert r.deltaE < 0
    with pytest.raises(ValueError):
        shift_at(3, 0.6, 1e-3, "double-well")
