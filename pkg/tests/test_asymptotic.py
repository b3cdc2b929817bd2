import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnl.asymptotic import (
    DivergenceError,
    collapse_energy,
    eta_minimizer_asymptotic,
    g,
    scan,
    stationarity,
)
from qnl.core import ModelParams
from qnl.variational import minimize_over_c


def test_g_values():
    assert g(0.5) == pytest.approx(16 * math.log(2), rel=1e-14)
    assert 16 * math.log(2) == pytest.approx(11.0904, abs=1e-4)
    assert g(0.9) == pytest.approx(3.5095, abs=1e-4)


@pytest.mark.parametrize("eta", [0.0, 1.0, 1.2, -0.5])
def test_g_diverges_outside_open_interval(eta):
    with pytest.raises(DivergenceError):
        g(eta)


def test_collapse_energy_uses_escale():
    params = ModelParams(0.5, 0.5)  # escale = 1
    res = collapse_energy(0.5, params)
    assert res.energy == pytest.approx(11.0904, abs=1e-4)
    assert res.g_value > 0


@given(st.floats(0.01, 0.99), st.floats(1e-3, 1e3))
def test_collapse_energy_times_L2_is_L_independent(eta, L):
    e1 = collapse_energy(eta, ModelParams(eta, L)).energy * L**2
    e2 = collapse_energy(eta, ModelParams(eta, 2 * L)).energy * (2 * L) ** 2
    assert e1 == pytest.approx(e2, rel=1e-14)
    assert collapse_energy(eta, ModelParams(eta, 2 * L)).energy == pytest.approx(
        collapse_energy(eta, ModelParams(eta, L)).energy / 4, rel=1e-14)


def test_minimizer():
    t0 = time.perf_counter()
    res = eta_minimizer_asymptotic()
    assert time.perf_counter() - t0 < 1.0
    assert res.eta == pytest.approx(0.9034, abs=1e-3)
    assert abs(res.eta - 0.9) < 0.01
    assert res.agreement < 1e-6
    assert stationarity(res.eta) == pytest.approx(0.0, abs=1e-12)
    assert g(res.eta) == pytest.approx(3.509, abs=0.01)
    assert g(res.eta) < g(0.85) and g(res.eta) < g(0.95)


def test_g_decreases_then_increases():
    eta_star = eta_minimizer_asymptotic().eta
    etas = np.arange(0.05, 0.999, 1e-3)
    vals = np.array([g(float(e)) for e in etas])
    d = np.diff(vals)
    left = etas[1:] <= eta_star
    right = etas[:-1] >= eta_star
    assert np.all(d[left] < 0) and np.all(d[right] > 0)


def test_scan_rows():
    rows = scan(np.linspace(0.05, 0.999, 200), params_L=2.0)
    assert len(rows) == 200
    eta, gv, energy = rows[10]
    assert gv == g(eta) and energy == pytest.approx(gv / 16)


@pytest.mark.parametrize("eps", [10.0, 20.0])
def test_variational_approaches_collapse_energy(eps):
    pt = minimize_over_c(0, 0.9, eps)
    ratio = pt.E_star * 4 * eps**2 / g(0.9)
    assert 0.5 <= ratio <= 2.0
