import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import eval_hermite

from qnl.core import ModelParams, PotentialSpec, make_grid
from qnl.nonlin import kinetic_energy
from qnl.perturb import quartic_well
from qnl.spectra import (
    EigenPair,
    count_nodes,
    hermite_functions,
    linear_eigensolve,
    resampled_eigenstate,
    sho_eigenstate,
)

PARAMS = ModelParams(0.5, 0.1)


@given(st.integers(0, 12), st.floats(-6, 6))
def test_hermite_recurrence_matches_closed_form(n, xi):
    ref = eval_hermite(n, xi) * math.exp(-xi**2 / 2) / math.sqrt(2**n * math.factorial(n) * math.sqrt(math.pi))
    assert hermite_functions(n, np.array([xi]))[0] == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_hermite_high_order_is_finite_and_normalised():
    xi = np.linspace(-20, 20, 40001)
    h = hermite_functions(60, xi)
    assert np.all(np.isfinite(h))
    assert np.sum(h**2) * (xi[1] - xi[0]) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_sho_eigenstate_nodes_norm_virial(n):
    g = make_grid(12.0, 0.5, 0.1, 0.005, "periodic")
    st_ = sho_eigenstate(n, 1.0, g, PARAMS)
    assert count_nodes(st_.psi.values) == n
    assert st_.psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert st_.energy == n + 0.5
    kin = kinetic_energy(st_.psi, PARAMS)
    pot = g.integrate(np.abs(st_.psi.values) ** 2 * 0.5 * g.x**2)
    assert kin == pytest.approx((n + 0.5) / 2, abs=1e-6)
    assert pot == pytest.approx((n + 0.5) / 2, abs=1e-6)


def test_sho_eigenstate_width_scaling():
    g = make_grid(20.0, 0.5, 0.1, 0.005, "periodic")
    t1 = kinetic_energy(sho_eigenstate(0, 1.0, g, PARAMS).psi, PARAMS)
    t2 = kinetic_energy(sho_eigenstate(0, 2.0, g, PARAMS).psi, PARAMS)
    assert t2 / t1 == pytest.approx(0.25, abs=1e-6)


def test_sho_eigenstate_errors_and_sign():
    g = make_grid(3.0, 0.5, 0.1, 0.01)
    with pytest.raises(ValueError):
        sho_eigenstate(5, 1.0, g, PARAMS)
    with pytest.raises(ValueError):
        sho_eigenstate(-1, 1.0, g, PARAMS)
    with pytest.raises(ValueError):
        sho_eigenstate(0, 0.0, g, PARAMS)
    g = make_grid(12.0, 0.5, 0.1, 0.01)
    for n in range(4):
        v = sho_eigenstate(n, 1.0, g, PARAMS).psi.values.real
        lead = v[np.flatnonzero(np.abs(v) > 1e-3 * np.abs(v).max())[0]]
        assert lead > 0


def _residual(pair, V, params):
    g = pair.psi.grid
    v = pair.psi.values.real
    c = params.hbar**2 / (2 * params.mass * g.dx**2)
    hv = (2 * c + V.on_grid(g, params)) * v
    hv[1:] -= c * v[:-1]
    hv[:-1] -= c * v[1:]
    return math.sqrt(g.integrate((hv - pair.energy * v) ** 2))


def test_linear_eigensolve_harmonic():
    g = make_grid(10.0, 0.5, 0.1, 0.01)
    V = PotentialSpec.harmonic()
    pairs = linear_eigensolve(V, g, PARAMS, 3)
    for n, pair in enumerate(pairs):
        assert pair.energy == pytest.approx(n + 0.5, abs=10 * g.dx**2)
        assert count_nodes(pair.psi.values) == n
        assert _residual(pair, V, PARAMS) <= 10 * g.dx**2 * (n + 0.5)
    gram = np.array([[g.integrate(a.psi.values.real * b.psi.values.real) for b in pairs] for a in pairs])
    assert np.max(np.abs(gram - np.eye(3))) < 1e-8


def test_linear_eigensolve_box():
    g = make_grid(3.0, 0.5, 0.1, 0.002)
    V = PotentialSpec.tabulated(np.where(np.abs(g.x) <= math.pi / 2, 0.0, 1e8))
    pairs = linear_eigensolve(V, g, PARAMS, 3)
    for n, pair in enumerate(pairs, start=1):
        assert pair.energy == pytest.approx(n**2 / 2, rel=5e-3)
    assert [count_nodes(p.psi.values) for p in pairs] == [0, 1, 2]


def test_linear_eigensolve_rejects_large_k():
    g = make_grid(1.0, 0.5, 0.1, 0.05)
    with pytest.raises(ValueError):
        linear_eigensolve(PotentialSpec.harmonic(), g, PARAMS, g.count // 4 + 1)


def test_resampled_matches_direct_solve():
    g = make_grid(6.0, 0.5, 0.01, 0.0005)
    V = PotentialSpec.from_function(quartic_well, g)
    fine = resampled_eigenstate(3, V, g, PARAMS, solve_dx=0.005)
    g_c = make_grid(6.0, 0.5, 0.01, 0.005)
    direct = linear_eigensolve(PotentialSpec.from_function(quartic_well, g_c), g_c, PARAMS, 4)[3]
    assert fine.energy == pytest.approx(direct.energy, rel=1e-10)
    assert fine.psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert count_nodes(fine.psi.values) == 3
    on_coarse = np.interp(g_c.x, g.x, fine.psi.values.real)
    assert np.max(np.abs(on_coarse - direct.psi.values.real)) < 1e-3


def test_eigenpair_json_roundtrip():
    g = make_grid(8.0, 0.5, 0.1, 0.05)
    pair = sho_eigenstate(2, 1.0, g, PARAMS)
    back = EigenPair.from_json(pair.to_json())
    assert back.n == 2 and back.energy == 2.5
    assert back.psi.grid == g
    assert np.array_equal(back.psi.values, pair.psi.values)
