"""Pointwise nonlinear potentials and the functionals that generate them.

``q1nl`` is the variation of the regularised KL functional ``kl_energy``
and ``bohm_potential`` is the variation of ``fisher_energy``.  Both
functionals are homogeneous of degree one in the density, so
``integral(p * field) == functional`` holds on the grid as well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DensityField,
    Grid1D,
    ModelParams,
    NonlinearField,
    PotentialSpec,
    WaveField,
    density_of,
    shifted_values,
)


def _neighbours(values: np.ndarray, grid: Grid1D, fill: float) -> tuple[np.ndarray, np.ndarray]:
    """Values at x - dx and x + dx."""
    if grid.periodic:
        return np.roll(values, 1), np.roll(values, -1)
    left = np.empty_like(values)
    right = np.empty_like(values)
    left[1:] = values[:-1]
    left[0] = fill
    right[:-1] = values[1:]
    right[-1] = fill
    return left, right


def kl_bracket(p: np.ndarray, p_plus: np.ndarray, p_minus: np.ndarray, eta: float) -> np.ndarray:
    """The dimensionless bracket of Q_1NL for strictly positive inputs.

    With ``r = m/p`` (m the forward mixture) and ``r_m = m_-/p_-`` the bracket
    is ``(r - 1)/r - ln r + eta*(v - u)/(r*r_m)`` where ``u = r - 1`` and
    ``v = r_m - 1``.  This avoids cancelling O(1) terms when eta*L is small.
    """
    u = eta * (p_plus - p) / p
    v = eta * (p - p_minus) / p_minus
    r = (1.0 - eta) + eta * p_plus / p
    r_m = (1.0 - eta) + eta * p / p_minus
    small = np.abs(u) < 0.5
    log_r = np.where(small, np.log1p(np.where(small, u, 0.0)), np.log(np.where(small, 1.0, r)))
    return (u / r - log_r) + eta * (v - u) / (r * r_m)


def kl_log_ratio(p: np.ndarray, p_plus: np.ndarray, eta: float) -> np.ndarray:
    """ln(p / ((1-eta) p + eta p_plus)) computed without cancellation."""
    u = eta * (p_plus - p) / p
    small = np.abs(u) < 0.5
    r = (1.0 - eta) + eta * p_plus / p
    return -np.where(small, np.log1p(np.where(small, u, 0.0)), np.log(np.where(small, 1.0, r)))


def _clamp_where_floored(values: np.ndarray, p: DensityField, bound: float) -> np.ndarray:
    low = p.values < p.floor
    if np.any(low):
        values = values.copy()
        values[low] = np.clip(values[low], -bound, bound)
    return values


def bohm_potential(p: DensityField, params: ModelParams) -> NonlinearField:
    """Q = -(hbar^2/2m) (sqrt p)'' / sqrt p by a central second difference."""
    grid = p.grid
    r = np.sqrt(p.floored())
    left, right = _neighbours(r, grid, math.sqrt(p.floor))
    lap = (left - 2.0 * r + right) / grid.dx**2
    q = -(params.hbar**2 / (2.0 * params.mass)) * lap / r
    return NonlinearField(grid, _clamp_where_floored(q, p, params.clamp_bound))


def q1nl(p: DensityField, params: ModelParams) -> NonlinearField:
    """The regularised nonlocal potential, prefactor escale/eta^4."""
    grid = p.grid
    pf = p.floored()
    fill = p.floor
    p_plus = shifted_values(pf, grid, 1, fill)
    p_minus = shifted_values(pf, grid, -1, fill)
    vals = params.prefactor * kl_bracket(pf, p_plus, p_minus, params.eta)
    bound = params.clamp_bound
    return NonlinearField(grid, np.clip(vals, -bound, bound))


def f1(p: DensityField, params: ModelParams) -> NonlinearField:
    vals = q1nl(p, params).values - bohm_potential(p, params).values
    return NonlinearField(p.grid, _clamp_where_floored(vals, p, params.clamp_bound))


def _fisher_integrand(p: DensityField) -> np.ndarray:
    """p'^2 / p from central differences, node safe.

    Cells under the floor take the mean of their unfloored neighbours, which
    is the one-sided limit at a node sitting exactly on a grid point.
    """
    grid = p.grid
    pf = p.floored()
    left, right = _neighbours(pf, grid, p.floor)
    dp = (right - left) / (2.0 * grid.dx)
    g = dp**2 / pf
    low = p.values < p.floor
    if np.any(low):
        g_ok = np.where(low, 0.0, g)
        n_ok = (~low).astype(float)
        gl, gr = _neighbours(g_ok, grid, 0.0)
        nl, nr = _neighbours(n_ok, grid, 0.0)
        count = nl + nr
        fallback = np.divide(gl + gr, count, out=np.zeros_like(g), where=count > 0)
        g = np.where(low, fallback, g)
    return g


def fisher_energy(p: DensityField, params: ModelParams) -> float:
    """I_F = (hbar^2 / 8m) * integral of p'^2 / p."""
    g = _fisher_integrand(p)
    return params.hbar**2 / (8.0 * params.mass) * p.grid.integrate(g)


def bohm_weighted_integrand(p: DensityField, params: ModelParams) -> np.ndarray:
    """p * Q written as (hbar^2/8m)(p'^2/p - 2 p''), finite at nodes.

    Its integral equals ``fisher_energy`` up to boundary terms of the
    telescoping p'' sum.
    """
    grid = p.grid
    pf = p.floored()
    left, right = _neighbours(pf, grid, p.floor)
    lap = (left - 2.0 * pf + right) / grid.dx**2
    return params.hbar**2 / (8.0 * params.mass) * (_fisher_integrand(p) - 2.0 * lap)


def kl_energy(p: DensityField, params: ModelParams) -> float:
    """U_KL = (escale/eta^4) * integral of p ln(p / ((1-eta) p + eta p_+))."""
    grid = p.grid
    pf = p.floored()
    p_plus = shifted_values(pf, grid, 1, p.floor)
    integrand = p.values * kl_log_ratio(pf, p_plus, params.eta)
    integrand = np.where(p.values < p.floor, 0.0, integrand)
    return params.prefactor * grid.integrate(integrand)


def kinetic_energy(psi: WaveField, params: ModelParams) -> float:
    """<psi| -hbar^2/2m d^2/dx^2 |psi> evaluated spectrally."""
    grid = psi.grid
    k = 2.0 * np.pi * np.fft.fftfreq(grid.count, d=grid.dx)
    spec = np.fft.fft(psi.values)
    return float(
        params.hbar**2 / (2.0 * params.mass) * grid.dx / grid.count * np.sum(k**2 * np.abs(spec) ** 2)
    )


def total_energy(psi: WaveField, V: PotentialSpec, params: ModelParams) -> float:
    """E = <T> + <V> + U_KL - I_F.

    Stationarity of this functional reproduces the nonlinear equation with
    F1 = Q_1NL - Q.  For a real wavefunction <T> and I_F agree in the
    continuum, leaving <V> + U_KL.
    """
    p = density_of(psi)
    potential = p.grid.integrate(p.values * V.on_grid(p.grid, params))
    return (
        kinetic_energy(psi, params)
        + potential
        + kl_energy(p, params)
        - fisher_energy(p, params)
    )


@dataclass(frozen=True)
class DerivativeCheck:
    finite_difference: float
    field_value: float
    abs_error: float
    rel_error: float


def functional_derivative_check(functional: str, p: DensityField, probe_index: int,
                                h: float, params: ModelParams) -> DerivativeCheck:
    """Compare a central finite difference of a functional with its field.

    The density is perturbed by ``h * delta_i / dx`` so the difference
    quotient approximates the continuum functional derivative at cell i.
    ``functional`` is ``"fisher"`` (field Q) or ``"kl"`` (field Q_1NL).
    """
    functional = functional.lower()
    if functional == "fisher":
        energy, field_fn = fisher_energy, bohm_potential
    elif functional == "kl":
        energy, field_fn = kl_energy, q1nl
    else:
        raise ValueError(f"unknown functional {functional!r}")

    exact = float(field_fn(p, params).values[probe_index])
    if p.values[probe_index] < p.floor:
        return DerivativeCheck(math.nan, exact, math.nan, math.nan)

    bump = h / p.grid.dx
    up = p.values.copy()
    up[probe_index] += bump
    down = p.values.copy()
    down[probe_index] -= bump
    fd = (energy(DensityField(p.grid, up), params) - energy(DensityField(p.grid, down), params)) / (2 * h)
    err = abs(fd - exact)
    rel = err / abs(exact) if abs(exact) > 1e-8 else err
    return DerivativeCheck(fd, exact, err, rel)
