"""First-order energy shifts of the nonlinear term around linear eigenstates.

States with nodes shift at O(L); node-free states at O(L^2).  The
eta-dependence of the nodal shift follows the universal shape
S(eta) = sqrt(eta (1 - eta)) (1 - 4 eta).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DensityField, Grid1D, ModelParams, PotentialSpec, density_of, make_grid
from .nonlin import bohm_weighted_integrand, q1nl
from .optimize import golden_section, parabolic_vertex
from .spectra import EigenPair, resampled_eigenstate, sho_eigenstate, sho_support_halfwidth

log = logging.getLogger(__name__)

CELLS_PER_SHIFT = 20


class ResolutionError(ValueError):
    pass


def quartic_well(x: np.ndarray) -> np.ndarray:
    return 0.5 * x**4


# named potentials for scans; tabulated ones are re-sampled on each grid
POTENTIALS: dict[str, Callable[[np.ndarray], np.ndarray] | None] = {
    "sho": None,
    "quartic": quartic_well,
}

PotentialLike = PotentialSpec | str | Callable[[np.ndarray], np.ndarray]


def potential_on(potential: PotentialLike, grid: Grid1D) -> PotentialSpec:
    if isinstance(potential, PotentialSpec):
        return potential
    if isinstance(potential, str):
        if potential not in POTENTIALS:
            raise ValueError(f"unknown potential {potential!r}; choose from {sorted(POTENTIALS)}")
        func = POTENTIALS[potential]
        if func is None:
            return PotentialSpec.harmonic()
        return PotentialSpec.from_function(func, grid, label=potential)
    return PotentialSpec.from_function(potential, grid)


def resolved_grid(n: int, params: ModelParams, cells_per_shift: int = CELLS_PER_SHIFT,
                  halfwidth: float | None = None) -> Grid1D:
    """Padded grid with at least ``cells_per_shift`` cells across eta*L."""
    hw = halfwidth if halfwidth is not None else sho_support_halfwidth(n, 1.0, params.a)
    return make_grid(hw, params.eta, params.L, params.shift_length / cells_per_shift, "padded")


def unperturbed_state(n: int, grid: Grid1D, params: ModelParams, V: PotentialSpec) -> EigenPair:
    if V.kind == "harmonic":
        return sho_eigenstate(n, 1.0, grid, params)
    return resampled_eigenstate(n, V, grid, params)


def shift_of_density(p: DensityField, params: ModelParams) -> float:
    """integral of p * F1[p], with p*Q in its node-safe form.

    p*Q_1NL is dropped under the floor like the KL integrand; the node-safe
    p*Q is kept everywhere so its p'' part still telescopes to zero.
    """
    kl_part = np.where(p.values < p.floor, 0.0, p.values * q1nl(p, params).values)
    return p.grid.integrate(kl_part - bohm_weighted_integrand(p, params))


def first_order_shift(n: int, params: ModelParams, grid: Grid1D, V: PotentialSpec) -> float:
    """<phi_n| F1[p_n] |phi_n> for the unperturbed state n of V."""
    if grid.dx > params.shift_length / CELLS_PER_SHIFT * (1 + 1e-9):
        raise ResolutionError(
            f"dx={grid.dx:.3e} exceeds eta*L/{CELLS_PER_SHIFT}={params.shift_length / CELLS_PER_SHIFT:.3e}"
        )
    state = unperturbed_state(n, grid, params, V)
    return shift_of_density(density_of(state.psi), params)


def eta_shape_factor(eta: float) -> float:
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    return math.sqrt(eta * (1.0 - eta)) * (1.0 - 4.0 * eta)


def eta_minimizer_perturbative() -> float:
    # the shape is unimodal on (0, 1); golden section to ~1e-12 in eta
    res = golden_section(eta_shape_factor, 1e-12, 1.0 - 1e-12, tol=1e-12)
    return res.x


@dataclass(frozen=True)
class ShiftScan:
    n: int
    eta: float
    L: float
    deltaE: float
    exponent_fit: float = math.nan
    c2_estimate: float = math.nan
    dx: float = math.nan

    CSV_COLUMNS = ("n", "eta", "L", "deltaE", "exponent_fit", "c2_estimate")

    def csv_row(self) -> list:
        return [self.n, self.eta, self.L, self.deltaE, self.exponent_fit, self.c2_estimate]


@dataclass(frozen=True)
class EtaScan:
    rows: list[ShiftScan]
    sign_change: tuple[float, float] | None
    argmin_eta: float


def shift_at(n: int, eta: float, L: float, potential: PotentialLike = "sho",
             cells_per_shift: int = CELLS_PER_SHIFT) -> ShiftScan:
    params = ModelParams(eta=eta, L=L)
    grid = resolved_grid(n, params, cells_per_shift)
    V = potential_on(potential, grid)
    dE = first_order_shift(n, params, grid, V)
    log.debug("n=%d eta=%.4f L=%.3e dE=%.6e (count=%d)", n, eta, L, dE, grid.count)
    return ShiftScan(n, eta, L, dE, dx=grid.dx)


def eta_scan(n: int, L: float, eta_list: Sequence[float], potential: PotentialLike = "sho",
             cells_per_shift: int = CELLS_PER_SHIFT) -> EtaScan:
    """Shift table over eta at fixed L, with sign-change bracket and argmin."""
    etas = sorted(float(e) for e in eta_list)
    rows = [shift_at(n, e, L, potential, cells_per_shift) for e in etas]
    vals = np.array([r.deltaE for r in rows])

    sign_change = None
    for i in range(len(rows) - 1):
        if vals[i] == 0 or np.sign(vals[i]) != np.sign(vals[i + 1]):
            sign_change = (etas[i], etas[i + 1])
            break

    k = int(np.argmin(vals))
    if 0 < k < len(rows) - 1:
        argmin = parabolic_vertex(etas[k - 1:k + 2], vals[k - 1:k + 2])
    else:
        argmin = etas[k]
    return EtaScan(rows, sign_change, float(argmin))


def scaling_exponent(Ls: Sequence[float], shifts: Sequence[float]) -> tuple[float, float]:
    """Slope and R^2 of log|dE| against log L."""
    x = np.log(np.asarray(Ls, dtype=float))
    y = np.log(np.abs(np.asarray(shifts, dtype=float)))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


@dataclass(frozen=True)
class C2Fit:
    n: int
    eta: float
    Ls: tuple[float, ...]
    shifts: tuple[float, ...]
    exponent: float
    c2_estimate: float
    r2: float

    @property
    def good_fit(self) -> bool:
        return self.r2 >= 0.99

    def rows(self) -> list[ShiftScan]:
        return [ShiftScan(self.n, self.eta, L, d, self.exponent, self.c2_estimate)
                for L, d in zip(self.Ls, self.shifts)]


def extract_C2(n: int, eta: float, L_list: Sequence[float], potential: PotentialLike = "sho",
               hbar: float = 1.0, mass: float = 1.0) -> C2Fit:
    """Fit dE = (hbar^2 pi / 6m) S(eta) |L| * sum_p C_np^2 over the L window.

    Raises ValueError when the shifts do not scale linearly in L (node-free
    states); a fit with R^2 < 0.99 is returned but flagged by ``good_fit``.
    """
    Ls = [float(L) for L in L_list]
    if len(Ls) < 2:
        raise ValueError("need at least two L values")
    shifts = [shift_at(n, eta, L, potential).deltaE for L in Ls]
    exponent, _ = scaling_exponent(Ls, shifts)
    if abs(exponent - 1.0) > 0.25:
        raise ValueError(f"shift scales as L^{exponent:.2f}, not |L|: no nodal contribution to fit")
    X = hbar**2 * math.pi / (6.0 * mass) * eta_shape_factor(eta) * np.abs(Ls)
    y = np.asarray(shifts)
    c2 = float(np.dot(X, y) / np.dot(X, X))
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum((y - c2 * X) ** 2) / ss_tot) if ss_tot > 0 else 1.0
    fit = C2Fit(n, eta, tuple(Ls), tuple(shifts), exponent, c2, r2)
    if not fit.good_fit:
        log.warning("poor C2 fit for n=%d eta=%g: R^2=%.4f", n, eta, r2)
    return fit
