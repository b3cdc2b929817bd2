"""Large-L collapse regime.

When eta*L is much larger than the state, p(x +/- eta L) ~ 0 and every
eigenstate collapses onto the potential minimum with energy
``g(eta) * escale``, ``g(eta) = -ln(1 - eta) / eta^4``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import ModelParams
from .optimize import golden_section


class DivergenceError(ValueError):
    pass


def g(eta: float) -> float:
    if not (0.0 < eta < 1.0):
        raise DivergenceError(f"g(eta) is finite only for 0 < eta < 1, got {eta}")
    return -math.log1p(-eta) / eta**4


@dataclass(frozen=True)
class CollapseResult:
    eta: float
    g_value: float
    energy: float


def collapse_energy(eta: float, params: ModelParams) -> CollapseResult:
    gv = g(eta)
    return CollapseResult(eta, gv, gv * params.escale)


def stationarity(eta: float) -> float:
    """Zero exactly where g'(eta) = 0."""
    return eta / (1.0 - eta) + 4.0 * math.log1p(-eta)


@dataclass(frozen=True)
class AsymptoticMinimum:
    eta_golden: float
    eta_root: float

    @property
    def eta(self) -> float:
        return self.eta_root

    @property
    def agreement(self) -> float:
        return abs(self.eta_golden - self.eta_root)


def eta_minimizer_asymptotic() -> AsymptoticMinimum:
    """Minimise g by golden section and cross-check with the stationarity root."""
    direct = golden_section(g, 0.05, 0.999, tol=1e-10).x
    root = brentq(stationarity, 0.5, 0.99, xtol=1e-15)
    res = AsymptoticMinimum(direct, root)
    if res.agreement > 1e-6:
        raise RuntimeError(f"golden {direct} and root {root} disagree")
    return res


def scan(etas: np.ndarray, params_L: float = 1.0) -> list[tuple[float, float, float]]:
    """(eta, g, energy) rows; energy uses escale = 1/(4 L^2) in natural units."""
    escale = 1.0 / (4.0 * params_L**2)
    return [(float(e), g(float(e)), g(float(e)) * escale) for e in etas]
