"""Width-variational interpolation between the perturbative and collapse regimes.

Trial states are oscillator eigenstates with the oscillator length ``a``
replaced by ``b = c*a``.  For these real states the energy functional
reduces to ``<V> + U_KL = (n + 1/2) hbar omega c^2 / 2 + U_KL[p_c]``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import FLOOR_RATIO, ModelParams
from .nonlin import kl_log_ratio
from .optimize import golden_section
from .spectra import hermite_functions, sho_support_halfwidth

log = logging.getLogger(__name__)

C_FLOOR = 1e-3
C_CEIL = 10.0
N_SEEDS = 40
N_REFINE = 3
MAX_WINDOW_CELLS = 4_000_000


def _window_dx(n: int, c: float, shift: float) -> float:
    """Spacing for the quadrature window: resolve the state and, for nodal
    states, the node region of width ~eta*L.

    At a node the integrand has a p ln p kink whose trapezoid error grows
    like dx^3, so nodal states get three times the cells per lobe.
    """
    if n == 0:
        target = c / 20.0
    else:
        state_dx = c / (60.0 * math.sqrt(2 * n + 1))
        target = min(state_dx, max(shift / 20.0, c * 2e-4))
    s = max(1, int(round(shift / target)))
    return shift / s


def trial_density(n: int, c: float, x: np.ndarray, a: float = 1.0) -> np.ndarray:
    b = c * a
    return hermite_functions(n, x / b) ** 2 / b


def variational_energy(n: int, c: float, eta: float, eps: float,
                       params: ModelParams | None = None) -> float:
    """E(c) in units of hbar*omega for the rescaled oscillator state n.

    U_KL is a trapezoid sum over a window covering the support of p_c on a
    grid with ``eta*L`` an exact multiple of the spacing; the shifted
    density is the same closed form evaluated one shift away, which equals
    an index shift on that grid.
    """
    if not (C_FLOOR * (1 - 1e-12) <= c <= C_CEIL * (1 + 1e-12)):
        raise ValueError(f"c={c} outside [{C_FLOOR}, {C_CEIL}]")
    if params is None:
        params = ModelParams.from_eps(eta, eps)
    a = params.a
    shift = params.shift_length
    dx = _window_dx(n, c * a, shift)
    hw = sho_support_halfwidth(n, c, a)
    half = int(math.ceil(hw / dx))
    if 2 * half + 1 > MAX_WINDOW_CELLS:
        raise ValueError(f"window of {2 * half + 1} cells for c={c}, eta*L={shift}")
    x = dx * np.arange(-half, half + 1)
    p = trial_density(n, c, x, a)
    floor = FLOOR_RATIO * float(p.max())
    pf = np.maximum(p, floor)
    p_plus = np.maximum(trial_density(n, c, x + shift, a), floor)
    integrand = np.where(p < floor, 0.0, p * kl_log_ratio(pf, p_plus, params.eta))
    w = np.full(x.size, dx)
    w[0] = w[-1] = 0.5 * dx
    u_kl = params.prefactor * float(np.sum(w * integrand))
    potential = (n + 0.5) * params.hbar * params.omega * c**2 / 2.0
    return (potential + u_kl) / (params.hbar * params.omega)


@dataclass(frozen=True)
class VariationalPoint:
    n: int
    eta: float
    eps: float
    c_star: float
    E_star: float
    restarts_used: int
    converged: bool
    collapsed: bool = False
    error: str = ""

    CSV_COLUMNS = ("n", "eta", "eps", "c_star", "E_star", "restarts", "converged")

    def csv_row(self) -> list:
        return [self.n, self.eta, self.eps, self.c_star, self.E_star,
                self.restarts_used, int(self.converged)]

    def to_dict(self) -> dict:
        return asdict(self)


def seed_widths(count: int = N_SEEDS) -> np.ndarray:
    return np.logspace(math.log10(C_FLOOR), math.log10(C_CEIL), count)


def minimize_over_c(n: int, eta: float, eps: float, params: ModelParams | None = None,
                    n_seeds: int = N_SEEDS, n_refine: int = N_REFINE,
                    tol: float = 1e-6) -> VariationalPoint:
    """Global minimum of E(c) over [C_FLOOR, C_CEIL].

    Energies are sampled on log-spaced seeds; golden-section search in
    log c then refines the best ``n_refine`` seeds between their neighbours.
    """
    if params is None:
        params = ModelParams.from_eps(eta, eps)
    seeds = seed_widths(n_seeds)
    energies = []
    for c in seeds:
        try:
            energies.append(variational_energy(n, float(c), eta, eps, params))
        except ValueError as exc:
            log.debug("seed c=%g skipped: %s", c, exc)
            energies.append(math.inf)
    energies = np.array(energies)
    if not np.any(np.isfinite(energies)):
        return VariationalPoint(n, eta, eps, math.nan, math.nan, 0, False, error="no finite seed")

    logs = np.log(seeds)
    best_c, best_e = float(seeds[np.argmin(energies)]), float(np.min(energies))
    converged = True
    order = np.argsort(energies, kind="stable")[:n_refine]
    used = 0
    for k in order:
        if not np.isfinite(energies[k]):
            continue
        lo = logs[max(k - 1, 0)]
        hi = logs[min(k + 1, len(seeds) - 1)]

        def objective(t):
            try:
                return variational_energy(n, math.exp(t), eta, eps, params)
            except ValueError:
                return math.inf

        res = golden_section(objective, lo, hi, tol=tol)
        used += 1
        converged = converged and res.converged
        if res.fx < best_e:
            best_c, best_e = math.exp(res.x), res.fx
    collapsed = best_c <= C_FLOOR * 1.05
    return VariationalPoint(n, eta, eps, best_c, best_e, used, converged, collapsed)


def _point(args) -> VariationalPoint:
    n, eta, eps = args
    try:
        return minimize_over_c(n, eta, eps)
    except Exception as exc:  # per-point failures are recorded, the sweep goes on
        log.warning("sweep point n=%d eta=%g eps=%g failed: %s", n, eta, eps, exc)
        return VariationalPoint(n, eta, eps, math.nan, math.nan, 0, False, error=str(exc))


def sweep(n: int | Sequence[int], eta_list: Sequence[float], eps_list: Sequence[float],
          workers: int = 1) -> list[VariationalPoint]:
    """All (n, eta, eps) points, sorted by key."""
    ns = [n] if isinstance(n, int) else list(n)
    keys = sorted((int(k), float(e), float(x)) for k in ns for e in eta_list for x in eps_list)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_point, keys, chunksize=4))
    else:
        points = [_point(k) for k in keys]
    return sorted(points, key=lambda p: (p.n, p.eta, p.eps))


def by_eta(points: Sequence[VariationalPoint]) -> dict[float, list[VariationalPoint]]:
    out: dict[float, list[VariationalPoint]] = {}
    for p in points:
        out.setdefault(p.eta, []).append(p)
    return out


def width_jumps(points: Sequence[VariationalPoint], threshold: float = 0.3) -> list[tuple]:
    """Adjacent-eps pairs where c* jumps by more than ``threshold``."""
    jumps = []
    for eta, rows in by_eta(points).items():
        rows = sorted(rows, key=lambda p: p.eps)
        for a, b in zip(rows, rows[1:]):
            if abs(b.c_star - a.c_star) > threshold:
                jumps.append((a.n, eta, a.eps, b.eps, a.c_star, b.c_star))
    return jumps
