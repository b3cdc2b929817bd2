"""Linear eigenstates: rescaled oscillator states and a finite-difference solver."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from .core import Grid1D, ModelParams, PotentialSpec, WaveField

BOUNDARY_TOL = 1e-8


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenPair:
    n: int
    energy: float
    psi: WaveField

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "energy": self.energy,
                "grid": self.psi.grid.to_dict(),
                "values": self.psi.values.real.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "EigenPair":
        d = json.loads(text)
        grid = Grid1D.from_dict(d["grid"])
        return cls(d["n"], d["energy"], WaveField(grid, np.array(d["values"], dtype=float)))


def hermite_functions(n: int, xi: np.ndarray) -> np.ndarray:
    """Normalised Hermite function of order n via the three-term recurrence."""
    h_prev = np.pi**-0.25 * np.exp(-0.5 * xi**2)
    if n == 0:
        return h_prev
    h = math.sqrt(2.0) * xi * h_prev
    for k in range(1, n):
        h, h_prev = math.sqrt(2.0 / (k + 1)) * xi * h - math.sqrt(k / (k + 1)) * h_prev, h
    return h


def count_nodes(values: np.ndarray, rel_tol: float = 1e-6) -> int:
    v = np.real(values)
    significant = v[np.abs(v) > rel_tol * np.max(np.abs(v))]
    return int(np.count_nonzero(np.diff(np.sign(significant)) != 0))


def fix_sign(values: np.ndarray, rel_tol: float = 1e-3) -> np.ndarray:
    """Flip so that the leftmost significant lobe is positive."""
    v = np.real(values)
    idx = np.flatnonzero(np.abs(v) > rel_tol * np.max(np.abs(v)))
    if idx.size and v[idx[0]] < 0:
        return -values
    return values


def sho_support_halfwidth(n: int, width_c: float = 1.0, a: float = 1.0) -> float:
    """Half-width outside which the rescaled state is below ~1e-9."""
    return width_c * a * (math.sqrt(2 * n + 1) + 6.5)


def sho_eigenstate(n: int, width_c: float, grid: Grid1D, params: ModelParams) -> EigenPair:
    """Oscillator state n with length scale ``b = width_c * a``.

    The energy is the linear value (n + 1/2) hbar omega whatever the width.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if width_c <= 0:
        raise ValueError("width_c must be positive")
    b = width_c * params.a
    vals = hermite_functions(n, grid.x / b) / math.sqrt(b)
    peak = np.max(np.abs(vals))
    if max(abs(vals[0]), abs(vals[-1])) > BOUNDARY_TOL * max(peak, 1.0):
        raise ValueError(
            f"grid [{grid.x[0]:.3g}, {grid.x[-1]:.3g}] too narrow for n={n}, c={width_c}"
        )
    vals = fix_sign(vals)
    vals = vals / math.sqrt(grid.integrate(vals**2))
    energy = (n + 0.5) * params.hbar * params.omega
    return EigenPair(n, energy, WaveField(grid, vals))


def _fd_eigensolve(V: np.ndarray, dx: float, params: ModelParams, k: int):
    c = params.hbar**2 / (2.0 * params.mass * dx**2)
    diag = 2.0 * c + V
    off = np.full(V.size - 1, -c)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))


def linear_eigensolve(V: PotentialSpec, grid: Grid1D, params: ModelParams, k: int) -> list[EigenPair]:
    """Lowest k eigenpairs of the three-point finite-difference Hamiltonian.

    Dirichlet conditions outside the grid; states are grid-normalised with
    a positive leading lobe.
    """
    if not (0 < k < grid.count / 4):
        raise ValueError(f"k={k} must satisfy 0 < k < count/4")
    v = V.on_grid(grid, params)
    energies, vecs = _fd_eigensolve(v, grid.dx, params, k)
    c = params.hbar**2 / (2.0 * params.mass * grid.dx**2)
    pairs = []
    for n in range(k):
        vec = vecs[:, n]
        hv = (2.0 * c + v) * vec
        hv[1:] -= c * vec[:-1]
        hv[:-1] -= c * vec[1:]
        resid = np.linalg.norm(hv - energies[n] * vec)
        if not np.isfinite(resid) or resid > 1e-6 * max(1.0, abs(energies[n])):
            raise ConvergenceError(f"eigenpair {n} residual {resid:.3e}")
        vals = fix_sign(vec)
        vals = vals / math.sqrt(grid.integrate(vals**2))
        pairs.append(EigenPair(n, float(energies[n]), WaveField(grid, vals)))
    return pairs


def resampled_eigenstate(n: int, V: PotentialSpec, grid: Grid1D, params: ModelParams,
                         solve_dx: float = 5e-3) -> EigenPair:
    """Eigenstate n solved on a coarsened copy of ``grid`` and splined back.

    Fine grids used for node-resolved quadrature can hold millions of cells;
    the eigenproblem only needs the scale of the potential.
    """
    stride = max(1, int(round(solve_dx / grid.dx)))
    if stride == 1:
        return linear_eigensolve(V, grid, params, n + 1)[n]
    v = V.on_grid(grid, params)[::stride]
    x_coarse = grid.x[::stride]
    energies, vecs = _fd_eigensolve(v, grid.dx * stride, params, n + 1)
    vec = fix_sign(vecs[:, n])
    vals = CubicSpline(x_coarse, vec)(grid.x)
    vals[grid.x > x_coarse[-1]] = 0.0
    vals = vals / math.sqrt(grid.integrate(vals**2))
    return EigenPair(n, float(energies[n]), WaveField(grid, vals))
