"""Split-step evolution of the nonlinear equation in real and imaginary time.

Each step is kinetic half-step (spectral), a full phase step with
V + F1[p], and another kinetic half-step.  The phase step leaves |psi|
unchanged, so evaluating F1 on the density entering it is exact within the
step and the scheme is a symmetric second-order splitting.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Grid1D, ModelParams, PotentialSpec, WaveField, density_of
from .nonlin import f1, total_energy

log = logging.getLogger(__name__)

STABILITY_LIMIT = 0.5
# cells below this fraction of max density carry no weight for the phase-step bound
SIGNIFICANT_DENSITY = 1e-8
# F1 contains -Q, a second-derivative operator in p; its explicit phase step
# feeds grid-scale ripples back with gain ~ dt*hbar*k_max^2/(4m)
STIFFNESS_LIMIT = 1.0


class StabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiagnosticRecord:
    step: int
    t: float
    norm: float
    energy: float
    centroid: float
    width: float


@dataclass
class EvolutionDiagnostics:
    records: list[DiagnosticRecord] = field(default_factory=list)

    CSV_COLUMNS = ("step", "t", "norm", "energy", "centroid", "width")

    def append(self, rec: DiagnosticRecord) -> None:
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def csv_rows(self) -> list[list]:
        return [[r.step, r.t, r.norm, r.energy, r.centroid, r.width] for r in self.records]


def moments(psi: WaveField) -> tuple[float, float, float]:
    """Norm, centroid and standard deviation of |psi|^2."""
    p = density_of(psi).values
    grid = psi.grid
    x = grid.x
    norm = grid.integrate(p)
    mean = grid.integrate(x * p) / norm
    var = grid.integrate((x - mean) ** 2 * p) / norm
    return norm, mean, math.sqrt(max(var, 0.0))


def _kinetic_factor(grid: Grid1D, params: ModelParams, tau: complex) -> np.ndarray:
    """exp(-i tau T / hbar) in Fourier space; tau may be imaginary."""
    k = 2.0 * np.pi * np.fft.fftfreq(grid.count, d=grid.dx)
    return np.exp(-1j * tau * params.hbar * k**2 / (2.0 * params.mass))


def _record(step: int, t: float, psi: WaveField, V: PotentialSpec, params: ModelParams) -> DiagnosticRecord:
    norm, mean, width = moments(psi)
    return DiagnosticRecord(step, t, norm, total_energy(psi, V, params), mean, width)


def stiffness_number(grid: Grid1D, params: ModelParams, dt: float) -> float:
    """dt * hbar * (pi/dx)^2 / (4m); the split step is unstable beyond ~1."""
    return dt * params.hbar * (math.pi / grid.dx) ** 2 / (4.0 * params.mass)


def max_stable_dt(grid: Grid1D, params: ModelParams, safety: float = 0.8) -> float:
    return safety * STIFFNESS_LIMIT * 4.0 * params.mass * grid.dx**2 / (params.hbar * math.pi**2)


def evolve(psi0: WaveField, V: PotentialSpec, params: ModelParams, dt: float, steps: int,
           record_every: int = 1) -> tuple[WaveField, EvolutionDiagnostics]:
    """Real-time Strang split-step evolution on a periodic grid.

    Aborts when dt*max|V + F1|/hbar reaches 0.5, the max taken over cells
    holding at least 1e-8 of the peak density.  Refuses up front a dt whose
    stiffness number reaches 1 (see ``max_stable_dt``).
    """
    grid = psi0.grid
    if not grid.periodic:
        raise ValueError("evolve needs a periodic grid")
    sigma = stiffness_number(grid, params, dt)
    if sigma >= STIFFNESS_LIMIT:
        raise StabilityError(
            f"stiffness dt*hbar*(pi/dx)^2/4m = {sigma:.3g} >= {STIFFNESS_LIMIT}; "
            f"use dt < {max_stable_dt(grid, params, 1.0):.3g}"
        )
    half = _kinetic_factor(grid, params, 0.5 * dt)
    v = V.on_grid(grid, params)
    psi = np.array(psi0.values, dtype=complex)
    diag = EvolutionDiagnostics()
    diag.append(_record(0, 0.0, psi0, V, params))
    for step in range(1, steps + 1):
        psi = np.fft.ifft(half * np.fft.fft(psi))
        p = density_of(WaveField(grid, psi))
        w = v + f1(p, params).values
        live = p.values >= SIGNIFICANT_DENSITY * p.values.max()
        bound = dt * float(np.max(np.abs(w[live]))) / params.hbar
        if bound >= STABILITY_LIMIT:
            raise StabilityError(f"dt*max|V+F1|/hbar = {bound:.3g} >= {STABILITY_LIMIT} at step {step}")
        psi = psi * np.exp(-1j * w * dt / params.hbar)
        psi = np.fft.ifft(half * np.fft.fft(psi))
        if step % record_every == 0 or step == steps:
            diag.append(_record(step, step * dt, WaveField(grid, psi), V, params))
    return WaveField(grid, psi), diag


def hamiltonian_residual(psi: WaveField, V: PotentialSpec, params: ModelParams, energy: float) -> float:
    """|| (H_lin + F1) psi - E psi || in the grid L2 norm."""
    grid = psi.grid
    k = 2.0 * np.pi * np.fft.fftfreq(grid.count, d=grid.dx)
    kin = np.fft.ifft(params.hbar**2 * k**2 / (2.0 * params.mass) * np.fft.fft(psi.values))
    w = V.on_grid(grid, params) + f1(density_of(psi), params).values
    r = kin + w * psi.values - energy * psi.values
    return math.sqrt(grid.integrate(np.abs(r) ** 2))


@dataclass(frozen=True)
class RelaxResult:
    psi: WaveField
    energy: float
    steps: int
    converged: bool
    residual: float
    dtau: float
    message: str = ""
    energies: tuple[float, ...] = field(default=(), repr=False)


def gaussian_state(grid: Grid1D, width: float = 1.0, x0: float = 0.0, k0: float = 0.0) -> WaveField:
    vals = np.exp(-0.5 * ((grid.x - x0) / width) ** 2 + 1j * k0 * grid.x)
    return WaveField(grid, vals).normalized()


def relax_ground_state(V: PotentialSpec, params: ModelParams, grid: Grid1D, dtau: float = 0.05,
                       tol: float = 1e-7, max_steps: int = 200_000, psi0: WaveField | None = None,
                       dtau_min: float = 1e-5, check_every: int = 25) -> RelaxResult:
    """Normalised imaginary-time split-step relaxation to the ground state.

    Converged means |E_k - E_{k-1}| < tol and a residual below ``100*tol``.
    The fixed point of a split step is biased by the step itself, so the
    residual is sampled every ``check_every`` steps and ``dtau`` is halved
    once the energy has settled and the residual has stopped falling.
    Energy rising over 10 consecutive steps also halves ``dtau``; at
    ``dtau_min`` it stops the run as oscillating.
    """
    if not grid.periodic:
        raise ValueError("relaxation needs a periodic grid")
    psi = (psi0 if psi0 is not None else gaussian_state(grid, params.a)).values.real.astype(complex)
    v = V.on_grid(grid, params)
    k = 2.0 * np.pi * np.fft.fftfreq(grid.count, d=grid.dx)
    kin = params.hbar * k**2 / (2.0 * params.mass)

    def normalize(a):
        return a / math.sqrt(grid.integrate(np.abs(a) ** 2))

    psi = normalize(psi)
    energies = [total_energy(WaveField(grid, psi), V, params)]
    tau = dtau
    half = np.exp(-0.5 * tau * kin)
    rises = 0
    residual = last_check = math.inf
    message = "step cap reached"
    converged = False
    step = 0
    for step in range(1, max_steps + 1):
        psi = np.fft.ifft(half * np.fft.fft(psi))
        w = v + f1(density_of(WaveField(grid, psi)), params).values
        # shifting by min(w) only rescales psi, which normalisation removes
        psi = psi * np.exp(-(w - w.min()) * tau / params.hbar)
        psi = normalize(np.fft.ifft(half * np.fft.fft(psi)))
        energy = total_energy(WaveField(grid, psi), V, params)
        delta = energy - energies[-1]
        energies.append(energy)
        # rises at roundoff level are not oscillation
        rises = rises + 1 if delta > 1e-13 * max(1.0, abs(energy)) else 0
        if rises >= 10:
            if tau / 2 < dtau_min:
                message = f"energy rose over 10 consecutive steps at step {step}"
                log.warning(message)
                break
            tau /= 2
            half = np.exp(-0.5 * tau * kin)
            rises = 0
            log.debug("step %d: energy rising, dtau -> %.3e", step, tau)
            continue
        if step % check_every:
            continue
        residual = hamiltonian_residual(WaveField(grid, psi), V, params, energy)
        if abs(delta) < tol and residual < 100 * tol:
            converged = True
            message = "converged"
            break
        if abs(delta) < tol and residual > 0.98 * last_check:
            if tau / 2 < dtau_min:
                message = f"residual {residual:.2e} stalled above {100 * tol:.1e} at dtau_min"
                break
            tau /= 2
            half = np.exp(-0.5 * tau * kin)
            log.debug("step %d: residual %.3e stalled, dtau -> %.3e", step, residual, tau)
        last_check = residual
    final = WaveField(grid, psi)
    if not math.isfinite(residual):
        residual = hamiltonian_residual(final, V, params, energies[-1])
    return RelaxResult(final, energies[-1], step, converged, residual, tau, message, tuple(energies))
