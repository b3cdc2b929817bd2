"""Acceptance and invariant checks shared by ``qnl check`` and the test suite.

Each check returns one ``CheckResult`` per criterion part; tolerances are
pinned here and nowhere else.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DensityField, ModelParams, PotentialSpec, WaveField, density_of, make_grid

# pinned tolerances
ETA_PERT_TARGET, ETA_PERT_TOL = 0.797, 0.02
ETA_ASYM_TARGET, ETA_ASYM_TOL = 0.9034, 1e-3
SHAPE_REL_TOL = 0.10
EXPONENT_NODAL, EXPONENT_NODAL_TOL = 1.0, 0.1
EXPONENT_NODEFREE, EXPONENT_NODEFREE_TOL = 2.0, 0.2
COLLAPSE_KL_REL_TOL = 0.01
COLLAPSE_FACTOR = 2.0
LINEAR_C_TOL, LINEAR_E_TOL = 0.05, 0.005
COLLAPSE_C_MAX = 0.2
SCALE_INV_TOL = 1e-12
CONST_TOL = 1e-12
DERIV_TOL = 1e-4
SMALL_SHIFT_SLOPE_MIN = 0.8
NORM_TOL = 1e-10
DISPERSION_TOL = 1e-6
DRIFT_ORDER, DRIFT_ORDER_TOL = 2.0, 0.3
IDENTITY_TOL = 1e-9

FIG2_ETAS = (0.1, 0.2, 0.5, 0.9, 0.999, 0.999999)
FIG2_EPS = tuple(np.geomspace(0.01, 20.0, 60))


@dataclass(frozen=True)
class CheckResult:
    criterion: str
    name: str
    passed: bool
    detail: str
    runtime: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.criterion:<3} {self.name}: {self.detail} ({self.runtime:.2f}s)"


def _timed(fn: Callable, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


# ---------------------------------------------------------------- 1-3

def check_perturbative_minimizer() -> list[CheckResult]:
    from .perturb import eta_minimizer_perturbative, eta_scan

    scan, dt = _timed(eta_scan, 5, 1e-3, np.linspace(0.05, 0.95, 37))
    closed = (7.0 + math.sqrt(33.0)) / 16.0
    golden = eta_minimizer_perturbative()
    ok = abs(scan.argmin_eta - ETA_PERT_TARGET) <= ETA_PERT_TOL and dt < 120.0
    detail = (f"argmin={scan.argmin_eta:.4f} target {ETA_PERT_TARGET}+-{ETA_PERT_TOL}, "
              f"closed form {closed:.6f}, golden {golden:.6f}, runtime<120s")
    return [CheckResult("1", "perturbative eta minimizer", ok, detail, dt)]


def check_sign_structure() -> list[CheckResult]:
    from .perturb import eta_scan, eta_shape_factor, shift_at

    t0 = time.perf_counter()
    out = []
    brackets = []
    for pot, n in (("sho", 5), ("sho", 1), ("quartic", 3)):
        scan = eta_scan(n, 1e-3, np.linspace(0.05, 0.5, 19), pot)
        sc = scan.sign_change
        brackets.append(f"{pot} n={n}: {sc}")
        if sc is None or not (0.2 <= sc[0] and sc[1] <= 0.3):
            brackets[-1] += " (outside)"
    ok = not any("outside" in b or "None" in b for b in brackets)
    out.append(CheckResult("2a", "sign change within (0.2, 0.3)", ok, "; ".join(brackets),
                           time.perf_counter() - t0))

    t0 = time.perf_counter()
    worst = {}
    for pot, n in (("sho", 5), ("quartic", 5)):
        ref = shift_at(n, 0.5, 1e-3, pot).deltaE
        s_ref = eta_shape_factor(0.5)
        errs = []
        for eta in np.round(np.arange(0.1, 0.91, 0.1), 10):
            ratio = shift_at(n, float(eta), 1e-3, pot).deltaE / ref
            target = eta_shape_factor(float(eta)) / s_ref
            errs.append(abs(ratio - target) / abs(target))
        worst[pot] = max(errs)
    ok = all(v <= SHAPE_REL_TOL for v in worst.values())
    detail = ", ".join(f"{k} max rel err {v:.2e}" for k, v in worst.items()) + f" (tol {SHAPE_REL_TOL})"
    out.append(CheckResult("2b", "shape ratios match S(eta)", ok, detail, time.perf_counter() - t0))
    return out


def check_scaling_split() -> list[CheckResult]:
    from .perturb import scaling_exponent, shift_at

    Ls = np.geomspace(1e-3, 1e-2, 5)
    out = []
    for n, target, tol in ((5, EXPONENT_NODAL, EXPONENT_NODAL_TOL), (0, EXPONENT_NODEFREE, EXPONENT_NODEFREE_TOL)):
        t0 = time.perf_counter()
        shifts = [shift_at(n, 0.5, float(L)).deltaE for L in Ls]
        slope, r2 = scaling_exponent(Ls, shifts)
        ok = abs(slope - target) <= tol
        out.append(CheckResult("3" + ("a" if n == 5 else "b"), f"|L| exponent n={n}", ok,
                               f"slope={slope:.4f} (R^2={r2:.5f}) target {target}+-{tol}",
                               time.perf_counter() - t0))
    return out


# ---------------------------------------------------------------- 4-6

def check_asymptotic_minimizer() -> list[CheckResult]:
    from .asymptotic import eta_minimizer_asymptotic

    res, dt = _timed(eta_minimizer_asymptotic)
    ok = abs(res.eta - ETA_ASYM_TARGET) <= ETA_ASYM_TOL and dt < 1.0
    return [CheckResult("4", "asymptotic eta minimizer", ok,
                        f"argmin={res.eta:.6f} (golden {res.eta_golden:.6f}) target {ETA_ASYM_TARGET}"
                        f"+-{ETA_ASYM_TOL}, runtime<1s", dt)]


def collapse_kl_energy(width: float = 0.05, eta: float = 0.5, L: float = 10.0) -> float:
    from .nonlin import kl_energy

    params = ModelParams(eta, L)
    grid = make_grid(12.0 * width + params.shift_length, eta, L, width / 50.0, "padded")
    p = np.exp(-0.5 * (grid.x / width) ** 2) / (width * math.sqrt(2.0 * math.pi))
    return kl_energy(DensityField(grid, p), params)


def check_collapse_energy() -> list[CheckResult]:
    from .asymptotic import g
    from .variational import minimize_over_c

    t0 = time.perf_counter()
    params = ModelParams(0.5, 10.0)
    expected = -math.log(0.5) * params.escale / 0.5**4
    got = collapse_kl_energy()
    rel = abs(got - expected) / expected
    out = [CheckResult("5a", "KL energy of narrow Gaussian", rel <= COLLAPSE_KL_REL_TOL,
                       f"U_KL={got:.6f} expected {expected:.6f} rel err {rel:.2e} (tol {COLLAPSE_KL_REL_TOL})",
                       time.perf_counter() - t0)]
    t0 = time.perf_counter()
    pt = minimize_over_c(0, 0.9, 10.0)
    scaled = pt.E_star * 4.0 * 10.0**2
    ratio = scaled / g(0.9)
    ok = 1.0 / COLLAPSE_FACTOR <= ratio <= COLLAPSE_FACTOR
    out.append(CheckResult("5b", "variational E*4eps^2 vs g(0.9)", ok,
                           f"E*4eps^2={scaled:.4f}, g(0.9)={g(0.9):.4f}, ratio {ratio:.4f} (within x{COLLAPSE_FACTOR})",
                           time.perf_counter() - t0))
    return out


_FIG2_CACHE: dict = {}


def figure2_sweep(workers: int = 1):
    from .variational import sweep

    key = workers
    if key not in _FIG2_CACHE:
        _FIG2_CACHE[key] = _timed(sweep, 0, FIG2_ETAS, FIG2_EPS, workers=workers)
    return _FIG2_CACHE[key]


def check_variational(workers: int = 1) -> list[CheckResult]:
    from .variational import minimize_over_c

    out = []
    for tag, n in (("6a", 0), ("6b", 5)):
        t0 = time.perf_counter()
        parts, ok = [], True
        for eta in (0.1, 0.5, 0.9):
            pt = minimize_over_c(n, eta, 0.01)
            good = abs(pt.c_star - 1.0) <= LINEAR_C_TOL and abs(pt.E_star - (n + 0.5)) <= LINEAR_E_TOL
            ok &= good
            parts.append(f"eta={eta}: c*={pt.c_star:.4f} E*-{n + 0.5}={pt.E_star - (n + 0.5):+.4f}")
        out.append(CheckResult(tag, f"linear limit n={n} at eps=0.01", ok,
                               "; ".join(parts) + f" (tol c {LINEAR_C_TOL}, E {LINEAR_E_TOL})",
                               time.perf_counter() - t0))

    points, dt = figure2_sweep(workers)
    failures = [p for p in points if p.error]
    by_eps: dict[float, list] = {}
    for p in points:
        by_eps.setdefault(p.eps, []).append(p)
    violating = []
    for eps, rows in sorted(by_eps.items()):
        rows.sort(key=lambda p: p.eta)
        for a, b in zip(rows, rows[1:]):
            if b.E_star > a.E_star:
                violating.append((eps, a.eta, b.eta, b.E_star - a.E_star))
    worst = max(violating, key=lambda v: v[3]) if violating else None
    detail = (f"{len(violating)} increasing (eps, eta->eta') pairs over {len(by_eps)} eps values"
              + (f"; largest rise {worst[3]:.3e} at eps={worst[0]:.4g}, eta {worst[1]}->{worst[2]}" if worst else ""))
    out.append(CheckResult("6c", "E* non-increasing in eta", not violating and not failures, detail, dt))

    t0 = time.perf_counter()
    pt = minimize_over_c(0, 0.9, 10.0)
    out.append(CheckResult("6d", "collapse at eta=0.9, eps=10", pt.c_star < COLLAPSE_C_MAX,
                           f"c*={pt.c_star:.4g} (< {COLLAPSE_C_MAX})", time.perf_counter() - t0))
    out.append(CheckResult("6e", "Figure-2 sweep runtime", dt < 1800.0 and not failures,
                           f"{len(points)} points in {dt:.1f}s with {workers} worker(s), "
                           f"{len(failures)} failed (limit 1800s)", dt))
    return out


# ---------------------------------------------------------------- 7

def check_lattice(seed: int = 0) -> list[CheckResult]:
    from .lattice import Fate, classify_trajectory

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    seeds = np.exp(rng.uniform(-5.0, 5.0, size=(100, 2)))
    bad_pos, bad_neg = [], []
    for c in (0.1, 0.5, 1.0, 2.0):
        for p0, p1 in seeds:
            tr = classify_trajectory(1.0, c, float(p0), float(p1))
            if tr.truncation_index is None or tr.forward is not Fate.BOUNDED_DECAYING:
                bad_pos.append((c, p0, p1, tr.forward.value, tr.backward.value))
    for c in (-0.1, -0.5):
        for p0, p1 in seeds:
            tr = classify_trajectory(1.0, c, float(p0), float(p1))
            if tr.classification is not Fate.UNBOUNDED:
                bad_neg.append((c, p0, p1, tr.classification.value))
    const = classify_trajectory(1.0, 0.0, 1.0, 1.0, window=1000)
    const_ok = const.classification is Fate.CONSTANT and bool(np.all(const.values == 1.0))
    dt = time.perf_counter() - t0
    ok = not bad_pos and not bad_neg and const_ok and dt < 60.0
    detail = (f"e_ratio>0: {400 - len(bad_pos)}/400 truncate back & decay forward; "
              f"e_ratio<0: {200 - len(bad_neg)}/200 unbounded; constant seed exact: {const_ok}; runtime<60s")
    return [CheckResult("7", "lattice truncation", ok, detail, dt)]


# ---------------------------------------------------------------- 8

def unit_gaussian(grid) -> DensityField:
    return DensityField(grid, np.exp(-grid.x**2) / math.sqrt(math.pi))


def small_shift_gap(eta: float, L: float) -> float:
    """max |Q_1NL - Q| over cells holding at least 1e-8 of the peak density."""
    from .nonlin import bohm_potential, q1nl

    params = ModelParams(eta, L)
    grid = make_grid(6.0, eta, L, min(0.01, eta * L / 4.0), "padded")
    p = unit_gaussian(grid)
    diff = np.abs(q1nl(p, params).values - bohm_potential(p, params).values)
    bulk = p.values >= 1e-8 * p.values.max()
    return float(diff[bulk].max())


def derivative_errors(functional: str, eta: float, L: float) -> float:
    """Worst |finite difference - field| over bulk probes, relative to the field's bulk scale."""
    from .nonlin import bohm_potential, functional_derivative_check, q1nl

    params = ModelParams(eta, L)
    grid = make_grid(6.0, eta, L, 0.0025, "padded")
    p = unit_gaussian(grid)
    field = (bohm_potential if functional == "fisher" else q1nl)(p, params).values
    bulk = p.values >= 1e-8 * p.values.max()
    scale = float(np.abs(field[bulk]).max())
    worst = 0.0
    for xi in np.linspace(-3.0, 3.0, 13):
        i = int(np.argmin(np.abs(grid.x - xi)))
        h = 1e-3 * p.values[i] * grid.dx
        chk = functional_derivative_check(functional, p, i, h, params)
        worst = max(worst, chk.abs_error / scale)
    return worst


def energy_drift_order(eta: float = 0.5, L: float = 0.2, horizon: float = 0.2,
                       steps: Sequence[int] = (250, 500, 1000)) -> float:
    """Convergence order of the energy at a fixed horizon under dt halving."""
    from .dynamics import evolve, gaussian_state

    params = ModelParams(eta, L)
    grid = make_grid(6.0, eta, L, 0.05, "periodic")
    psi0 = gaussian_state(grid, 1.0, x0=1.0)
    V = PotentialSpec.harmonic()
    finals = []
    for n in steps:
        _, diag = evolve(psi0, V, params, horizon / n, n, record_every=n)
        finals.append(diag.records[-1].energy)
    d = np.abs(np.diff(finals))
    return float(np.log2(d[0] / d[1]))


def check_properties(seed: int = 0) -> list[CheckResult]:
    from .dynamics import evolve, gaussian_state, max_stable_dt
    from .nonlin import f1
    from .perturb import scaling_exponent

    out = []
    rng = np.random.default_rng(seed)

    t0 = time.perf_counter()
    worst = 0.0
    for eta, L in ((0.3, 0.5), (0.7, 0.05), (1.0, 1.0)):
        params = ModelParams(eta, L)
        grid = make_grid(6.0, eta, L, 0.01, "padded")
        base = np.exp(-grid.x**2) * (1.0 + 0.3 * np.sin(3.0 * grid.x)) ** 2
        ref = f1(DensityField(grid, base), params).values
        for lam in 10.0 ** rng.uniform(-6, 6, size=4):
            got = f1(DensityField(grid, lam * base), params).values
            worst = max(worst, float(np.max(np.abs(got - ref)) / np.max(np.abs(ref))))
    out.append(CheckResult("8a", "F1 scale invariance", worst <= SCALE_INV_TOL,
                           f"sup-norm rel diff {worst:.2e} over lambda in [1e-6, 1e6] (tol {SCALE_INV_TOL})",
                           time.perf_counter() - t0))

    t0 = time.perf_counter()
    worst = 0.0
    for eta, L, c in ((0.5, 1.0, 0.3), (0.9, 0.1, 7.0), (0.1, 2.0, 1e-5)):
        grid = make_grid(5.0, eta, L, 0.02, "periodic")
        worst = max(worst, float(np.max(np.abs(f1(DensityField(grid, np.full(grid.count, c)),
                                                      ModelParams(eta, L)).values))))
    out.append(CheckResult("8b", "F1 of constant density", worst <= CONST_TOL,
                           f"max |F1| {worst:.2e} (tol {CONST_TOL})", time.perf_counter() - t0))

    t0 = time.perf_counter()
    cases = ((0.5, 1.0), (0.5, 0.1), (0.9, 0.5), (0.2, 0.2))
    fis = max(derivative_errors("fisher", e, L) for e, L in cases)
    kl = max(derivative_errors("kl", e, L) for e, L in cases)
    out.append(CheckResult("8c", "functional derivatives", max(fis, kl) <= DERIV_TOL,
                           f"dI_F/dp vs Q {fis:.2e}, dU_KL/dp vs Q_1NL {kl:.2e} (tol {DERIV_TOL}, "
                           f"relative to bulk field scale)", time.perf_counter() - t0))

    t0 = time.perf_counter()
    slopes = []
    for eta in np.round(np.arange(0.1, 0.91, 0.1), 10):
        Ls = [1e-1, 1e-2, 1e-3]
        gaps = [small_shift_gap(float(eta), L) for L in Ls]
        slope, _ = scaling_exponent([eta * L for L in Ls], gaps)
        slopes.append(slope)
    out.append(CheckResult("8d", "Q_1NL -> Q as eta*L -> 0", min(slopes) >= SMALL_SHIFT_SLOPE_MIN,
                           f"min fitted slope {min(slopes):.4f} over eta=0.1..0.9 (>= {SMALL_SHIFT_SLOPE_MIN})",
                           time.perf_counter() - t0))

    t0 = time.perf_counter()
    worst = 0.0
    for eta, eps, x0 in ((0.5, 0.2, 1.0), (0.9, 0.1, 0.0), (0.5, 1.0, 0.5), (1.0, 0.05, 1.0)):
        params = ModelParams.from_eps(eta, eps)
        grid = make_grid(6.0, eta, params.L, 0.05, "periodic")
        dt = max_stable_dt(grid, params)
        _, diag = evolve(gaussian_state(grid, 1.0, x0=x0), PotentialSpec.harmonic(), params, dt, 1000,
                         record_every=100)
        worst = max(worst, float(np.max(np.abs(diag.column("norm") - 1.0))))
    out.append(CheckResult("8e", "norm conservation, 1000 steps", worst <= NORM_TOL,
                           f"max |norm-1| {worst:.2e} (tol {NORM_TOL})", time.perf_counter() - t0))

    t0 = time.perf_counter()
    err_w, err_p = plane_wave_errors()
    out.append(CheckResult("8f", "plane-wave dispersion", max(err_w, err_p) <= DISPERSION_TOL,
                           f"|omega - k^2/2| {err_w:.2e}, max|p(t)-p(0)| {err_p:.2e} (tol {DISPERSION_TOL})",
                           time.perf_counter() - t0))

    t0 = time.perf_counter()
    order = energy_drift_order()
    out.append(CheckResult("8g", "split-step energy drift order", abs(order - DRIFT_ORDER) <= DRIFT_ORDER_TOL,
                           f"order {order:.3f} (target {DRIFT_ORDER}+-{DRIFT_ORDER_TOL})",
                           time.perf_counter() - t0))
    return out


def plane_wave_errors(eta: float = 0.5, L: float = 1.0, mode: int = 3, steps: int = 1000) -> tuple[float, float]:
    """Frequency error and density change of a free plane wave."""
    from .dynamics import evolve, max_stable_dt

    params = ModelParams(eta, L)
    grid = make_grid(5.0, eta, L, 0.05, "periodic")
    k = 2.0 * math.pi * mode / grid.length
    psi0 = WaveField(grid, np.exp(1j * k * grid.x)).normalized()
    dt = max_stable_dt(grid, params)
    psi, _ = evolve(psi0, PotentialSpec.free(grid), params, dt, steps, record_every=steps)
    t = dt * steps
    ratio = psi.values / psi0.values
    phase = float(np.angle(np.mean(ratio)))
    omega_exact = params.hbar * k**2 / (2.0 * params.mass)
    # compare phases modulo 2 pi
    err_w = abs(math.remainder(phase + omega_exact * t, 2.0 * math.pi)) / t
    err_p = float(np.max(np.abs(density_of(psi).values - density_of(psi0).values)))
    return err_w, err_p


# ---------------------------------------------------------------- 9

def identity_residuals(count: int = 20, seed: int = 0) -> list[tuple[int, float, float, float, float]]:
    """(n, eta, L, shift, mismatch) for random triples, mismatch = E - (n+1/2) - shift."""
    from .nonlin import total_energy
    from .perturb import first_order_shift, resolved_grid
    from .spectra import sho_eigenstate

    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(count):
        n = int(rng.integers(0, 6))
        eta = float(rng.uniform(0.1, 0.95))
        L = float(10.0 ** rng.uniform(-3, -2))
        params = ModelParams(eta, L)
        grid = resolved_grid(n, params)
        V = PotentialSpec.harmonic()
        state = sho_eigenstate(n, 1.0, grid, params)
        shift = first_order_shift(n, params, grid, V)
        mismatch = total_energy(state.psi, V, params) - (n + 0.5) - shift
        rows.append((n, eta, L, shift, mismatch))
    return rows


def check_identity(seed: int = 0) -> list[CheckResult]:
    rows, dt = _timed(identity_residuals, 20, seed)
    worst = max(abs(r[4]) for r in rows)
    return [CheckResult("9", "total_energy vs first_order_shift", worst <= IDENTITY_TOL,
                        f"20 random (n, eta, L): max mismatch {worst:.2e} (tol {IDENTITY_TOL})", dt)]


CHECKS: dict[int, Callable[..., list[CheckResult]]] = {
    1: check_perturbative_minimizer,
    2: check_sign_structure,
    3: check_scaling_split,
    4: check_asymptotic_minimizer,
    5: check_collapse_energy,
    6: check_variational,
    7: check_lattice,
    8: check_properties,
    9: check_identity,
}


def run_checks(only: Sequence[int] | None = None, seed: int = 0, workers: int = 1) -> list[CheckResult]:
    results = []
    for num, fn in CHECKS.items():
        if only and num not in only:
            continue
        if num in (7, 8, 9):
            results.extend(fn(seed=seed))
        elif num == 6:
            results.extend(fn(workers=workers))
        else:
            results.extend(fn())
    return results
