"""Real-time and imaginary-time runs of the nonlinear equation.

1. Coherent oscillation of a displaced Gaussian at small eta*L.
2. Ground-state energies by relaxation against the variational E* for small eps.
3. The eps=1 run that develops a tail singularity and aborts.

    python scripts/dynamics_demo.py
"""
import math

import numpy as np

from qnl.core import ModelParams, PotentialSpec, make_grid
from qnl.dynamics import StabilityError, evolve, gaussian_state, max_stable_dt, relax_ground_state
from qnl.variational import minimize_over_c

SHO = PotentialSpec.harmonic()


def oscillation() -> None:
    params = ModelParams(0.5, 0.2)
    grid = make_grid(6.0, 0.5, 0.2, 0.05, "periodic")
    dt = 5e-4
    _, diag = evolve(gaussian_state(grid, 1.0, x0=1.0), SHO, params, dt, int(5.0 / dt), record_every=10)
    t, xc = diag.column("t"), diag.column("centroid")
    idx = np.flatnonzero(np.sign(xc[:-1]) != np.sign(xc[1:]))
    cross = [t[i] - xc[i] * (t[i + 1] - t[i]) / (xc[i + 1] - xc[i]) for i in idx]
    period = 2 * (cross[1] - cross[0])
    drift = np.max(np.abs(diag.column("norm") - 1))
    print(f"centroid period {period:.5f} (2 pi = {2 * math.pi:.5f}), max norm drift {drift:.1e}")


def relaxation() -> None:
    for eta in (0.1, 0.5, 0.9):
        params = ModelParams.from_eps(eta, 0.01)
        grid = make_grid(8.0, eta, params.L, 0.005, "periodic")
        res = relax_ground_state(SHO, params, grid)
        var = minimize_over_c(0, eta, 0.01).E_star
        print(f"eta={eta}: relaxed E={res.energy:.7f} ({res.message}), variational E*={var:.7f}")


def singular_run() -> None:
    params = ModelParams.from_eps(0.5, 1.0)
    grid = make_grid(8.0, 0.5, 1.0, 0.05, "periodic")
    dt = min(1e-3, max_stable_dt(grid, params))
    try:
        evolve(gaussian_state(grid), SHO, params, dt, 10_000, record_every=100)
    except StabilityError as exc:
        print(f"eta=0.5, eps=1: {exc}")


if __name__ == "__main__":
    oscillation()
    relaxation()
    singular_run()
