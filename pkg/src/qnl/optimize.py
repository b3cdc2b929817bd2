"""Golden-section search and a log-spaced multistart wrapper."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GoldenResult:
    x: float
    fx: float
    iterations: int
    converged: bool


def golden_section(f: Callable[[float], float], lo: float, hi: float,
                   tol: float = 1e-10, max_iter: int = 500) -> GoldenResult:
    """Minimise a unimodal f on [lo, hi] to an interval of width ``tol``."""
    if hi <= lo:
        raise ValueError("need lo < hi")
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    it = 0
    while hi - lo > tol and it < max_iter:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
        it += 1
    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    converged = hi - lo <= tol and math.isfinite(fx)
    return GoldenResult(x, fx, it, converged)


def parabolic_vertex(xs, ys) -> float:
    """Vertex of the parabola through three points."""
    (x0, x1, x2), (y0, y1, y2) = xs, ys
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a <= 0:
        return x1
    return -b / (2 * a)
