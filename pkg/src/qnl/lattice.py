"""The fully discretised stationary equation and its boundedness analysis.

With p(x + L) -> p_{n+1} and eta = 1 the free stationary equation reads

    E / escale = ln(p_n / p_{n+1}) + 1 - p_{n-1} / p_n

Writing t_n = p_{n-1} / p_n turns it into the one-dimensional map
t_{n+1} = exp(t_n + c - 1) with c = E / escale, whose fixed points decide
whether a positive solution can stay bounded and where it must end.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import lambertw


@dataclass(frozen=True)
class Truncation:
    """Backward step would need p <= 0; ``bracket`` is the offending value."""

    bracket: float


@dataclass(frozen=True)
class NoSolution:
    """No positive root: the target exceeds ``supremum`` of the bracket."""

    supremum: float


class Fate(str, enum.Enum):
    BOUNDED_DECAYING = "BoundedDecaying"
    CONSTANT = "Constant"
    UNBOUNDED = "Unbounded"
    TRUNCATED = "TruncatedAt"
    INCONCLUSIVE = "Inconclusive"


def step_forward_eta1(p_prev: float, p_cur: float, e_ratio: float) -> float:
    """p_{n+1} = p_n exp(1 - p_{n-1}/p_n - E/escale).

    Raises OverflowError past the float range; underflow returns 0.0.
    """
    if p_prev <= 0 or p_cur <= 0:
        raise ValueError("lattice densities must be positive")
    return p_cur * math.exp(1.0 - p_prev / p_cur - e_ratio)


def step_backward_eta1(p_cur: float, p_next: float, e_ratio: float) -> float | Truncation:
    if p_cur <= 0 or p_next <= 0:
        raise ValueError("lattice densities must be positive")
    bracket = math.log(p_cur / p_next) + 1.0 - e_ratio
    if bracket <= 0:
        return Truncation(bracket)
    return p_cur * bracket


def bracket_general(u: float, p_prev: float, p_cur: float, eta: float) -> float:
    """The nonlocal bracket at site n as a function of u = p_{n+1}/p_n."""
    m = (1.0 - eta) + eta * u
    back = eta * p_prev / ((1.0 - eta) * p_prev + eta * p_cur)
    return -math.log(m) + 1.0 - (1.0 - eta) / m - back


def _bisect_log(f, lo: float, hi: float, max_iter: int = 400) -> float:
    """Root of decreasing f with f(lo) > 0 > f(hi), bisected in log space."""
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-15:
            break
    return math.sqrt(lo * hi)


def step_forward_general(p_prev: float, p_cur: float, e_ratio: float, eta: float) -> float | NoSolution:
    """Solve bracket(u) = eta^4 * E/escale for u = p_{n+1}/p_n by bisection.

    The bracket decreases strictly in u, from ``-ln(1-eta) - back`` at
    u -> 0+ to -inf, so the root is unique whenever it exists.
    """
    if not (0.0 < eta <= 1.0):
        raise ValueError("eta must lie in (0, 1]")
    if eta == 1.0:
        return step_forward_eta1(p_prev, p_cur, e_ratio)
    if p_prev <= 0 or p_cur <= 0:
        raise ValueError("lattice densities must be positive")
    target = eta**4 * e_ratio
    back = eta * p_prev / ((1.0 - eta) * p_prev + eta * p_cur)
    sup = -math.log1p(-eta) - back
    if target >= sup:
        return NoSolution(sup)

    def f(u):
        return bracket_general(u, p_prev, p_cur, eta) - target

    lo = hi = 1.0
    f1 = f(1.0)
    if f1 == 0:
        return p_cur
    if f1 > 0:
        while f(hi) > 0:
            hi *= 2.0
            if hi > 1e300:
                raise OverflowError("forward ratio exceeds float range")
    else:
        while f(lo) <= 0:
            lo *= 0.5
            if lo < 1e-300:
                return NoSolution(sup)
    if f(lo) == 0:
        return p_cur * lo
    return p_cur * _bisect_log(f, lo, hi)


def step_backward_general(p_cur: float, p_next: float, e_ratio: float,
                          eta: float) -> float | Truncation | NoSolution:
    """Invert the general-eta step for p_{n-1} in closed form."""
    if eta == 1.0:
        return step_backward_eta1(p_cur, p_next, e_ratio)
    if p_cur <= 0 or p_next <= 0:
        raise ValueError("lattice densities must be positive")
    u = p_next / p_cur
    m = (1.0 - eta) + eta * u
    k = -math.log(m) + 1.0 - (1.0 - eta) / m - eta**4 * e_ratio
    if k <= 0:
        return Truncation(k)
    cap = eta / (1.0 - eta)
    if k >= cap:
        return NoSolution(cap)
    return p_cur * k * eta / (eta - k * (1.0 - eta))


@dataclass(frozen=True)
class RatioMapAnalysis:
    c: float
    fixed_points: tuple[float, ...]
    stable: tuple[bool, ...]


def ratio_map(t: float, c: float) -> float:
    return math.exp(t + c - 1.0)


def ratio_fixed_points(e_ratio: float) -> RatioMapAnalysis:
    """Fixed points of t -> exp(t + c - 1), via the two real Lambert-W branches."""
    c = e_ratio
    if c > 0:
        return RatioMapAnalysis(c, (), ())
    if c == 0:
        return RatioMapAnalysis(c, (1.0,), (False,))
    z = -math.exp(c - 1.0)
    roots = []
    for branch in (0, -1):
        t = -float(lambertw(z, branch).real)
        # Newton polish on t - exp(t + c - 1)
        for _ in range(3):
            fv = t - ratio_map(t, c)
            d = 1.0 - ratio_map(t, c)
            if d == 0:
                break
            t -= fv / d
        roots.append(t)
    roots.sort()
    # the map's derivative at a fixed point equals t itself
    return RatioMapAnalysis(c, tuple(roots), tuple(abs(t) < 1.0 for t in roots))


@dataclass(frozen=True)
class LatticeTrajectory:
    eta: float
    e_ratio: float
    seeds: tuple[float, float]
    values: np.ndarray = field(repr=False)
    start_index: int
    truncation_index: int | None
    forward: Fate
    backward: Fate
    forward_truncation_index: int | None = None

    @property
    def classification(self) -> Fate:
        if self.forward is Fate.CONSTANT and self.backward is Fate.CONSTANT:
            return Fate.CONSTANT
        if Fate.UNBOUNDED in (self.forward, self.backward):
            return Fate.UNBOUNDED
        if self.truncation_index is not None:
            return Fate.TRUNCATED
        if self.forward is Fate.BOUNDED_DECAYING:
            return Fate.BOUNDED_DECAYING
        return Fate.INCONCLUSIVE

    @property
    def indices(self) -> np.ndarray:
        return self.start_index + np.arange(self.values.size)

    def csv_rows(self) -> list[list]:
        return [[self.eta, self.e_ratio, int(i), float(p)] for i, p in zip(self.indices, self.values)]

    def summary(self) -> str:
        trunc = "none" if self.truncation_index is None else str(self.truncation_index)
        return (
            f"eta={self.eta} e_ratio={self.e_ratio} classification={self.classification.value} "
            f"forward={self.forward.value} backward={self.backward.value} truncation_index={trunc}"
        )


def _forward(eta, e_ratio, p0, p1, window, upper, lower):
    out = []
    prev, cur = p0, p1
    for _ in range(window):
        try:
            nxt = step_forward_general(prev, cur, e_ratio, eta)
        except OverflowError:
            return out, Fate.UNBOUNDED, None
        if isinstance(nxt, NoSolution):
            return out, Fate.TRUNCATED, len(out) + 2
        if nxt == cur == prev:
            return out, Fate.CONSTANT, None
        if nxt > upper or not math.isfinite(nxt):
            out.append(nxt)
            return out, Fate.UNBOUNDED, None
        if nxt < lower:
            if nxt > 0:  # an underflow to 0.0 classifies but is not stored
                out.append(nxt)
            return out, Fate.BOUNDED_DECAYING, None
        out.append(nxt)
        prev, cur = cur, nxt
    return out, Fate.INCONCLUSIVE, None


def _backward(eta, e_ratio, p0, p1, window, upper, lower):
    out = []
    cur, nxt = p0, p1
    for _ in range(window):
        prv = step_backward_general(cur, nxt, e_ratio, eta)
        if isinstance(prv, Truncation):
            return out, Fate.TRUNCATED, -(len(out) + 1)
        if isinstance(prv, NoSolution):
            return out, Fate.UNBOUNDED, None
        if prv == cur == nxt:
            return out, Fate.CONSTANT, None
        if prv > upper or not math.isfinite(prv):
            out.append(prv)
            return out, Fate.UNBOUNDED, None
        if prv < lower:
            if prv > 0:
                out.append(prv)
            return out, Fate.BOUNDED_DECAYING, None
        out.append(prv)
        cur, nxt = prv, cur
    return out, Fate.INCONCLUSIVE, None


def classify_trajectory(eta: float, e_ratio: float, p_prev: float, p_cur: float,
                        window: int = 10_000, bound: float = 1e100) -> LatticeTrajectory:
    """Iterate both ways from seeds at indices 0 and 1 and classify.

    Forward stops on exceeding ``bound * max(seed)`` (Unbounded) or falling
    below ``1e-300 * max(seed)`` (BoundedDecaying).  Backward stops at the
    first index whose density could not be positive (its index is the
    truncation index).
    """
    if window > 1_000_000:
        raise ValueError("window is capped at 1e6 steps")
    if p_prev <= 0 or p_cur <= 0:
        raise ValueError("seeds must be positive")
    scale = max(p_prev, p_cur)
    upper, lower = bound * scale, 1e-300 * scale
    fwd, f_fate, f_trunc = _forward(eta, e_ratio, p_prev, p_cur, window, upper, lower)
    bwd, b_fate, b_trunc = _backward(eta, e_ratio, p_prev, p_cur, window, upper, lower)
    values = np.array(bwd[::-1] + [p_prev, p_cur] + fwd, dtype=float)
    return LatticeTrajectory(
        eta=eta,
        e_ratio=e_ratio,
        seeds=(p_prev, p_cur),
        values=values,
        start_index=-len(bwd),
        truncation_index=b_trunc,
        forward=f_fate,
        backward=b_fate,
        forward_truncation_index=f_trunc,
    )
