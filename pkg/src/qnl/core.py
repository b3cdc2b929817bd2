"""Units, parameters, shift-aligned grids and field containers.

Every nonlocal term in the model samples the density at ``x +/- eta*L``.
Grids are built so that this displacement is an integer number of cells,
which lets the shifted density be formed by index arithmetic alone.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# p_floor = FLOOR_RATIO * max(p)
FLOOR_RATIO = 1e-12
MAX_GRID_CELLS = 50_000_000


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    PADDED_FLOOR = "padded"


@dataclass(frozen=True)
class ModelParams:
    """Physical constants plus the two parameters of the nonlinearity.

    ``escale`` is derived from ``escale * L**2 = hbar**2 / (4 * mass)``.
    Natural units (hbar = mass = omega = 1) give ``a = 1`` and
    ``escale = 1 / (4 L**2)``.
    """

    eta: float
    L: float
    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise ValueError(f"L must be positive and finite, got {self.L}")
        if self.hbar <= 0 or self.mass <= 0 or self.omega <= 0:
            raise ValueError("hbar, mass and omega must be positive")

    @classmethod
    def from_eps(cls, eta: float, eps: float, **kw) -> "ModelParams":
        """Build parameters from the dimensionless scale ``eps = L / a``."""
        hbar = kw.get("hbar", 1.0)
        mass = kw.get("mass", 1.0)
        omega = kw.get("omega", 1.0)
        a = math.sqrt(hbar / (mass * omega))
        return cls(eta=eta, L=eps * a, **kw)

    @property
    def escale(self) -> float:
        return self.hbar**2 / (4.0 * self.mass) / self.L**2

    @property
    def a(self) -> float:
        """Oscillator length sqrt(hbar / (m omega))."""
        return math.sqrt(self.hbar / (self.mass * self.omega))

    @property
    def eps(self) -> float:
        return self.L / self.a

    @property
    def shift_length(self) -> float:
        return self.eta * self.L

    @property
    def prefactor(self) -> float:
        """escale / eta**4, the scale in front of the nonlocal bracket."""
        return self.escale / self.eta**4

    @property
    def clamp_bound(self) -> float:
        return self.prefactor * (abs(math.log(FLOOR_RATIO)) + 2.0)


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    dx: float
    count: int
    shift_cells: int
    boundary: Boundary = Boundary.PADDED_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.dx <= 0 or not math.isfinite(self.dx):
            raise ValueError(f"dx must be positive, got {self.dx}")
        if self.shift_cells < 1:
            raise ValueError("shift_cells must be >= 1")
        if self.count <= 4 * self.shift_cells:
            raise ValueError(
                f"count={self.count} must exceed 4*shift_cells={4 * self.shift_cells}"
            )

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.count)

    @property
    def shift_length(self) -> float:
        return self.shift_cells * self.dx

    @property
    def length(self) -> float:
        return self.count * self.dx

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    def weights(self) -> np.ndarray:
        """Trapezoid weights; on a periodic grid every node carries dx."""
        w = np.full(self.count, self.dx)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.dx
        return w

    def integrate(self, values: np.ndarray) -> float:
        # np.sum is pairwise, so the reduction order is fixed
        return float(np.sum(self.weights() * values))

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "dx": self.dx,
            "count": self.count,
            "shift_cells": self.shift_cells,
            "boundary": self.boundary.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grid1D":
        return cls(
            x_min=d["x_min"],
            dx=d["dx"],
            count=d["count"],
            shift_cells=d.get("shift_cells", 1),
            boundary=d.get("boundary", "padded"),
        )


def make_grid(
    domain_halfwidth: float,
    eta: float,
    L: float,
    target_dx: float,
    boundary: Boundary | str = Boundary.PADDED_FLOOR,
) -> Grid1D:
    """Uniform grid on which ``eta * L`` is exactly ``shift_cells`` cells.

    The spacing is snapped to ``dx = eta*L/s`` with ``s = round(eta*L/target_dx)``.
    The domain is widened when needed so that ``count > 4*s``; x = 0 is
    always a node.
    """
    shift = eta * L
    if not (target_dx > 0 and shift > 0):
        raise ValueError("target_dx and eta*L must be positive")
    if 2.0 * domain_halfwidth < shift:
        raise ValueError(
            f"domain [-{domain_halfwidth}, {domain_halfwidth}] is smaller than one shift {shift}"
        )
    s = max(1, int(round(shift / target_dx)))
    dx = shift / s
    count = max(int(math.ceil(2.0 * domain_halfwidth / dx - 1e-9)), 4 * s + 1)
    if count > MAX_GRID_CELLS or s > MAX_GRID_CELLS:
        raise ValueError(f"grid too large: count={count}, shift_cells={s}")
    x_min = -(count // 2) * dx
    return Grid1D(x_min=x_min, dx=dx, count=count, shift_cells=s, boundary=Boundary(boundary))


def density_floor(values: np.ndarray) -> float:
    peak = float(np.max(values)) if values.size else 0.0
    return FLOOR_RATIO * peak if peak > 0 else FLOOR_RATIO


@dataclass(frozen=True)
class DensityField:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.count,):
            raise ValueError(f"expected {self.grid.count} values, got shape {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def floor(self) -> float:
        return density_floor(self.values)

    def floored(self) -> np.ndarray:
        return np.maximum(self.values, self.floor)

    def norm(self) -> float:
        return self.grid.integrate(self.values)

    def scaled(self, factor: float) -> "DensityField":
        return DensityField(self.grid, self.values * factor)


@dataclass(frozen=True)
class WaveField:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.count,):
            raise ValueError(f"expected {self.grid.count} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return self.grid.integrate(np.abs(self.values) ** 2)

    def normalized(self) -> "WaveField":
        return WaveField(self.grid, self.values / math.sqrt(self.norm()))


@dataclass(frozen=True)
class NonlinearField:
    """An energy-valued field on a grid (Q, Q_1NL or F1)."""

    grid: Grid1D
    values: np.ndarray


def density_of(psi: WaveField) -> DensityField:
    v = psi.values
    return DensityField(psi.grid, v.real**2 + v.imag**2)


def shift_density(p: DensityField, direction: int) -> DensityField:
    """Return the density sampled at ``x + direction * eta * L``.

    Periodic grids wrap; padded grids fill the vacated cells with the floor.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    return DensityField(p.grid, shifted_values(p.values, p.grid, direction, p.floor))


def shifted_values(values: np.ndarray, grid: Grid1D, direction: int, fill: float) -> np.ndarray:
    s = grid.shift_cells
    if grid.periodic:
        return np.roll(values, -direction * s)
    out = np.empty_like(values)
    if direction == 1:
        out[:-s] = values[s:]
        out[-s:] = fill
    else:
        out[s:] = values[:-s]
        out[:s] = fill
    return out


@dataclass(frozen=True)
class PotentialSpec:
    """External potential: harmonic ``m omega^2 x^2 / 2`` or tabulated on a grid."""

    kind: str
    omega: float = 1.0
    values: np.ndarray | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("harmonic", "tabulated"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.values is None:
                raise ValueError("tabulated potential needs values")
            object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @classmethod
    def harmonic(cls, omega: float = 1.0) -> "PotentialSpec":
        return cls("harmonic", omega=omega, label="sho")

    @classmethod
    def tabulated(cls, values, label: str = "tabulated") -> "PotentialSpec":
        return cls("tabulated", values=values, label=label)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], grid: Grid1D,
                      label: str = "tabulated") -> "PotentialSpec":
        return cls.tabulated(func(grid.x), label=label)

    @classmethod
    def free(cls, grid: Grid1D) -> "PotentialSpec":
        return cls.tabulated(np.zeros(grid.count), label="free")

    def on_grid(self, grid: Grid1D, params: ModelParams | None = None) -> np.ndarray:
        if self.kind == "harmonic":
            mass = params.mass if params is not None else 1.0
            return 0.5 * mass * self.omega**2 * grid.x**2
        if self.values.shape != (grid.count,):
            raise ValueError(
                f"tabulated potential has {self.values.size} values, grid has {grid.count}"
            )
        return self.values


def field_to_csv(grid: Grid1D, values: np.ndarray) -> str:
    lines = ["x,value"]
    lines += [f"{x!r},{v!r}" for x, v in zip(grid.x.tolist(), np.asarray(values).tolist())]
    return "\n".join(lines) + "\n"


def field_to_json(grid: Grid1D, values: np.ndarray) -> str:
    vals = np.asarray(values)
    if np.iscomplexobj(vals):
        payload = [[float(z.real), float(z.imag)] for z in vals]
    else:
        payload = vals.tolist()
    return json.dumps({"grid": grid.to_dict(), "values": payload})


def field_from_json(text: str) -> tuple[Grid1D, np.ndarray]:
    d = json.loads(text)
    grid = Grid1D.from_dict(d["grid"])
    vals = d["values"]
    if vals and isinstance(vals[0], list):
        arr = np.array([complex(re, im) for re, im in vals])
    else:
        arr = np.array(vals, dtype=float)
    return grid, arr
