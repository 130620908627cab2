"""Phase-space lattice, sampled fields and the forward-difference calculus.

Fields are stored flat in row-major order with the x index outermost, so the
value at lattice point ``(i, j)`` lives at ``i * n_p + j``.  Everything outside
the lattice is treated as zero; the forward difference at the last index is
therefore ``(0 - f) / h``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp


class Axis(enum.Enum):
    X = 0
    P = 1


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular lattice in (x, p) quadrature units (vacuum variance 1/2)."""

    nx: int
    n_p: int
    x_min: float
    x_max: float
    p_min: float
    p_max: float

    def __post_init__(self) -> None:
        if self.nx < 4 or self.n_p < 4:
            raise ValueError(f"grid needs at least 4 points per axis, got {self.nx}x{self.n_p}")
        if not (self.x_max > self.x_min and self.p_max > self.p_min):
            raise ValueError("grid extents must be increasing")

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def hp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def size(self) -> int:
        return self.nx * self.n_p

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.n_p)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, P)`` coordinate arrays of shape ``(nx, n_p)``."""
        return np.meshgrid(self.x, self.p, indexing="ij")

    def flat_index(self, i: int, j: int) -> int:
        return i * self.n_p + j

    def step(self, axis: Axis) -> float:
        return self.hx if axis is Axis.X else self.hp

    def contains(self, x: float, p: float) -> bool:
        return self.x_min <= x <= self.x_max and self.p_min <= p <= self.p_max


def make_grid(nx: int, n_p: int, x_half: float, p_half: float) -> Grid:
    """Grid symmetric about the origin; odd counts put a lattice point at (0, 0)."""
    if x_half <= 0 or p_half <= 0:
        raise ValueError("grid half-widths must be positive")
    return Grid(int(nx), int(n_p), -float(x_half), float(x_half), -float(p_half), float(p_half))


def _frozen(values: Any, size: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size != size:
        raise ValueError(f"{name} has {arr.size} values, grid needs {size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Samples of a scalar function on a grid.

    ``source`` optionally carries the analytic state the samples were rendered
    from; consumers may use it for exact derivatives.
    """

    grid: Grid
    values: np.ndarray
    source: Any = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values, self.grid.size, "values"))

    def as_2d(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self.grid, other.grid)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self.grid, other.grid)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """Samples of a phase-space current ``(J_x, J_p)`` on a grid."""

    grid: Grid
    jx: np.ndarray
    jp: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "jx", _frozen(self.jx, self.grid.size, "jx"))
        object.__setattr__(self, "jp", _frozen(self.jp, self.grid.size, "jp"))

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros(grid.size), np.zeros(grid.size))

    def norm(self) -> np.ndarray:
        return np.hypot(self.jx, self.jp)

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self.grid, other.grid)
        return VectorField(self.grid, self.jx + other.jx, self.jp + other.jp)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self.grid, other.grid)
        return VectorField(self.grid, self.jx - other.jx, self.jp - other.jp)

    def __mul__(self, c: float) -> "VectorField":
        return VectorField(self.grid, c * self.jx, c * self.jp)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, -self.jx, -self.jp)


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError("fields live on different grids")


def sample(grid: Grid, fn) -> ScalarField:
    """Evaluate ``fn(X, P)`` on the lattice."""
    X, P = grid.mesh()
    return ScalarField(grid, np.broadcast_to(fn(X, P), grid.shape))


def forward_diff(f: ScalarField, axis: Axis) -> ScalarField:
    """Forward difference along ``axis`` with zero padding past the last index."""
    a = f.as_2d()
    h = f.grid.step(axis)
    ax = axis.value
    padded = np.concatenate([a, np.zeros_like(np.take(a, [0], axis=ax))], axis=ax)
    return ScalarField(f.grid, np.diff(padded, axis=ax) / h)


def divergence(j: VectorField) -> ScalarField:
    g = j.grid
    return forward_diff(ScalarField(g, j.jx), Axis.X) + forward_diff(ScalarField(g, j.jp), Axis.P)


def _forward_1d(n: int, h: float) -> sp.csr_matrix:
    return sp.diags([-np.ones(n), np.ones(n - 1)], [0, 1], format="csr") / h


def forward_diff_matrix(grid: Grid, axis: Axis) -> sp.csr_matrix:
    """Sparse operator equal to :func:`forward_diff` on flat value arrays."""
    if axis is Axis.X:
        return sp.kron(_forward_1d(grid.nx, grid.hx), sp.identity(grid.n_p), format="csr")
    return sp.kron(sp.identity(grid.nx), _forward_1d(grid.n_p, grid.hp), format="csr")


def trapezoid_weights(grid: Grid) -> np.ndarray:
    wx = np.full(grid.nx, grid.hx)
    wx[[0, -1]] *= 0.5
    wp = np.full(grid.n_p, grid.hp)
    wp[[0, -1]] *= 0.5
    return np.outer(wx, wp).reshape(-1)


def quadrature_integral(f: ScalarField) -> float:
    """Two-dimensional trapezoidal integral of ``f`` over the grid rectangle."""
    return float(trapezoid_weights(f.grid) @ f.values)
