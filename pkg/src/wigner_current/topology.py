"""Stagnation points of phase-space currents and their orientation winding numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .grid import Grid, VectorField


class TopologyError(ValueError):
    pass


class LoopTouchesStagnation(TopologyError):
    pass


class NonIntegerWinding(TopologyError):
    pass


QUANTIZATION_TOL = 0.05
NORM_FLOOR = 1e-12
# increments above this are ambiguous; the segment is resampled
MAX_STEP = 0.75 * math.pi
MAX_BISECT = 12


@dataclass(frozen=True)
class Loop:
    center: tuple[float, float]
    radius: float
    samples: int = 64

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("loop radius must be positive")
        if self.samples < 8:
            raise ValueError("a loop needs at least 8 samples")

    def point(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Position at parameter ``t`` in [0, 1)."""
        phi = 2 * math.pi * np.asarray(t)
        return self.center[0] + self.radius * np.cos(phi), self.center[1] + self.radius * np.sin(phi)

    def inside(self, grid: Grid) -> bool:
        x0, p0 = self.center
        r = self.radius
        return (grid.x_min < x0 - r and x0 + r < grid.x_max and grid.p_min < p0 - r and p0 + r < grid.p_max)


def bilinear(j: VectorField, x: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear interpolation of both current components at points (x, p)."""
    g = j.grid
    fx = (np.asarray(x) - g.x_min) / g.hx
    fp = (np.asarray(p) - g.p_min) / g.hp
    i = np.clip(np.floor(fx).astype(int), 0, g.nx - 2)
    k = np.clip(np.floor(fp).astype(int), 0, g.n_p - 2)
    s = fx - i
    t = fp - k
    out = []
    for comp in (j.jx, j.jp):
        a = comp.reshape(g.shape)
        out.append(
            (1 - s) * (1 - t) * a[i, k] + s * (1 - t) * a[i + 1, k] + (1 - s) * t * a[i, k + 1] + s * t * a[i + 1, k + 1]
        )
    return out[0], out[1]


def _wrap(d: np.ndarray) -> np.ndarray:
    return (d + math.pi) % (2 * math.pi) - math.pi


def winding_value(j: VectorField, loop: Loop) -> float:
    """Net orientation change of J around ``loop`` in units of 2 pi (before rounding).

    Segments whose wrapped angle step exceeds ``MAX_STEP`` are bisected until
    the interpolated field is resolved.
    """
    if not loop.inside(j.grid):
        raise TopologyError("loop leaves the grid")
    scale = float(j.norm().max())
    floor = NORM_FLOOR * scale

    def angle(t):
        jx, jp = bilinear(j, *loop.point(t))
        if scale == 0.0 or np.any(np.hypot(jx, jp) <= floor):
            raise LoopTouchesStagnation("current vanishes on the loop")
        return np.arctan2(jp, jx)

    t = np.arange(loop.samples) / loop.samples
    phi = angle(t)
    steps = _wrap(np.diff(np.append(phi, phi[0])))
    total = 0.0
    for k in range(loop.samples):
        if abs(steps[k]) <= MAX_STEP:
            total += steps[k]
            continue
        total += _resolve(angle, t[k], t[k] + 1.0 / loop.samples, phi[k], MAX_BISECT)
    return total / (2 * math.pi)


def _resolve(angle, t0, t1, phi0, depth) -> float:
    ts = np.linspace(t0, t1, 9)
    phis = angle(ts)
    phis[0] = phi0
    steps = _wrap(np.diff(phis))
    out = 0.0
    for k, d in enumerate(steps):
        if abs(d) > MAX_STEP:
            if depth == 0:
                raise NonIntegerWinding("field orientation is not resolved along the loop")
            out += _resolve(angle, ts[k], ts[k + 1], phis[k], depth - 1)
        else:
            out += d
    return out


def winding_number(j: VectorField, loop: Loop) -> int:
    value = winding_value(j, loop)
    n = round(value)
    if abs(value - n) > QUANTIZATION_TOL:
        raise NonIntegerWinding(f"winding {value:.4f} is not within {QUANTIZATION_TOL} of an integer")
    return int(n)


@dataclass(frozen=True)
class StagnationPoint:
    x: float
    p: float
    charge: int


@dataclass(frozen=True)
class StagnationReport:
    points: tuple[StagnationPoint, ...]
    field_norm_floor: float
    flagged_nodes: int = 0
    unresolved: tuple[tuple[float, float], ...] = field(default_factory=tuple)


def find_stagnation_points(j: VectorField, floor_frac: float = 1e-3, samples: int = 64) -> StagnationReport:
    """Locate isolated stagnation points and attach their charges.

    A node is a candidate when |J| falls below ``floor_frac * max|J|``; a cell
    is a candidate when both components change sign across its corners.
    Connected candidate regions touching the grid edge are treated as the
    numerically vanishing far field and skipped.
    """
    if not 0 < floor_frac < 1:
        raise ValueError("floor_frac must lie in (0, 1)")
    g = j.grid
    norm = j.norm().reshape(g.shape)
    floor = floor_frac * float(norm.max())
    below = norm <= floor
    jx = j.jx.reshape(g.shape)
    jp = j.jp.reshape(g.shape)

    def straddles(a):
        corners = np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])
        return (corners.min(axis=0) < 0) & (corners.max(axis=0) > 0)

    cells = straddles(jx) & straddles(jp)
    mask = below.copy()
    # a flagged cell marks its four corner nodes
    for di in (0, 1):
        for dk in (0, 1):
            mask[di : g.nx - 1 + di, dk : g.n_p - 1 + dk] |= cells
    labels, count = ndimage.label(mask, structure=np.ones((3, 3)))
    X, P = g.mesh()
    radius = 3 * max(g.hx, g.hp)
    points = []
    unresolved = []
    for lab in range(1, count + 1):
        sel = labels == lab
        if sel[0, :].any() or sel[-1, :].any() or sel[:, 0].any() or sel[:, -1].any():
            continue
        cx, cp = float(X[sel].mean()), float(P[sel].mean())
        loop = Loop((cx, cp), radius, samples)
        try:
            points.append(StagnationPoint(cx, cp, winding_number(j, loop)))
        except TopologyError:
            unresolved.append((cx, cp))
    return StagnationReport(tuple(points), floor, int(below.sum()), tuple(unresolved))


def origin_charge(j: VectorField, radius: float, samples: int = 64) -> int:
    return winding_number(j, Loop((0.0, 0.0), radius, samples))
