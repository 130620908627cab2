"""Wigner currents of the degenerate squeezer and of its thermal environment.

    J_sys  = xi * (x W cos(theta) + p W sin(theta),  x W sin(theta) - p W cos(theta))
    J_damp = -(gamma / 2) W (x, p)
    J_diff = -(gamma / 2) (n_bar + 1/2) grad W
    J_env  = J_damp + J_diff

with omega_0 = hbar = 1.  Each current satisfies dW/dtau = -div J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianState, MixtureState, wigner_gradient
from .grid import Axis, ScalarField, VectorField, divergence, forward_diff


@dataclass(frozen=True)
class SystemParams:
    xi: float
    theta: float = math.pi / 2
    omega0: float = 1.0

    def __post_init__(self) -> None:
        if self.omega0 != 1.0:
            raise ValueError("omega0 is fixed to 1 by the unit convention")
        if self.xi < 0:
            raise ValueError("xi must be non-negative")

    def drift_matrix(self) -> np.ndarray:
        """Velocity Jacobian of J_sys / W."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return self.xi * np.array([[c, s], [s, -c]])


@dataclass(frozen=True)
class EnvParams:
    gamma: float
    n_bar: float

    def __post_init__(self) -> None:
        if self.gamma < 0 or self.n_bar < 0:
            raise ValueError("gamma and n_bar must be non-negative")

    @property
    def diffusion(self) -> float:
        """Coefficient multiplying -grad W in J_diff."""
        return 0.5 * self.gamma * (self.n_bar + 0.5)


def j_sys(w: ScalarField, sp: SystemParams) -> VectorField:
    X, P = w.grid.mesh()
    W = w.as_2d()
    (a, b), (c, d) = sp.drift_matrix()
    return VectorField(w.grid, (a * X + b * P) * W, (c * X + d * P) * W)


def j_damp(w: ScalarField, ep: EnvParams) -> VectorField:
    X, P = w.grid.mesh()
    W = w.as_2d()
    k = -0.5 * ep.gamma
    return VectorField(w.grid, k * X * W, k * P * W)


def field_gradient(w: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient when ``w`` was rendered from a Gaussian state, else forward differences."""
    if isinstance(w.source, (GaussianState, MixtureState)):
        return wigner_gradient(w.source, w.grid)
    return forward_diff(w, Axis.X).values, forward_diff(w, Axis.P).values


def j_diff(w: ScalarField, ep: EnvParams) -> VectorField:
    gx, gp = field_gradient(w)
    k = -ep.diffusion
    return VectorField(w.grid, k * gx, k * gp)


def j_env(w: ScalarField, ep: EnvParams) -> VectorField:
    return j_damp(w, ep) + j_diff(w, ep)


def continuity_residual(w_t: ScalarField, w_next: ScalarField, j: VectorField, d_tau: float) -> ScalarField:
    """(W_next - W_t) / d_tau + div J, pointwise."""
    if d_tau <= 0:
        raise ValueError("d_tau must be positive")
    if not (w_t.grid == w_next.grid == j.grid):
        raise ValueError("fields live on different grids")
    return ScalarField(w_t.grid, (w_next.values - w_t.values) / d_tau) + divergence(j)
