"""Ground-truth dynamics of the squeezer in contact with a thermal bath.

Two independent routes are provided: exact second-moment (Lyapunov)
propagation and an explicit finite-difference integration of the continuity
equation on the grid.  Each one serves as the other's check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .currents import EnvParams, SystemParams
from .gaussian import (
    GaussianState,
    MixtureState,
    fit_mixture_weights,
    gaussian_wigner_field,
    mixture_wigner,
    thermal_state,
    vacuum,
)
from .grid import Grid, ScalarField


@dataclass(frozen=True)
class PumpSchedule:
    powers: tuple[float, ...]
    k_cal: float

    def __post_init__(self) -> None:
        powers = tuple(float(p) for p in self.powers)
        if not powers:
            raise ValueError("pump schedule is empty")
        if min(powers) < 0:
            raise ValueError("pump powers must be non-negative")
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise ValueError("pump powers must be strictly increasing")
        if self.k_cal <= 0:
            raise ValueError("k_cal must be positive")
        object.__setattr__(self, "powers", powers)

    @classmethod
    def uniform(cls, step: float, count: int, k_cal: float, start: float | None = None) -> "PumpSchedule":
        """``count`` powers ``start, start + step, ...`` (``start`` defaults to ``step``)."""
        first = step if start is None else start
        return cls(tuple(first + step * i for i in range(count)), k_cal)


def pump_to_tau(s: PumpSchedule) -> list[float]:
    """Effective time tau_j = k_cal * sqrt(P_j): pump amplitude stands in for elapsed time."""
    if min(s.powers) < 0:
        raise ValueError("pump powers must be non-negative")
    return [s.k_cal * math.sqrt(p) for p in s.powers]


def drift_and_diffusion(sp: SystemParams, ep: EnvParams) -> tuple[np.ndarray, float]:
    """Drift matrix A of the total current and isotropic diffusion D (dSigma = A S + S A^T + D I)."""
    A = sp.drift_matrix() - 0.5 * ep.gamma * np.eye(2)
    return A, 2.0 * ep.diffusion


def evolve_covariance(s0: GaussianState, sp: SystemParams, ep: EnvParams, tau: float) -> GaussianState:
    """Propagate mean and covariance over effective time ``tau``.

    The drift matrix is symmetric for every pump phase, so it is diagonalised
    once and both the homogeneous part and the diffusion integral are written
    in closed form in its eigenbasis.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    A, D = drift_and_diffusion(sp, ep)
    lam, Q = np.linalg.eigh(A)
    E = Q @ np.diag(np.exp(lam * tau)) @ Q.T
    growth = np.array([math.expm1(2 * l * tau) / (2 * l) if abs(l * tau) > 1e-14 else tau for l in lam])
    cov = E @ s0.cov @ E.T + D * (Q @ np.diag(growth) @ Q.T)
    return GaussianState(E @ s0.mean, 0.5 * (cov + cov.T))


def _central(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    pad = [(0, 0), (0, 0)]
    pad[axis] = (1, 1)
    b = np.pad(a, pad)
    n = a.shape[axis]
    hi = np.take(b, range(2, n + 2), axis=axis)
    lo = np.take(b, range(0, n), axis=axis)
    return (hi - lo) / (2 * h)


def max_stable_step(grid: Grid, sp: SystemParams, ep: EnvParams) -> float:
    """Largest d_tau admitted by the explicit oracle's stability bounds."""
    h = min(grid.hx, grid.hp)
    r_max = math.hypot(max(abs(grid.x_min), abs(grid.x_max)), max(abs(grid.p_min), abs(grid.p_max)))
    speed = (sp.xi + 0.5 * ep.gamma) * r_max
    bounds = [math.inf]
    if ep.diffusion > 0:
        bounds.append(0.2 * h * h / (2 * ep.diffusion))
    if speed > 0:
        bounds.append(0.2 * h / speed)
    return min(bounds)


def pde_evolve_oracle(w0: ScalarField, sp: SystemParams, ep: EnvParams, d_tau: float, steps: int) -> ScalarField:
    """RK4 integration of dW/dtau = -div(J_sys + J_env) with central differences.

    Independent of :func:`evolve_covariance`; zero padding outside the grid.
    """
    g = w0.grid
    if d_tau <= 0 or steps < 0:
        raise ValueError("need d_tau > 0 and steps >= 0")
    limit = max_stable_step(g, sp, ep)
    if d_tau > limit:
        raise ValueError(f"d_tau = {d_tau:g} exceeds the stability bound {limit:.4g}")
    X, P = g.mesh()
    A, _ = drift_and_diffusion(sp, ep)
    vx = A[0, 0] * X + A[0, 1] * P
    vp = A[1, 0] * X + A[1, 1] * P
    c = ep.diffusion
    hx, hp = g.hx, g.hp

    def rate(W):
        fx = vx * W - c * _central(W, 0, hx)
        fp = vp * W - c * _central(W, 1, hp)
        return -(_central(fx, 0, hx) + _central(fp, 1, hp))

    W = w0.as_2d().copy()
    for _ in range(steps):
        k1 = rate(W)
        k2 = rate(W + 0.5 * d_tau * k1)
        k3 = rate(W + 0.5 * d_tau * k2)
        k4 = rate(W + d_tau * k3)
        W = W + (d_tau / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return ScalarField(g, W)


@dataclass(frozen=True)
class Scenario:
    """Pump sweep, bath and lattice for one synthetic experiment.

    ``weights`` fixes the three mixture weights; ``None`` derives them at every
    snapshot by projecting the open-system state onto the three-term dictionary.
    """

    schedule: PumpSchedule
    env: EnvParams
    grid: Grid
    theta: float = math.pi / 2
    weights: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != 3 or min(w) < 0 or abs(sum(w) - 1) > 1e-9:
                raise ValueError(f"fixed weights must be three non-negative numbers summing to 1, got {w}")
            object.__setattr__(self, "weights", w)

    @property
    def system(self) -> SystemParams:
        # unit squeezing rate: r grows like tau, the pump only enters through tau
        return SystemParams(xi=1.0, theta=self.theta)


@dataclass(frozen=True, eq=False)
class Snapshot:
    tau: float
    field: ScalarField
    state: MixtureState
    open_state: GaussianState | None = field(default=None)


def mixture_at(sc: Scenario, tau: float) -> tuple[MixtureState, GaussianState | None]:
    """Mixture state at effective time ``tau`` under the scenario's weight policy."""
    sp = sc.system
    n_bar = sc.env.n_bar
    if sc.weights is not None:
        closed = EnvParams(0.0, 0.0)
        comps = (
            evolve_covariance(vacuum(), sp, closed, tau),
            evolve_covariance(thermal_state(n_bar), sp, closed, tau),
            thermal_state(n_bar),
        )
        return MixtureState(sc.weights, comps), None
    exact = evolve_covariance(vacuum(), sp, sc.env, tau)
    r_eff = exact.squeezing_parameter()
    weights = fit_mixture_weights(gaussian_wigner_field(exact, sc.grid), r_eff, n_bar, sc.theta)
    return MixtureState.from_parameters(weights, r_eff, n_bar, sc.theta), exact


def snapshot_sequence(sc: Scenario) -> list[Snapshot]:
    out = []
    for tau in pump_to_tau(sc.schedule):
        state, exact = mixture_at(sc, tau)
        out.append(Snapshot(tau, mixture_wigner(state, sc.grid), state, exact))
    return out


def taus_and_fields(snapshots: Sequence[Snapshot]) -> list[tuple[float, ScalarField]]:
    return [(s.tau, s.field) for s in snapshots]
