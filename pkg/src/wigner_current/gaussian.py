"""Gaussian Wigner functions: squeezed/thermal states, three-term mixtures,
purity, degraded squeezing levels and mixture-weight fitting.

Units: hbar = 1, vacuum variance 1/2 per quadrature.  The anti-squeezed axis
of ``squeezed_thermal_state(r, theta, n_bar)`` lies at angle ``theta / 2``,
which is the expanding axis of the squeezer current at pump phase ``theta``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .grid import Grid, ScalarField, quadrature_integral

HEISENBERG_TOL = 1e-12


class IllConditionedFitWarning(UserWarning):
    """Two dictionary components are numerically indistinguishable."""


class NormalizationWarning(UserWarning):
    pass


def rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise ValueError("state moments must be finite")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if cov[0, 0] <= 0 or np.linalg.det(cov) <= 0:
            raise ValueError("covariance matrix is not positive definite")
        if np.linalg.det(cov) < 0.25 - HEISENBERG_TOL:
            raise ValueError(f"det cov = {np.linalg.det(cov):.6g} violates the uncertainty bound 1/4")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.cov))

    @property
    def purity(self) -> float:
        """Exact tr(rho^2) = 1 / (2 sqrt(det cov))."""
        return 0.5 / math.sqrt(self.det)

    def squeezing_parameter(self) -> float:
        """r such that the covariance eigenvalue ratio is exp(4 r)."""
        lo, hi = np.linalg.eigvalsh(self.cov)
        return 0.25 * math.log(hi / lo)


def vacuum() -> GaussianState:
    return GaussianState(np.zeros(2), 0.5 * np.eye(2))


def thermal_state(n_bar: float) -> GaussianState:
    return squeezed_thermal_state(0.0, 0.0, n_bar)


def squeezed_thermal_state(r: float, theta: float, n_bar: float) -> GaussianState:
    """Squeezed thermal state with zero mean.

    Covariance ``(n_bar + 1/2) R(theta/2) diag(e^{2r}, e^{-2r}) R(theta/2)^T``;
    ``n_bar = 0`` gives the pure squeezed vacuum reached by running the
    squeezer current for effective time ``r`` from the vacuum.
    """
    if n_bar < 0:
        raise ValueError("n_bar must be non-negative")
    R = rotation(0.5 * theta)
    d = (n_bar + 0.5) * np.diag([math.exp(2 * r), math.exp(-2 * r)])
    return GaussianState(np.zeros(2), R @ d @ R.T)


def gaussian_wigner_values(state: GaussianState, X: np.ndarray, P: np.ndarray) -> np.ndarray:
    det = state.det
    if det < 1e-12:
        raise ValueError("covariance is numerically singular")
    inv = np.linalg.inv(state.cov)
    dx = X - state.mean[0]
    dp = P - state.mean[1]
    q = inv[0, 0] * dx * dx + 2.0 * inv[0, 1] * dx * dp + inv[1, 1] * dp * dp
    return np.exp(-0.5 * q) / (2.0 * math.pi * math.sqrt(det))


def gaussian_wigner_field(state: GaussianState, grid: Grid) -> ScalarField:
    X, P = grid.mesh()
    return ScalarField(grid, gaussian_wigner_values(state, X, P), source=state)


@dataclass(frozen=True, eq=False)
class MixtureState:
    """``sigma1 * rho_sq + c1 * rho_sq_th + d1 * rho_th``."""

    weights: tuple[float, float, float]
    components: tuple[GaussianState, GaussianState, GaussianState]

    def __post_init__(self) -> None:
        w = tuple(float(v) for v in self.weights)
        if len(w) != 3 or len(self.components) != 3:
            raise ValueError("a mixture has exactly three components")
        if min(w) < 0:
            raise ValueError(f"mixture weights must be non-negative, got {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"mixture weights must sum to 1, got {sum(w)!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def from_parameters(
        cls, weights: Sequence[float], r: float, n_bar: float, theta: float = math.pi / 2
    ) -> "MixtureState":
        return cls(tuple(weights), mixture_dictionary(r, n_bar, theta))

    @property
    def mean(self) -> np.ndarray:
        return sum(w * c.mean for w, c in zip(self.weights, self.components))

    @property
    def cov(self) -> np.ndarray:
        """Second central moments of the mixture."""
        mu = self.mean
        second = sum(w * (c.cov + np.outer(c.mean, c.mean)) for w, c in zip(self.weights, self.components))
        return second - np.outer(mu, mu)

    @property
    def purity(self) -> float:
        total = 0.0
        for (wa, a), (wb, b) in itertools.product(zip(self.weights, self.components), repeat=2):
            total += wa * wb * gaussian_overlap(a, b)
        return total


def mixture_dictionary(r: float, n_bar: float, theta: float = math.pi / 2):
    """(squeezed vacuum, squeezed thermal, thermal) at squeezing ``r``."""
    return (
        squeezed_thermal_state(r, theta, 0.0),
        squeezed_thermal_state(r, theta, n_bar),
        thermal_state(n_bar),
    )


def gaussian_overlap(a: GaussianState, b: GaussianState) -> float:
    """tr(rho_a rho_b) = 2 pi * integral of W_a W_b."""
    s = a.cov + b.cov
    d = a.mean - b.mean
    return float(math.exp(-0.5 * d @ np.linalg.solve(s, d)) / math.sqrt(np.linalg.det(s)))


def mixture_wigner(m: MixtureState, grid: Grid) -> ScalarField:
    X, P = grid.mesh()
    total = np.zeros(grid.shape)
    for w, c in zip(m.weights, m.components):
        if w:
            total += w * gaussian_wigner_values(c, X, P)
    return ScalarField(grid, total, source=m)


def wigner_gradient(source, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Analytic (dW/dx, dW/dp) on the lattice for a Gaussian or mixture source."""
    X, P = grid.mesh()
    if isinstance(source, GaussianState):
        parts = [(1.0, source)]
    elif isinstance(source, MixtureState):
        parts = list(zip(source.weights, source.components))
    else:
        raise TypeError(f"no analytic gradient for {type(source).__name__}")
    gx = np.zeros(grid.shape)
    gp = np.zeros(grid.shape)
    for w, s in parts:
        if not w:
            continue
        W = gaussian_wigner_values(s, X, P)
        inv = np.linalg.inv(s.cov)
        dx = X - s.mean[0]
        dp = P - s.mean[1]
        gx -= w * (inv[0, 0] * dx + inv[0, 1] * dp) * W
        gp -= w * (inv[1, 0] * dx + inv[1, 1] * dp) * W
    return gx.reshape(-1), gp.reshape(-1)


def purity_of_field(w: ScalarField) -> float:
    """tr(rho^2) = 2 pi * integral of W^2 over the grid."""
    norm = quadrature_integral(w)
    if abs(norm - 1.0) > 1e-3:
        warnings.warn(f"Wigner field normalization is {norm:.6f}, purity may be biased", NormalizationWarning,
                      stacklevel=2)
    return 2.0 * math.pi * quadrature_integral(ScalarField(w.grid, w.values**2))


def second_moments(w: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance of a sampled distribution (trapezoidal rule)."""
    X, P = w.grid.mesh()
    norm = quadrature_integral(w)

    def avg(f):
        return quadrature_integral(ScalarField(w.grid, f * w.as_2d())) / norm

    mx, mp = avg(X), avg(P)
    dx, dp = X - mx, P - mp
    cov = np.array([[avg(dx * dx), avg(dx * dp)], [avg(dx * dp), avg(dp * dp)]])
    return np.array([mx, mp]), cov


@dataclass(frozen=True)
class NoiseModel:
    eta: float
    theta_rms: float

    def __post_init__(self) -> None:
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.theta_rms < 0:
            raise ValueError("theta_rms must be non-negative")


def r_from_db(db: float) -> float:
    return db * math.log(10) / 20


def degraded_db_levels(r: float, noise: NoiseModel) -> tuple[float, float]:
    """(squeezing dB, anti-squeezing dB) after loss and Gaussian phase jitter.

    Loss mixes in vacuum, ``V' = eta V + 1 - eta``; the jitter mixes the two
    quadratures with ``<cos^2> = (1 + exp(-2 theta_rms^2)) / 2``.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    v_sq = noise.eta * math.exp(-2 * r) + 1 - noise.eta
    v_anti = noise.eta * math.exp(2 * r) + 1 - noise.eta
    c = 0.5 * (1 + math.exp(-2 * noise.theta_rms**2))
    sq = c * v_sq + (1 - c) * v_anti
    anti = c * v_anti + (1 - c) * v_sq
    return -10 * math.log10(sq), 10 * math.log10(anti)


def r_for_antisqueezing(anti_db: float, noise: NoiseModel) -> float:
    """Invert :func:`degraded_db_levels` for a target anti-squeezing level."""
    if anti_db <= 0:
        return 0.0
    hi = r_from_db(anti_db) + 5.0
    return brentq(lambda r: degraded_db_levels(r, noise)[1] - anti_db, 0.0, hi, xtol=1e-14)


def _constrained_lstsq(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """min ||A w - y|| subject to sum(w) = 1."""
    k = A.shape[1]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = A.T @ A
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.append(A.T @ y, 1.0)
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:k]


def fit_mixture_weights(
    w: ScalarField, r: float, n_bar: float, theta: float = math.pi / 2, *, degenerate_tol: float = 1e-6
) -> tuple[float, float, float]:
    """Non-negative, sum-to-one least-squares weights of the three-term dictionary.

    All supports of the three-column problem are enumerated, which gives the
    exact constrained optimum.  Emits :class:`IllConditionedFitWarning` when two
    dictionary fields are closer than ``degenerate_tol`` (relative L2).
    """
    comps = mixture_dictionary(r, n_bar, theta)
    A = np.column_stack([gaussian_wigner_field(c, w.grid).values for c in comps])
    y = w.values
    names = ("squeezed vacuum", "squeezed thermal", "thermal")
    for a, b in itertools.combinations(range(3), 2):
        gap = np.linalg.norm(A[:, a] - A[:, b]) / max(np.linalg.norm(A[:, a]), 1e-300)
        if gap < degenerate_tol:
            warnings.warn(
                f"mixture dictionary is degenerate: {names[a]} and {names[b]} differ by {gap:.2e}",
                IllConditionedFitWarning,
                stacklevel=2,
            )
    best = None
    slack = 1e-12 * float(np.linalg.norm(y))
    for size in (1, 2, 3):
        for support in itertools.combinations(range(3), size):
            sub = _constrained_lstsq(A[:, support], y)
            if sub.min() < -1e-12:
                continue
            full = np.zeros(3)
            full[list(support)] = np.clip(sub, 0.0, None)
            full /= full.sum()
            res = float(np.linalg.norm(A @ full - y))
            if best is None or res < best[0] - slack:
                best = (res, full)
    weights = best[1]
    return float(weights[0]), float(weights[1]), float(weights[2])
