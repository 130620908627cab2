"""Current reconstruction from consecutive Wigner snapshots.

For each pair ``(W_t, W_{t+1})`` the correction ``dJ`` to an initial guess
``J_init`` is the minimum-1-norm solution of the forward-difference
continuity equation

    Dx dJx + Dp dJp = (W_t - W_{t+1}) / d_tau - Dx Jx_init - Dp Jp_init.

Splitting ``dJ = u - v`` with ``u, v >= 0`` turns this into a standard-form LP
with unit costs.  The x-edge columns alone form a triangular basis, which
gives a primal-feasible starting vertex without a phase one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .currents import SystemParams, j_sys
from .gaussian import gaussian_wigner_field, second_moments, squeezed_thermal_state
from .grid import Axis, ScalarField, VectorField, forward_diff_matrix
from .simplex import SimplexError, SimplexResult, revised_simplex, tableau_simplex

DENSE_COLUMN_LIMIT = 5000


class Component(enum.IntEnum):
    JX_PLUS = 0
    JX_MINUS = 1
    JP_PLUS = 2
    JP_MINUS = 3


class InitMode(enum.Enum):
    ZERO = "zero"
    FITTED_JSYS = "fitted"


class ReconstructionError(RuntimeError):
    def __init__(self, pair_index: int, cause: Exception):
        super().__init__(f"snapshot pair {pair_index}: {cause}")
        self.pair_index = pair_index
        self.cause = cause


@dataclass(frozen=True, eq=False)
class LpProblem:
    objective: np.ndarray
    constraint_matrix: sp.csc_matrix
    rhs: np.ndarray
    column_map: dict[Component, np.ndarray]
    j_initial: VectorField

    @property
    def grid(self):
        return self.j_initial.grid

    @property
    def shape(self) -> tuple[int, int]:
        return self.constraint_matrix.shape

    def column(self, component: Component, lattice_index: int) -> int:
        return int(self.column_map[component][lattice_index])


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    j_exp: VectorField
    delta_j: VectorField
    j_initial: VectorField
    objective_value: float
    residual_inf: float
    iterations: int
    min_reduced_cost: float


def split_matrix(dx: sp.spmatrix, dp: sp.spmatrix) -> sp.csc_matrix:
    """Columns ``[Dx, -Dx, Dp, -Dp]`` acting on ``(u_x, v_x, u_p, v_p)``."""
    return sp.hstack([dx, -dx, dp, -dp], format="csc")


def x_edge_basis(M: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Feasible starting basis built from the x-edge columns.

    ``Dx`` is upper triangular with a nonzero diagonal, so ``Dx y = rhs`` has a
    unique solution; each row takes the ``u`` or ``v`` column matching the sign of ``y``.
    """
    n = M.shape[0]
    dx = sp.csr_matrix(M[:, :n])
    y = spla.spsolve_triangular(dx, rhs, lower=False) if n else np.zeros(0)
    idx = np.arange(n)
    return np.where(y >= 0, idx, n + idx)


def assemble_lp(w_t: ScalarField, w_next: ScalarField, d_tau: float, j_init: VectorField) -> LpProblem:
    if d_tau <= 0:
        raise ValueError("d_tau must be positive")
    g = w_t.grid
    if not (w_next.grid == g == j_init.grid):
        raise ValueError("snapshots and initial current live on different grids")
    dx = forward_diff_matrix(g, Axis.X)
    dp = forward_diff_matrix(g, Axis.P)
    M = split_matrix(dx, dp)
    rhs = (w_t.values - w_next.values) / d_tau - dx @ j_init.jx - dp @ j_init.jp
    n = g.size
    column_map = {comp: np.arange(comp * n, (comp + 1) * n) for comp in Component}
    return LpProblem(np.ones(4 * n), M, rhs, column_map, j_init)


def initial_basis(p: LpProblem) -> np.ndarray:
    return x_edge_basis(p.constraint_matrix, p.rhs)


def solve_l1_lp(p: LpProblem, *, method: str = "revised", max_iter: int | None = None) -> ReconstructionResult:
    """Minimise ||dJ||_1 under the discrete continuity constraint.

    ``method`` is ``"revised"`` (sparse) or ``"dense"`` (tableau, at most
    ``DENSE_COLUMN_LIMIT`` columns).
    """
    n_cols = p.shape[1]
    basis = initial_basis(p)
    if method == "revised":
        res: SimplexResult = revised_simplex(p.constraint_matrix, p.rhs, p.objective, basis, max_iter=max_iter)
    elif method == "dense":
        if n_cols > DENSE_COLUMN_LIMIT:
            raise ValueError(f"dense simplex is limited to {DENSE_COLUMN_LIMIT} columns, problem has {n_cols}")
        res = tableau_simplex(p.constraint_matrix, p.rhs, p.objective, basis, max_iter=max_iter)
    else:
        raise ValueError(f"unknown simplex method {method!r}")
    z = res.x
    cm = p.column_map
    g = p.grid
    delta = VectorField(
        g,
        z[cm[Component.JX_PLUS]] - z[cm[Component.JX_MINUS]],
        z[cm[Component.JP_PLUS]] - z[cm[Component.JP_MINUS]],
    )
    return ReconstructionResult(
        j_exp=p.j_initial + delta,
        delta_j=delta,
        j_initial=p.j_initial,
        objective_value=res.objective,
        residual_inf=res.residual_inf,
        iterations=res.iterations,
        min_reduced_cost=res.min_reduced_cost,
    )


def fitted_squeezing(w: ScalarField) -> float:
    """Squeezing parameter of the pure state with the same covariance eigenvalue ratio as ``w``."""
    _, cov = second_moments(w)
    lo, hi = np.linalg.eigvalsh(cov)
    return 0.25 * math.log(hi / lo)


def fitted_system_current(
    w_t: ScalarField, w_next: ScalarField, d_tau: float, theta: float = math.pi / 2
) -> VectorField:
    """J_sys of the pure squeezed state fitted to ``w_t``.

    The squeezing rate is the finite-difference slope of the fitted squeezing
    parameter across the pair.
    """
    r_t = fitted_squeezing(w_t)
    rate = (fitted_squeezing(w_next) - r_t) / d_tau
    if rate < 0:
        # J_sys(-xi, theta) == J_sys(xi, theta + pi)
        rate, theta = -rate, theta + math.pi
    pure = gaussian_wigner_field(squeezed_thermal_state(r_t, theta, 0.0), w_t.grid)
    return j_sys(pure, SystemParams(xi=rate, theta=theta))


def initial_current(
    mode: InitMode, w_t: ScalarField, w_next: ScalarField, d_tau: float, theta: float = math.pi / 2
) -> VectorField:
    if mode is InitMode.ZERO:
        return VectorField.zeros(w_t.grid)
    return fitted_system_current(w_t, w_next, d_tau, theta)


def reconstruct_pair(
    w_t: ScalarField,
    w_next: ScalarField,
    d_tau: float,
    mode: InitMode,
    *,
    theta: float = math.pi / 2,
    method: str = "revised",
) -> ReconstructionResult:
    j0 = initial_current(mode, w_t, w_next, d_tau, theta)
    return solve_l1_lp(assemble_lp(w_t, w_next, d_tau, j0), method=method)


def reconstruct_sequence(
    snapshots: Sequence[tuple[float, ScalarField]],
    init_mode: InitMode,
    *,
    theta: float = math.pi / 2,
    method: str = "revised",
) -> list[ReconstructionResult]:
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    taus = [t for t, _ in snapshots]
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("snapshot times must be strictly increasing")
    results = []
    for k, ((t0, w0), (t1, w1)) in enumerate(zip(snapshots, snapshots[1:])):
        try:
            results.append(reconstruct_pair(w0, w1, t1 - t0, init_mode, theta=theta, method=method))
        except (SimplexError, ValueError, np.linalg.LinAlgError) as exc:
            raise ReconstructionError(k, exc) from exc
    return results
