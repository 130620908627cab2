"""Primal simplex for standard-form LPs ``min c^T z  s.t.  A z = b, z >= 0``.

Both solvers start from a caller-supplied primal-feasible basis and use
Bland's rule (lowest-index entering column, lowest-index leaving variable on
ratio ties), so the pivot sequence and the returned vertex are reproducible.

``revised_simplex`` keeps a sparse LU factorisation of the basis plus a file of
product-form eta updates and refactorises periodically.  ``tableau_simplex`` is
the dense textbook version, meant for small problems and cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

OPT_TOL = 1e-10
PIVOT_TOL = 1e-10
RATIO_TIE = 1e-12


class SimplexError(RuntimeError):
    pass


class IterationLimitError(SimplexError):
    pass


class UnboundedError(SimplexError):
    pass


class InfeasibleStartError(SimplexError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    basis: np.ndarray
    objective: float
    iterations: int
    reduced_costs: np.ndarray
    residual_inf: float

    @property
    def min_reduced_cost(self) -> float:
        return float(self.reduced_costs.min()) if self.reduced_costs.size else 0.0


def _leaving_row(x_b: np.ndarray, alpha: np.ndarray, basis: np.ndarray) -> int:
    rows = np.flatnonzero(alpha > PIVOT_TOL)
    if rows.size == 0:
        raise UnboundedError("objective is unbounded below")
    ratios = x_b[rows] / alpha[rows]
    best = ratios.min()
    tied = rows[ratios <= best + RATIO_TIE * max(1.0, abs(best))]
    return int(tied[np.argmin(basis[tied])])


def _entering_column(d: np.ndarray, is_basic: np.ndarray) -> int | None:
    cand = np.flatnonzero((d < -OPT_TOL) & ~is_basic)
    return int(cand[0]) if cand.size else None


def _check_start(x_b: np.ndarray) -> np.ndarray:
    if x_b.min() < -1e-9 * max(1.0, np.abs(x_b).max()):
        raise InfeasibleStartError(f"initial basis is not primal feasible (min x_B = {x_b.min():.3e})")
    return np.clip(x_b, 0.0, None)


class _BasisFactor:
    """LU of the basis matrix followed by product-form eta updates."""

    def __init__(self, A: sp.csc_matrix, basis: np.ndarray):
        self.lu = spla.splu(A[:, basis].tocsc())
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        v = self.lu.solve(a)
        for r, eta in self.etas:
            vr = v[r]
            if vr != 0.0:
                v += vr * eta
                v[r] -= vr
        return v

    def btran(self, c: np.ndarray) -> np.ndarray:
        u = c.copy()
        for r, eta in reversed(self.etas):
            u[r] = u @ eta
        return self.lu.solve(u, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        eta = -alpha / alpha[r]
        eta[r] = 1.0 / alpha[r]
        self.etas.append((r, eta))


def _finish(A, b, c, basis, x_b, iterations, y) -> SimplexResult:
    n = A.shape[1]
    x = np.zeros(n)
    x[basis] = x_b
    d = c - A.T @ y
    d[basis] = 0.0
    residual = float(np.abs(A @ x - b).max()) if b.size else 0.0
    return SimplexResult(x, basis.copy(), float(c @ x), iterations, d, residual)


def revised_simplex(
    A: sp.spmatrix,
    b: np.ndarray,
    c: np.ndarray,
    basis: np.ndarray,
    *,
    max_iter: int | None = None,
    refactor_every: int = 64,
) -> SimplexResult:
    A = sp.csc_matrix(A)
    m, n = A.shape
    At = A.T.tocsr()
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    basis = np.array(basis, dtype=np.int64)
    if basis.shape != (m,):
        raise ValueError("basis must list one column per row")
    max_iter = 50 * n if max_iter is None else max_iter
    is_basic = np.zeros(n, dtype=bool)
    is_basic[basis] = True

    factor = _BasisFactor(A, basis)
    x_b = _check_start(factor.lu.solve(b))
    it = 0
    while True:
        if factor.etas and len(factor.etas) >= refactor_every:
            factor = _BasisFactor(A, basis)
            x_b = np.clip(factor.lu.solve(b), 0.0, None)
        y = factor.btran(c[basis])
        d = c - At @ y
        q = _entering_column(d, is_basic)
        if q is None:
            break
        if it >= max_iter:
            raise IterationLimitError(f"simplex did not converge within {max_iter} iterations")
        a_q = np.zeros(m)
        lo, hi = A.indptr[q], A.indptr[q + 1]
        a_q[A.indices[lo:hi]] = A.data[lo:hi]
        alpha = factor.ftran(a_q)
        r = _leaving_row(x_b, alpha, basis)
        step = x_b[r] / alpha[r]
        x_b -= step * alpha
        x_b[r] = step
        np.clip(x_b, 0.0, None, out=x_b)
        is_basic[basis[r]] = False
        is_basic[q] = True
        basis[r] = q
        factor.update(r, alpha)
        it += 1

    factor = _BasisFactor(A, basis)
    x_b = factor.lu.solve(b)
    y = factor.lu.solve(c[basis], trans="T")
    return _finish(A, b, c, basis, x_b, it, y)


def tableau_simplex(
    A: np.ndarray, b: np.ndarray, c: np.ndarray, basis: np.ndarray, *, max_iter: int | None = None
) -> SimplexResult:
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    m, n = A.shape
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    basis = np.array(basis, dtype=np.int64)
    max_iter = 50 * n if max_iter is None else max_iter
    B = A[:, basis]
    T = la.solve(B, A)
    x_b = _check_start(la.solve(B, b))
    d = c - c[basis] @ T
    is_basic = np.zeros(n, dtype=bool)
    is_basic[basis] = True
    it = 0
    while True:
        q = _entering_column(d, is_basic)
        if q is None:
            break
        if it >= max_iter:
            raise IterationLimitError(f"simplex did not converge within {max_iter} iterations")
        alpha = T[:, q].copy()
        r = _leaving_row(x_b, alpha, basis)
        piv = alpha[r]
        T[r] /= piv
        x_b[r] /= piv
        for i in np.flatnonzero(alpha):
            if i != r:
                T[i] -= alpha[i] * T[r]
                x_b[i] -= alpha[i] * x_b[r]
        d -= d[q] * T[r]
        np.clip(x_b, 0.0, None, out=x_b)
        is_basic[basis[r]] = False
        is_basic[q] = True
        basis[r] = q
        it += 1
    B = A[:, basis]
    x_b = la.solve(B, b)
    y = la.solve(B.T, c[basis])
    return _finish(A, b, c, basis, x_b, it, y)
