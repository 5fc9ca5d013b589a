"""
Generic LP solving and the exact barycenter linear program.

The barycenter LP places the candidate barycenter on a finite support (by
default the centroid set) with explicit weight variables ``a_j`` and one
transport plan ``pi^(i)`` per input measure::

    min  (1/N) sum_i sum_{j,k} pi^(i)_jk c^i_jk
    s.t. sum_k pi^(i)_jk = a_j      for all i, j
         sum_j pi^(i)_jk = b^i_k    for all i, k
         pi >= 0

Two engines are available: a dense revised simplex (``method="simplex"``)
for small instances and HiGHS dual simplex (``method="highs"``), which is
the default for barycenter problems. Both return vertex solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import (InfeasibleError, IterationLimitError, SizeCapError,
                     SolverError, UnboundedError)
from .measures import DiscreteMeasure, centroid_set, merge_duplicates
from .ot import cost_matrix

__all__ = [
    "LinearProgram",
    "LpResult",
    "BarycenterLp",
    "solve_lp",
    "transport_lp",
    "build_barycenter_lp",
    "exact_barycenter",
    "lp_size_estimate",
]

DEFAULT_NNZ_CAP = 200_000
PRUNE_TOL = 1e-9


@dataclass
class LinearProgram:
    """``min c^T x`` subject to ``A_eq x = b_eq``, ``x >= 0``."""

    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A_eq = sp.csr_matrix(self.A_eq, dtype=float)
        self.b_eq = np.asarray(self.b_eq, dtype=float)
        if self.A_eq.shape != (self.b_eq.size, self.c.size):
            raise ValueError(
                f"A_eq has shape {self.A_eq.shape}, expected "
                f"({self.b_eq.size}, {self.c.size})")
        if not np.all(np.isfinite(self.b_eq)):
            raise ValueError("non-finite right-hand side")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_constraints(self) -> int:
        return self.b_eq.size


@dataclass
class LpResult:
    x: np.ndarray
    value: float
    basis: np.ndarray | None
    n_iter: int


def solve_lp(lp: LinearProgram, method: str = "simplex",
             nnz_cap: int = DEFAULT_NNZ_CAP, max_iter: int | None = None,
             refactor_every: int = 50) -> LpResult:
    """Solve a standard-form LP to a vertex optimum.

    Parameters
    ----------
    lp : LinearProgram
    method : {"simplex", "highs"}
        ``"simplex"`` is the built-in dense revised simplex (two phases,
        explicit basis inverse re-factorized every ``refactor_every`` pivots,
        Bland's rule after a run of degenerate pivots). ``"highs"`` calls
        HiGHS dual simplex through :func:`scipy.optimize.linprog`; its
        ``basis`` is ``None``.
    nnz_cap : int
        Refuse constraint matrices with more nonzeros than this.

    Raises
    ------
    InfeasibleError, UnboundedError, IterationLimitError, SizeCapError
    """
    if lp.A_eq.nnz > nnz_cap:
        raise SizeCapError(
            f"LP has {lp.n_vars} variables, {lp.n_constraints} constraints and "
            f"{lp.A_eq.nnz} nonzeros, above the cap of {nnz_cap} nonzeros")
    if method == "highs":
        return _solve_highs(lp, max_iter)
    if method == "simplex":
        return _revised_simplex(lp, max_iter, refactor_every)
    raise ValueError(f"unknown LP method {method!r}")


def _solve_highs(lp: LinearProgram, max_iter) -> LpResult:
    options = {"presolve": True}
    if max_iter is not None:
        options["maxiter"] = int(max_iter)
    res = linprog(lp.c, A_eq=lp.A_eq, b_eq=lp.b_eq, bounds=(0, None),
                  method="highs-ds", options=options)
    if res.status == 2:
        raise InfeasibleError(res.message)
    if res.status == 3:
        raise UnboundedError(res.message)
    if res.status == 1:
        raise IterationLimitError(res.message)
    if res.status != 0:
        raise SolverError(res.message)
    x = np.maximum(res.x, 0.0)
    return LpResult(x, float(lp.c @ x), None, int(res.nit))


def _revised_simplex(lp: LinearProgram, max_iter, refactor_every,
                     opt_tol=1e-10, piv_tol=1e-9, feas_tol=1e-9) -> LpResult:
    A = lp.A_eq.toarray()
    b = lp.b_eq.copy()
    c = lp.c
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    # artificial columns n..n+m-1 start as the basis
    A_full = np.hstack([A, np.eye(m)])
    basis = np.arange(n, n + m)
    artificial = np.zeros(n + m, dtype=bool)
    artificial[n:] = True

    phase1_cost = np.r_[np.zeros(n), np.ones(m)]
    state = _SimplexState(A_full, b, basis, refactor_every)
    it1 = state.run(phase1_cost, allowed=np.ones(n + m, dtype=bool),
                    artificial=None, max_iter=max_iter, opt_tol=opt_tol,
                    piv_tol=piv_tol)
    infeas = float(phase1_cost[state.basis] @ state.xB)
    if infeas > feas_tol * max(1.0, np.abs(b).max(initial=0.0)):
        raise InfeasibleError(f"LP is infeasible (phase-1 residual {infeas:.3e})")

    phase2_cost = np.r_[c, np.zeros(m)]
    it2 = state.run(phase2_cost, allowed=~artificial, artificial=artificial,
                    max_iter=max_iter - it1, opt_tol=opt_tol, piv_tol=piv_tol)

    x = np.zeros(n + m)
    x[state.basis] = np.maximum(state.xB, 0.0)
    x = x[:n]
    resid = np.abs(A @ x - b).max(initial=0.0)
    if resid > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        raise SolverError(f"primal residual {resid:.3e} after revised simplex")
    y = phase2_cost[state.basis] @ state.Binv
    reduced = c - y @ A
    if reduced.min(initial=0.0) < -1e-7:
        raise SolverError("reduced costs not certified nonnegative")
    basis = np.sort(state.basis[state.basis < n])
    return LpResult(x, float(c @ x), basis, it1 + it2)


class _SimplexState:
    """Basis, explicit inverse and basic values shared by both phases."""

    def __init__(self, A, b, basis, refactor_every):
        self.A = A
        self.b = b
        self.basis = basis.copy()
        self.refactor_every = refactor_every
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular basis matrix") from exc
        self.xB = self.Binv @ self.b
        self.xB[np.abs(self.xB) < 1e-13] = 0.0
        self.since_refactor = 0

    def run(self, cost, allowed, artificial, max_iter, opt_tol, piv_tol):
        m = self.A.shape[0]
        bland_after = 10 * m
        degenerate_run = 0
        bland = False
        it = 0
        while True:
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            d[self.basis] = 0.0
            d[~allowed] = np.inf
            candidates = np.flatnonzero(d < -opt_tol)
            if candidates.size == 0:
                return it
            if it >= max_iter:
                raise IterationLimitError(
                    f"revised simplex hit the iteration cap ({max_iter})")
            q = candidates[0] if bland else candidates[np.argmin(d[candidates])]
            col = self.Binv @ self.A[:, q]

            ratios = np.full(m, np.inf)
            pos = col > piv_tol
            ratios[pos] = np.maximum(self.xB[pos], 0.0) / col[pos]
            if artificial is not None:
                # basic artificials are pinned at zero in phase 2
                stuck = artificial[self.basis] & (np.abs(col) > piv_tol)
                ratios[stuck] = 0.0
            theta = ratios.min()
            if not np.isfinite(theta):
                raise UnboundedError("LP is unbounded")
            ties = np.flatnonzero(ratios <= theta + 1e-12)
            if bland:
                r = ties[np.argmin(self.basis[ties])]
            else:
                r = ties[np.argmax(np.abs(col[ties]))]

            if theta <= 1e-12:
                degenerate_run += 1
                bland = bland or degenerate_run >= bland_after
            else:
                degenerate_run = 0
                bland = False

            piv = col[r]
            self.xB -= theta * col
            self.xB[r] = theta
            self.basis[r] = q
            row = self.Binv[r] / piv
            self.Binv -= np.outer(col, row)
            self.Binv[r] = row
            it += 1
            self.since_refactor += 1
            if self.since_refactor >= self.refactor_every:
                self.refactor()


def transport_lp(a, b, C) -> LinearProgram:
    """The transportation problem as a generic LP (row-major plan variables)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = len(a), len(b)
    rows = sp.kron(sp.eye(m), np.ones((1, n)))
    cols = sp.kron(np.ones((1, m)), sp.eye(n))
    return LinearProgram(np.asarray(C, dtype=float).ravel(),
                         sp.vstack([rows, cols]).tocsr(), np.r_[a, b])


# --------------------------------------------------------------------------
# barycenter LP
# --------------------------------------------------------------------------

@dataclass
class BarycenterLp:
    """Assembled barycenter LP with its variable layout.

    Variables are ordered ``a_0..a_{K-1}`` followed by ``pi^(1)``, ...,
    ``pi^(N)``, each stored row-major as a K x M_i block.
    """

    lp: LinearProgram
    support: np.ndarray
    sizes: list[int]
    offsets: np.ndarray

    @property
    def n_support(self) -> int:
        return self.support.shape[0]

    def a_index(self, j: int) -> int:
        return j

    def pi_index(self, i: int, j: int, k: int) -> int:
        return int(self.offsets[i] + j * self.sizes[i] + k)

    def weights(self, x: np.ndarray) -> np.ndarray:
        return x[:self.n_support]

    def plan(self, x: np.ndarray, i: int) -> np.ndarray:
        K = self.n_support
        start = self.offsets[i]
        return x[start:start + K * self.sizes[i]].reshape(K, self.sizes[i])


def build_barycenter_lp(measures: Sequence[DiscreteMeasure], p: float = 2.0,
                        support=None) -> BarycenterLp:
    N = len(measures)
    if support is None:
        support = centroid_set(measures, p)
    support = np.atleast_2d(np.asarray(support, dtype=float))
    K = support.shape[0]
    sizes = [m.n_atoms for m in measures]
    offsets = K + K * np.r_[0, np.cumsum(sizes)[:-1]].astype(np.int64)
    n_vars = K + K * sum(sizes)

    costs = [np.zeros(K)]
    blocks_rows, blocks_cols, row0 = [], [], 0
    for i, mu in enumerate(measures):
        M = sizes[i]
        costs.append(cost_matrix(support, mu.points, p).ravel() / N)
        jj, kk = np.meshgrid(np.arange(K), np.arange(M), indexing="ij")
        var = offsets[i] + jj.ravel() * M + kk.ravel()
        # sum_k pi_jk - a_j = 0
        blocks_rows += [row0 + jj.ravel(), row0 + np.arange(K)]
        blocks_cols += [var, np.arange(K)]
        # sum_j pi_jk = b_k
        blocks_rows.append(row0 + K + kk.ravel())
        blocks_cols.append(var)
        row0 += K + M
    vals = []
    for i in range(N):
        M = sizes[i]
        vals += [np.ones(K * M), -np.ones(K), np.ones(K * M)]
    A = sp.coo_matrix(
        (np.concatenate(vals),
         (np.concatenate(blocks_rows), np.concatenate(blocks_cols))),
        shape=(row0, n_vars)).tocsr()
    rhs = np.concatenate([np.r_[np.zeros(K), mu.weights] for mu in measures])
    lp = LinearProgram(np.concatenate(costs), A, rhs)
    return BarycenterLp(lp, support, sizes, offsets)


def exact_barycenter(measures: Sequence[DiscreteMeasure], p: float = 2.0,
                     support=None, method: str = "highs",
                     nnz_cap: int = DEFAULT_NNZ_CAP
                     ) -> tuple[DiscreteMeasure, float]:
    """Exact p-barycenter by linear programming.

    Parameters
    ----------
    measures : sequence of DiscreteMeasure
    p : float
    support : array-like, optional
        Candidate support; defaults to the centroid set, on which the optimum
        over all probability measures is attained.
    method : {"highs", "simplex"}
    nnz_cap : int
        Size cap on the assembled LP.

    Returns
    -------
    barycenter : DiscreteMeasure
        Weights below 1e-9 are pruned and the rest renormalized.
    value : float
        Optimal value of the Frechet functional ``F^p``.
    """
    measures = [merge_duplicates(m, tol=0.0) if m.n_atoms > 1 else m
                for m in measures]
    if support is None:
        sizes = [m.n_atoms for m in measures]
        k_est = prod(sizes)
        nnz = 2 * k_est * sum(sizes) + len(sizes) * k_est
        if nnz > nnz_cap:
            raise SizeCapError(
                f"barycenter LP would have {k_est * sum(sizes) + k_est} "
                f"variables and about {nnz} nonzeros, above the cap of "
                f"{nnz_cap} nonzeros")
    blp = build_barycenter_lp(measures, p, support)
    res = solve_lp(blp.lp, method=method, nnz_cap=nnz_cap)
    a = blp.weights(res.x).copy()
    a[a < PRUNE_TOL] = 0.0
    keep = a > 0
    bary = DiscreteMeasure(blp.support[keep], a[keep] / a[keep].sum())
    return bary, res.value


def lp_size_estimate(N: int, sizes: Sequence[int] | None = None,
                     grid: int | None = None, p: float = 2.0) -> tuple[int, int]:
    """Variable and constraint counts of the barycenter LP, as exact integers.

    With ``grid=s`` every measure lives on an ``s x s`` grid; for ``p=2`` the
    centroid set is then the N-times finer grid with ``(N(s-1)+1)^2`` points.
    Otherwise the centroid set is taken to have ``prod(M_i)`` points
    (supports in general position).
    """
    N = int(N)
    if grid is not None:
        s = int(grid)
        sizes = [s * s] * N
        if p == 2:
            n_support = (N * (s - 1) + 1) ** 2
        else:
            n_support = (s * s) ** N
    else:
        if sizes is None:
            raise ValueError("need either support sizes or a grid side")
        sizes = [int(m) for m in sizes]
        if len(sizes) == 1 and N > 1:
            sizes = sizes * N
        if len(sizes) != N:
            raise ValueError("need one support size per measure")
        n_support = prod(sizes)
    n_vars = n_support * sum(sizes) + n_support
    n_cons = sum(n_support + m for m in sizes)
    return n_vars, n_cons
