"""
Exact discrete optimal transport.

``solve_ot`` runs a transportation network simplex (Vogel start, block
pricing, Bland's rule after a run of degenerate pivots). ``solve_assignment``
is the fast path for two uniform measures with the same number of atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from . import _netsimplex
from .errors import IterationLimitError, SolverError
from .measures import DiscreteMeasure

__all__ = [
    "TransportPlan",
    "cost_matrix",
    "emd",
    "solve_ot",
    "solve_assignment",
    "wasserstein",
    "transport_cost",
]

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-7


@dataclass
class TransportPlan:
    """Optimal coupling with its dual certificate.

    ``matrix[j, k]`` is the mass moved from source atom ``j`` to target atom
    ``k``; ``u``, ``v`` are dual potentials with ``u[j] + v[k] <= C[j, k]``.
    """

    matrix: np.ndarray
    a: np.ndarray
    b: np.ndarray
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    n_iter: int = 0

    def marginal_error(self) -> float:
        return max(np.abs(self.matrix.sum(axis=1) - self.a).max(),
                   np.abs(self.matrix.sum(axis=0) - self.b).max())

    def n_positive(self, tol: float = 1e-9) -> int:
        return int((self.matrix > tol).sum())


def cost_matrix(X, Y, p: float = 2.0) -> np.ndarray:
    """Euclidean distances raised to ``p``, shape (len(X), len(Y))."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if p == 2:
        return cdist(X, Y, "sqeuclidean")
    d = cdist(X, Y)
    return d if p == 1 else d ** p


def emd(a, b, C, max_iter: int | None = None) -> tuple[TransportPlan, float]:
    """Solve the transportation LP ``min <C, P>`` s.t. ``P 1 = a``, ``P^T 1 = b``.

    Parameters
    ----------
    a, b : array-like
        Nonnegative marginals with equal total mass.
    C : ndarray, shape (len(a), len(b))
    max_iter : int, optional
        Pivot cap; exceeding it raises :class:`IterationLimitError`.

    Returns
    -------
    plan : TransportPlan
        An optimal basic solution: at most ``m+n-1`` positive entries.
    value : float
        ``<C, plan.matrix>``.
    """
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    m, n = C.shape
    if a.shape != (m,) or b.shape != (n,):
        raise ValueError("marginals do not match the cost matrix shape")
    sa, sb = a.sum(), b.sum()
    # probability inputs always balance; anything else is a caller bug
    assert abs(sa - sb) <= 1e-9 * max(1.0, sa), "unbalanced marginals"
    b = b * (sa / sb)
    if max_iter is None:
        max_iter = 100 * m * n + 10_000
    scale = max(1.0, float(np.abs(C).max()) if C.size else 1.0)
    erow, ecol, eflow, u, v, n_iter, status = _netsimplex.network_simplex(
        a, b, C, int(max_iter), 10 * (m + n), 1e-12 * scale)
    if status == _netsimplex.ITERATION_LIMIT:
        raise IterationLimitError(
            f"transportation simplex hit the iteration cap ({max_iter})")
    if status != _netsimplex.OPTIMAL:
        raise SolverError("transportation simplex lost its spanning tree")
    P = np.zeros((m, n))
    np.add.at(P, (erow, ecol), np.maximum(eflow, 0.0))
    reduced = C - u[:, None] - v[None, :]
    if reduced.min() < -OPTIMALITY_TOL * scale:
        raise SolverError(
            f"dual infeasibility {reduced.min():.3e} after simplex termination")
    plan = TransportPlan(P, a, b, u, v, int(n_iter))
    if plan.marginal_error() > FEASIBILITY_TOL:
        raise SolverError("transport plan violates its marginals")
    return plan, float((P * C).sum())


def solve_ot(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0,
             max_iter: int | None = None) -> tuple[TransportPlan, float]:
    """Optimal coupling between two measures for the cost ``|x-y|^p``.

    Returns the plan and ``W_p^p(mu, nu)``.
    """
    if mu.dim != nu.dim:
        raise ValueError("measures live in different dimensions")
    C = cost_matrix(mu.points, nu.points, p)
    return emd(mu.weights, nu.weights, C, max_iter=max_iter)


def solve_assignment(X, Y, p: float = 2.0) -> tuple[np.ndarray, float]:
    """Optimal matching between two equal-size point sets.

    Returns ``perm`` such that ``X[k]`` is matched with ``Y[perm[k]]``, and
    ``mean_k |X[k] - Y[perm[k]]|^p``, i.e. ``W_p^p`` between the uniform
    measures on ``X`` and ``Y``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] != Y.shape[0]:
        raise ValueError("assignment needs equal row counts")
    C = cost_matrix(X, Y, p)
    rows, perm = linear_sum_assignment(C)
    return perm, float(C[rows, perm].mean())


def transport_cost(mu: DiscreteMeasure, nu: DiscreteMeasure,
                   p: float = 2.0) -> float:
    """``W_p^p(mu, nu)``, using the assignment fast path when it applies."""
    if (mu.n_atoms == nu.n_atoms and mu.is_uniform() and nu.is_uniform()):
        return solve_assignment(mu.points, nu.points, p)[1]
    return solve_ot(mu, nu, p)[1]


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> float:
    """The p-Wasserstein distance ``W_p(mu, nu)``."""
    return max(transport_cost(mu, nu, p), 0.0) ** (1.0 / p)
