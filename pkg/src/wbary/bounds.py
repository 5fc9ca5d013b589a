"""
Explicit error bounds for resampled optimal transport and barycenters.

The central quantity is the covering constant ``E(X, p)`` bounding the
expected empirical transport cost,

    E[W_p^p(mu, mu^S)] <= diam(X)^p * E(X, p) / sqrt(S),

    E(X, p) = 2^(p-1) inf_{q>1, L>=0} q^p [ q^(-(L+1)p) sqrt(M)
              + (q/(q-1))^p sum_{l=1..L} q^(-lp) sqrt(N(X, q^-l diam)) ]

where ``N(X, delta)`` is the delta-covering number (the factor
``(q/(q-1))^p`` is dropped for p = 1). From it follow the bound on the
Frechet gap of resampled barycenters and the closed forms for point sets in
the unit cube.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from .measures import DiscreteMeasure, diameter

__all__ = [
    "Q_GRID",
    "L_MAX",
    "covering_radii",
    "covering_number",
    "exact_covering_number",
    "constant_E",
    "euclidean_bound",
    "empirical_ot_bound",
    "frechet_gap_bound",
    "cube_gap_coefficient",
    "eq_p2_bound",
    "binomial_lower_bound",
    "BoundReport",
    "bound_report",
]

Q_GRID = (1.5,) + tuple(float(q) for q in range(2, 11))
L_MAX = 30
EXACT_COVER_LIMIT = 12


def covering_radii(points) -> np.ndarray:
    """Cover radii of the farthest-point traversal.

    ``r[k-1]`` is the largest distance from any point to the first ``k``
    traversal centers, so ``r`` is nonincreasing and ends at 0.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    M = X.shape[0]
    radii = np.empty(M)
    dist = np.linalg.norm(X - X[0], axis=1)
    for k in range(M):
        far = int(np.argmax(dist))
        radii[k] = dist[far]
        if radii[k] == 0.0:
            radii[k:] = 0.0
            break
        dist = np.minimum(dist, np.linalg.norm(X - X[far], axis=1))
    return radii


def _greedy_count(radii: np.ndarray, delta: float) -> int:
    # first k with r[k-1] <= delta; radii is nonincreasing
    return int(np.count_nonzero(radii > delta)) + 1


def exact_covering_number(points, delta: float) -> int:
    """Smallest number of closed ``delta``-balls centred at points of the set."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    M = X.shape[0]
    within = cdist(X, X) <= delta
    for k in range(1, M + 1):
        for centers in itertools.combinations(range(M), k):
            if within[list(centers)].any(axis=0).all():
                return k
    return M


def covering_number(points, delta: float) -> int:
    """Size of a ``delta``-cover of ``points`` by balls centred in the set.

    Exact (exhaustive search) for at most 12 points, otherwise the greedy
    farthest-point cover, which can only overestimate the true number.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[0] <= EXACT_COVER_LIMIT:
        return exact_covering_number(X, delta)
    return _greedy_count(covering_radii(X), delta)


class _CoverTable:
    """Covering numbers of one point set, memoised per delta."""

    def __init__(self, points):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.small = self.points.shape[0] <= EXACT_COVER_LIMIT
        self.radii = None if self.small else covering_radii(self.points)
        self.cache: dict[float, int] = {}

    def __call__(self, delta: float) -> int:
        if delta not in self.cache:
            if self.small:
                self.cache[delta] = exact_covering_number(self.points, delta)
            else:
                self.cache[delta] = _greedy_count(self.radii, delta)
        return self.cache[delta]


def constant_E(points, p: float = 1.0, q_grid: Sequence[float] = Q_GRID,
               l_max: int = L_MAX) -> tuple[float, float, int]:
    """Covering constant ``E(X, p)`` minimised over a finite grid.

    Parameters
    ----------
    points : array-like, shape (M, D)
        The finite space ``X`` (Euclidean metric). Duplicates are counted in
        ``M``; pass a deduplicated support for the sharpest value.
    p : float
    q_grid : sequence of float
        Candidate bases ``q > 1``.
    l_max : int
        Largest truncation level searched (levels ``0..l_max``).

    Returns
    -------
    E : float
        Value at the best grid point; an upper bound on the infimum.
    q, L : float, int
        The minimising base and truncation level.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    M = X.shape[0]
    diam = diameter(X)
    cover = _CoverTable(X)
    best = (math.inf, None, None)
    for q in q_grid:
        if q <= 1:
            raise ValueError("q must exceed 1")
        factor = 1.0 if p == 1 else (q / (q - 1.0)) ** p
        partial = 0.0
        for L in range(l_max + 1):
            if L >= 1:
                n_cover = cover(q ** -L * diam) if diam > 0 else 1
                partial += q ** (-L * p) * math.sqrt(n_cover)
            value = q ** p * (q ** (-(L + 1) * p) * math.sqrt(M) + factor * partial)
            if value < best[0]:
                best = (value, q, L)
    value, q, L = best
    return 2.0 ** (p - 1) * value, q, L


def euclidean_bound(p: float, D: int, M: int, q: int = 2,
                    diam: float = 1.0) -> float:
    """Closed-form coefficient of ``S^(-1/2)`` for ``M`` points in ``R^D``.

    Three branches on ``p' = D/2 - p``; the factor ``(q/(q-1))^p`` is
    omitted for ``p = 1``.
    """
    if q < 2 or int(q) != q:
        raise ValueError("q must be an integer >= 2")
    factor = 1.0 if p == 1 else (q / (q - 1.0)) ** p
    pp = D / 2.0 - p
    if pp < 0:
        inner = factor * q ** pp / (1.0 - q ** pp)
    elif pp == 0:
        inner = 1.0 + factor * math.log(M, q) / D
    else:
        m_pow = M ** (0.5 - p / D)
        inner = m_pow + factor * q ** pp * m_pow / (q ** pp - 1.0)
    return D ** (p / 2.0) * 2.0 ** (p - 1) * diam ** p * q ** p * inner


def empirical_ot_bound(points, p: float, S: int) -> float:
    """Upper bound on ``E[W_p^p(mu, mu^S)]`` for any ``mu`` on ``points``."""
    E, _, _ = constant_E(points, p)
    return diameter(points) ** p * E / math.sqrt(S)


def frechet_gap_bound(measures: Sequence[DiscreteMeasure], p: float,
                      S, constant: str = "numeric") -> float:
    """Bound on ``E|F^p(mu*) - F^p(mu*_S)|`` for resampled barycenters.

    ``2 p diam(X)^p / N * sum_i E(supp mu_i, 1) / sqrt(S_i)`` with ``X`` the
    union of the supports.

    Parameters
    ----------
    S : int or sequence of int
        Sample size, shared or per measure.
    constant : {"numeric", "euclidean"}
        ``"numeric"`` evaluates ``E`` from covering numbers of each support;
        ``"euclidean"`` uses the closed form with ``q = 2``.
    """
    N = len(measures)
    S_list = np.broadcast_to(np.asarray(S, dtype=float), (N,))
    diam = diameter(np.vstack([m.points for m in measures]))
    total = 0.0
    for mu, s in zip(measures, S_list):
        supp = np.unique(mu.support(), axis=0)
        if constant not in ("numeric", "euclidean"):
            raise ValueError(f"unknown constant mode {constant!r}")
        if supp.shape[0] == 1:
            # a point mass is reproduced exactly by every sample
            E = 0.0
        elif constant == "numeric":
            E = constant_E(supp, 1.0)[0]
        else:
            E = euclidean_bound(1.0, mu.dim, supp.shape[0], 2, 1.0)
        total += E / math.sqrt(s)
    return 2.0 * p * diam ** p * total / N


def cube_gap_coefficient(D: int, M: int, p: float = 2.0) -> float:
    """Frechet-gap coefficient of ``S^(-1/2)`` for measures in ``[0, 1]^D``.

    Composes the gap bound with the closed form for ``E(X, 1)`` at ``q = 2``
    and ``diam = sqrt(D)``.
    """
    E = euclidean_bound(1.0, D, M, 2, 1.0)
    return 2.0 * p * D ** (p / 2.0) * E


def eq_p2_bound(D: int, M: int, S: int) -> float:
    """The stated unit-cube bound for ``p = 2``:
    ``4 D^(3/2) S^(-1/2) * {2+sqrt2 | 2+log2 M | (3+sqrt2) M^(1/2-1/D)}``."""
    if D < 1:
        raise ValueError("D must be >= 1")
    if D == 1:
        inner = 2.0 + math.sqrt(2.0)
    elif D == 2:
        inner = 2.0 + math.log2(M)
    else:
        inner = (3.0 + math.sqrt(2.0)) * M ** (0.5 - 1.0 / D)
    return 4.0 * D ** 1.5 * inner / math.sqrt(S)


def binomial_lower_bound(S: int) -> tuple[float, float]:
    """``E[W_1(mu, mu^S)]`` for ``mu = (delta_0 + delta_1)/2``.

    Returns the exact value ``E|K/S - 1/2|``, ``K ~ Bin(S, 1/2)``, summed in
    log space, and the closed lower bound ``sqrt(2) / (4 sqrt(S))``.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    k = np.arange(S + 1)
    dev = np.abs(k - S / 2.0)
    mask = dev > 0
    log_terms = (gammaln(S + 1) - gammaln(k[mask] + 1) - gammaln(S - k[mask] + 1)
                 - S * math.log(2.0) + np.log(dev[mask]))
    exact = float(np.exp(log_terms).sum()) / S if mask.any() else 0.0
    return exact, math.sqrt(2.0) / (4.0 * math.sqrt(S))


@dataclass
class BoundReport:
    """Every bound for one collection of measures at sample size ``S``."""

    S: int
    p: float
    D: int
    M: int
    E: float
    q: float
    l_max: int
    ot_bound: float
    gap_bound: float
    eq_p2: float
    cube_composed: float
    binomial_exact: float | None = None
    binomial_closed: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _is_two_point_half(mu: DiscreteMeasure) -> bool:
    supp_w = mu.weights[mu.weights > 1e-12]
    return supp_w.size == 2 and abs(supp_w[0] - 0.5) < 1e-12


def bound_report(measures: Sequence[DiscreteMeasure], p: float, S: int) -> BoundReport:
    """Evaluate all bounds.

    ``E``, ``q``, ``l_max`` and ``ot_bound`` refer to the union of the
    supports; ``eq_p2`` and ``cube_composed`` take ``D`` and ``M`` (largest
    support size) as if the data lived in the unit cube. The binomial values
    are filled for a single two-point measure with equal weights.
    """
    union = np.unique(np.vstack([m.support() for m in measures]), axis=0)
    D = measures[0].dim
    M = max(m.support().shape[0] for m in measures)
    E, q, L = constant_E(union, p)
    report = BoundReport(
        S=S, p=p, D=D, M=M, E=E, q=q, l_max=L,
        ot_bound=diameter(union) ** p * E / math.sqrt(S),
        gap_bound=frechet_gap_bound(measures, p, S),
        eq_p2=eq_p2_bound(D, M, S),
        cube_composed=cube_gap_coefficient(D, M, 2.0) / math.sqrt(S),
    )
    if len(measures) == 1 and _is_two_point_half(measures[0]):
        pts = measures[0].support()
        scale = diameter(pts) ** p
        exact, closed = binomial_lower_bound(S)
        report.binomial_exact = scale * exact
        report.binomial_closed = scale * closed
    return report
