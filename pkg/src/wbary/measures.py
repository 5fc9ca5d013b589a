"""
Finitely supported probability measures on R^D.

A :class:`DiscreteMeasure` is a weighted point cloud. Empirical measures keep
every draw as its own row (duplicates are never merged) because the free
support solver works on an S-row position matrix.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import MeasureError, SizeCapError

__all__ = [
    "DiscreteMeasure",
    "EmpiricalMeasure",
    "make_measure",
    "uniform_measure",
    "sample_empirical",
    "centroid_set",
    "diameter",
    "merge_duplicates",
    "mixture",
    "save_measure_csv",
    "load_measure_csv",
]

RENORMALIZE_WARN_TOL = 1e-6


@dataclass(eq=False)
class DiscreteMeasure:
    """Weighted atoms ``sum_k weights[k] * delta_{points[k]}``.

    Use :func:`make_measure` to build one from raw data; the constructor only
    validates.

    Attributes
    ----------
    points : ndarray, shape (M, D)
    weights : ndarray, shape (M,)
    original_mass : float or None
        Sum of the raw weights, recorded when it differed from 1 by more
        than 1e-6 so callers can warn about it.
    """

    points: np.ndarray
    weights: np.ndarray
    original_mass: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise MeasureError("a measure needs at least one atom in dimension >= 1")
        if pts.shape[0] != w.shape[0]:
            raise MeasureError(
                f"{pts.shape[0]} points but {w.shape[0]} weights")
        if not np.all(np.isfinite(pts)):
            raise MeasureError("non-finite coordinate")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise MeasureError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise MeasureError(f"weights sum to {w.sum()!r}, expected 1")
        self.points = pts
        self.weights = w

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def is_uniform(self, tol: float = 1e-12) -> bool:
        return bool(np.ptp(self.weights) <= tol)

    def support(self, tol: float = 0.0) -> np.ndarray:
        """Points carrying weight strictly above ``tol``."""
        return self.points[self.weights > tol]

    def __repr__(self):
        return f"{type(self).__name__}(M={self.n_atoms}, D={self.dim})"


@dataclass(eq=False, repr=False)
class EmpiricalMeasure(DiscreteMeasure):
    """Uniform measure on S i.i.d. draws from a parent measure."""

    seed: int | None = None
    parent_indices: np.ndarray | None = field(default=None)

    @property
    def sample_size(self) -> int:
        return self.n_atoms


def make_measure(points, weights=None) -> DiscreteMeasure:
    """Validate and normalize raw atoms and weights.

    Weights above ``-1e-12`` are clamped at zero and renormalized to sum to
    one. When the raw mass differed from one by more than 1e-6 it is kept in
    ``original_mass``.

    Raises
    ------
    MeasureError
        Empty input, non-finite coordinates, negative or all-zero weights.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.size == 0:
        raise MeasureError("empty input")
    if not np.all(np.isfinite(pts)):
        raise MeasureError("non-finite coordinate")
    if weights is None:
        w = np.full(pts.shape[0], 1.0 / pts.shape[0])
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != pts.shape[0]:
        raise MeasureError(f"{pts.shape[0]} points but {w.shape[0]} weights")
    if not np.all(np.isfinite(w)):
        raise MeasureError("non-finite weight")
    if np.any(w < -1e-12):
        raise MeasureError("negative weight")
    w = np.maximum(w, 0.0)
    total = float(w.sum())
    if total <= 0.0:
        raise MeasureError("degenerate weights: all zero")
    original = total if abs(total - 1.0) > RENORMALIZE_WARN_TOL else None
    w = w / total
    return DiscreteMeasure(pts, w, original_mass=original)


def uniform_measure(points) -> DiscreteMeasure:
    return make_measure(points)


def sample_empirical(mu: DiscreteMeasure, S: int, seed=0) -> EmpiricalMeasure:
    """Draw ``S`` i.i.d. atoms from ``mu`` by inverse-CDF sampling.

    Parameters
    ----------
    mu : DiscreteMeasure
    S : int
        Sample size, ``S >= 1``.
    seed : int or numpy.random.SeedSequence
        The output is bit-identical for identical seeds.

    Returns
    -------
    EmpiricalMeasure
        ``S`` rows (duplicates kept), every weight ``1/S``.
    """
    S = int(S)
    if S < 1:
        raise ValueError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(mu.weights)
    u = rng.random(S) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, mu.n_atoms - 1, out=idx)
    seed_record = int(seed) if isinstance(seed, (int, np.integer)) else None
    return EmpiricalMeasure(
        mu.points[idx].copy(), np.full(S, 1.0 / S), seed=seed_record,
        parent_indices=idx)


def mixture(measures: Sequence[DiscreteMeasure], coefficients=None) -> DiscreteMeasure:
    """Linear combination of measures; supports are concatenated, not merged."""
    if coefficients is None:
        coefficients = np.full(len(measures), 1.0 / len(measures))
    pts = np.vstack([m.points for m in measures])
    w = np.concatenate([c * m.weights for c, m in zip(coefficients, measures)])
    return DiscreteMeasure(pts, w / w.sum())


def merge_duplicates(mu: DiscreteMeasure, tol: float = 1e-10) -> DiscreteMeasure:
    """Merge atoms closer than ``tol``; the first atom of a group is kept."""
    labels = _cluster_labels(mu.points, tol)
    reps, inverse = np.unique(labels, return_inverse=True)
    w = np.bincount(inverse, weights=mu.weights, minlength=reps.size)
    return DiscreteMeasure(mu.points[reps], w / w.sum())


def _cluster_labels(points: np.ndarray, tol: float) -> np.ndarray:
    # connected components of the "closer than tol" graph; label = min index
    n = points.shape[0]
    if n < 2:
        return np.arange(n)
    pairs = cKDTree(points).query_pairs(r=tol, output_type="ndarray")
    if len(pairs) == 0:
        return np.arange(n)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                       shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    rep = np.full(comp.max() + 1, n)
    np.minimum.at(rep, comp, np.arange(n))
    return rep[comp]


# --------------------------------------------------------------------------
# centroid sets
# --------------------------------------------------------------------------

def centroid_set(measures: Sequence[DiscreteMeasure], p: float = 2.0,
                 cap: int = 10**7, tol: float = 1e-10) -> np.ndarray:
    """All minimizers of ``y -> sum_i |x_i - y|^p`` over one atom per measure.

    Every p-barycenter of the measures is supported on this set. For ``p=2``
    each centroid is the arithmetic mean of its tuple; otherwise it is
    computed numerically (Weiszfeld iteration for ``p=1``, damped Newton for
    ``p>1``).

    Parameters
    ----------
    measures : sequence of DiscreteMeasure
    p : float
        Exponent, ``p >= 1``.
    cap : int
        Refuse when the product of support sizes exceeds this.
    tol : float
        Centroids closer than ``tol`` are merged.

    Returns
    -------
    ndarray, shape (K, D)
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise MeasureError("measures live in different dimensions")
    sizes = [m.n_atoms for m in measures]
    total = 1
    for s in sizes:
        total *= s
    if total > cap:
        raise SizeCapError(
            f"centroid set would have {total} tuples, above the cap {cap}")
    supports = [m.points for m in measures]
    if p == 2:
        acc = supports[0]
        for pts in supports[1:]:
            acc = (acc[:, None, :] + pts[None, :, :]).reshape(-1, acc.shape[1])
        cents = acc / len(supports)
    else:
        tuples = _tuple_array(supports)
        cents = _p_centroids(tuples, p)
    keep = np.unique(_cluster_labels(cents, tol))
    return cents[keep]


def _tuple_array(supports):
    idx = np.array(list(itertools.product(*[range(len(s)) for s in supports])))
    return np.stack([s[idx[:, i]] for i, s in enumerate(supports)], axis=1)


def _p_centroids(tuples: np.ndarray, p: float, max_iter: int = 50,
                 tol: float = 1e-10) -> np.ndarray:
    """Vectorised argmin of sum_i |x_i - y|^p, one problem per row of tuples."""
    y = tuples.mean(axis=1)
    if p == 1:
        return _weiszfeld(tuples, y, tol=tol)

    eye = np.eye(tuples.shape[2])
    f = _objective_rows(tuples, y, p)
    for _ in range(max_iter):
        r = y[:, None, :] - tuples
        dist = np.linalg.norm(r, axis=2)
        safe = np.maximum(dist, 1e-300)
        grad = p * ((dist ** (p - 2))[..., None] * r).sum(axis=1)
        outer = r[..., :, None] * r[..., None, :] / (safe ** 2)[..., None, None]
        hess = p * ((safe ** (p - 2))[..., None, None]
                    * (eye + (p - 2) * outer)).sum(axis=1)
        hess += 1e-14 * eye
        step = np.linalg.solve(hess, grad[..., None])[..., 0]
        t = np.ones(y.shape[0])
        active = np.ones(y.shape[0], dtype=bool)
        new_y = y.copy()
        new_f = f.copy()
        for _ in range(40):
            cand = y[active] - t[active, None] * step[active]
            fc = _objective_rows(tuples[active], cand, p)
            ok = fc <= f[active] + 1e-15 * np.abs(f[active])
            idx = np.flatnonzero(active)
            new_y[idx[ok]] = cand[ok]
            new_f[idx[ok]] = fc[ok]
            active[idx[ok]] = False
            t[active] *= 0.5
            if not active.any():
                break
        moved = np.linalg.norm(new_y - y, axis=1).max()
        y, f = new_y, new_f
        if moved < tol:
            break
    return y


def _objective_rows(tuples, y, p):
    return (np.linalg.norm(tuples - y[:, None, :], axis=2) ** p).sum(axis=1)


def _weiszfeld(tuples: np.ndarray, y: np.ndarray, tol: float = 1e-10,
               max_iter: int = 2000) -> np.ndarray:
    # Vardi-Zhang modification: handles iterates that land on a data point
    y = y.copy()
    for _ in range(max_iter):
        r = tuples - y[:, None, :]
        dist = np.linalg.norm(r, axis=2)
        coincide = dist <= 1e-12
        inv = np.where(coincide, 0.0, 1.0 / np.where(coincide, 1.0, dist))
        wsum = inv.sum(axis=1)
        eta = coincide.sum(axis=1)
        safe_wsum = np.where(wsum > 0, wsum, 1.0)
        T = (inv[..., None] * tuples).sum(axis=1) / safe_wsum[:, None]
        R = (inv[..., None] * r).sum(axis=1)
        rnorm = np.linalg.norm(R, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(rnorm > 0, eta / rnorm, np.inf)
        new_y = np.where(
            (eta == 0)[:, None], T,
            np.maximum(0.0, 1.0 - ratio)[:, None] * T
            + np.minimum(1.0, ratio)[:, None] * y)
        new_y = np.where((wsum > 0)[:, None], new_y, y)
        moved = np.linalg.norm(new_y - y, axis=1).max()
        y = new_y
        if moved < tol:
            break
    return y


# --------------------------------------------------------------------------
# geometry helpers
# --------------------------------------------------------------------------

def diameter(points, metric: str = "euclidean", block: int = 2048) -> float:
    """Largest pairwise distance, by an exact blocked O(M^2) scan."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    best = 0.0
    for start in range(0, pts.shape[0], block):
        chunk = pts[start:start + block]
        best = max(best, float(cdist(chunk, pts[start:], metric=metric).max()))
    return best


# --------------------------------------------------------------------------
# CSV io: header x1,...,xD,w ; one atom per row
# --------------------------------------------------------------------------

def save_measure_csv(path, mu: DiscreteMeasure) -> None:
    header = [f"x{d + 1}" for d in range(mu.dim)] + ["w"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row, w in zip(mu.points, mu.weights):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])


def load_measure_csv(path) -> DiscreteMeasure:
    """Read a measure CSV; the dimension is taken from the header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not header or header[-1] != "w" or any(
            h != f"x{d + 1}" for d, h in enumerate(header[:-1])):
        raise MeasureError(f"bad measure CSV header: {','.join(header)}")
    if len(header) < 2:
        raise MeasureError("measure CSV needs at least one coordinate column")
    data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    if data.size == 0:
        raise MeasureError("empty input")
    if data.shape[1] != len(header):
        raise MeasureError("row length does not match header")
    return make_measure(data[:, :-1], data[:, -1])
