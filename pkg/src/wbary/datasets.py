"""
Synthetic measure families and grayscale image conversion.

Point-cloud families return uniform measures on ``M`` points inside the unit
square (or cube). Grid families put weights on a ``g x g`` grid of
``[0, 1]^2`` with ``M = g^2``. Shape parameters are fixed defaults chosen for
this library; override them through ``DatasetSpec.params``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import MeasureError
from .measures import DiscreteMeasure, make_measure
from .seeding import derive_seed

__all__ = [
    "FAMILIES",
    "DEFAULTS",
    "DatasetSpec",
    "generate",
    "grid_points",
    "cauchy_density",
    "from_image",
    "to_image",
    "read_pgm",
    "write_pgm",
]

DEFAULTS: dict[str, dict] = {
    "crescents": {"radius": (0.18, 0.32), "shift": (0.08, 0.16)},
    "ellipses": {"radius": (0.08, 0.3)},
    "nested-ellipses": {"radius": (0.15, 0.3), "levels": 3},
    "gaussian": {"scale": (0.05, 0.15)},
    "cauchy-grid": {"scale": (0.03, 0.1)},
    "dirichlet-grid": {"concentration": 1.0},
    "dirichlet-uniform": {"concentration": 1.0},
    "torso": {"radius": (0.15, 0.3), "height": (0.5, 0.8)},
    "prism": {"radius": (0.15, 0.3), "height": (0.5, 0.8)},
}
FAMILIES = tuple(DEFAULTS)
GRID_FAMILIES = ("cauchy-grid", "dirichlet-grid")


@dataclass
class DatasetSpec:
    """Which family to draw from and how many measures of what size.

    For grid families ``M`` must be a perfect square (the grid side is
    ``sqrt(M)``). ``params`` overrides entries of ``DEFAULTS[family]``.
    """

    family: str
    N: int = 10
    M: int = 100
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in DEFAULTS:
            raise ValueError(
                f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.N < 1 or self.M < 1:
            raise ValueError("N and M must be >= 1")
        unknown = set(self.params) - set(DEFAULTS[self.family])
        if unknown:
            raise ValueError(f"unknown parameters for {self.family}: {sorted(unknown)}")
        if self.family in GRID_FAMILIES and math.isqrt(self.M) ** 2 != self.M:
            raise ValueError(f"{self.family} needs M to be a perfect square")

    @property
    def D(self) -> int:
        return 3 if self.family in ("torso", "prism") else 2

    def resolved(self) -> dict:
        return {**DEFAULTS[self.family], **self.params}


def grid_points(side: int) -> np.ndarray:
    """``side x side`` grid on ``[0, 1]^2``, x varying fastest."""
    t = np.linspace(0.0, 1.0, side) if side > 1 else np.zeros(1)
    xx, yy = np.meshgrid(t, t)
    return np.column_stack([xx.ravel(), yy.ravel()])


def cauchy_density(x, center, scale: float) -> np.ndarray:
    """Isotropic bivariate Cauchy density
    ``scale / (2 pi (|x - center|^2 + scale^2)^(3/2))``."""
    r2 = ((np.atleast_2d(x) - center) ** 2).sum(axis=1)
    return scale / (2.0 * np.pi * (r2 + scale ** 2) ** 1.5)


def _rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def _ellipse(rng, M, radius, center=None, axes=None, phi=None):
    if center is None:
        center = rng.uniform(0.5 - (0.45 - radius[1]), 0.5 + (0.45 - radius[1]), 2)
    if axes is None:
        axes = rng.uniform(*radius, 2)
    if phi is None:
        phi = rng.uniform(0.0, np.pi)
    t = rng.uniform(0.0, 2.0 * np.pi, M)
    local = np.column_stack([axes[0] * np.cos(t), axes[1] * np.sin(t)])
    return center + local @ _rotation(phi).T


def _crescent(rng, M, radius, shift):
    R = rng.uniform(*radius)
    d = rng.uniform(*shift)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    center = rng.uniform(0.5 - (0.45 - R), 0.5 + (0.45 - R), 2)
    bite = center + d * np.array([math.cos(phi), math.sin(phi)])
    out = np.empty((0, 2))
    while out.shape[0] < M:
        # rejection sample the disc minus a shifted disc of the same radius
        r = R * np.sqrt(rng.random(2 * M))
        a = rng.uniform(0.0, 2.0 * np.pi, 2 * M)
        cand = center + np.column_stack([r * np.cos(a), r * np.sin(a)])
        keep = np.linalg.norm(cand - bite, axis=1) > R
        out = np.vstack([out, cand[keep]])
    return out[:M]


def _nested(rng, M, radius, levels):
    center = rng.uniform(0.5 - (0.45 - radius[1]), 0.5 + (0.45 - radius[1]), 2)
    axes = rng.uniform(*radius, 2)
    phi = rng.uniform(0.0, np.pi)
    scales = np.arange(levels, 0, -1) / levels
    # points split across levels in proportion to the ring perimeter
    counts = np.floor(M * scales / scales.sum()).astype(int)
    counts[0] += M - counts.sum()
    rings = [_ellipse(rng, int(c), radius, center, s * axes, phi)
             for s, c in zip(scales, counts)]
    return np.vstack(rings)


def _polygon_boundary(rng, n_sides, M):
    vertices = np.column_stack([np.cos(2 * np.pi * np.arange(n_sides) / n_sides),
                                np.sin(2 * np.pi * np.arange(n_sides) / n_sides)])
    side = rng.integers(n_sides, size=M)
    t = rng.random(M)[:, None]
    return (1 - t) * vertices[side] + t * vertices[(side + 1) % n_sides]


def _extruded(rng, M, radius, height, profile):
    r = rng.uniform(*radius, 2) if profile == "ellipse" else np.full(2, rng.uniform(*radius))
    h = rng.uniform(*height)
    phi = rng.uniform(0.0, np.pi)
    if profile == "ellipse":
        t = rng.uniform(0.0, 2.0 * np.pi, M)
        ring = np.column_stack([np.cos(t), np.sin(t)])
    else:
        ring = _polygon_boundary(rng, 5, M)
    xy = 0.5 + (ring * r) @ _rotation(phi).T
    z = 0.5 - h / 2 + h * rng.random(M)
    return np.column_stack([xy, z])


def _one_measure(family: str, M: int, params: dict, rng) -> DiscreteMeasure:
    if family == "crescents":
        return make_measure(_crescent(rng, M, params["radius"], params["shift"]))
    if family == "ellipses":
        return make_measure(_ellipse(rng, M, params["radius"]))
    if family == "nested-ellipses":
        return make_measure(_nested(rng, M, params["radius"], int(params["levels"])))
    if family == "gaussian":
        center = rng.uniform(0.3, 0.7, 2)
        sigma = rng.uniform(*params["scale"])
        return make_measure(center + sigma * rng.standard_normal((M, 2)))
    if family == "cauchy-grid":
        pts = grid_points(math.isqrt(M))
        center = rng.uniform(0.25, 0.75, 2)
        w = cauchy_density(pts, center, rng.uniform(*params["scale"]))
        return make_measure(pts, w)
    if family == "dirichlet-grid":
        pts = grid_points(math.isqrt(M))
        return make_measure(pts, rng.dirichlet(np.full(M, params["concentration"])))
    if family == "dirichlet-uniform":
        pts = rng.random((M, 2))
        return make_measure(pts, rng.dirichlet(np.full(M, params["concentration"])))
    if family == "torso":
        return make_measure(_extruded(rng, M, params["radius"], params["height"], "ellipse"))
    if family == "prism":
        return make_measure(_extruded(rng, M, params["radius"], params["height"], "pentagon"))
    raise ValueError(f"unknown family {family!r}")


def generate(spec: DatasetSpec) -> list[DiscreteMeasure]:
    """Draw ``spec.N`` measures; measure ``i`` uses a seed derived from
    ``(spec.seed, i)`` so subsets and reorderings stay reproducible."""
    params = spec.resolved()
    return [_one_measure(spec.family, spec.M, params,
                         np.random.default_rng(derive_seed(spec.seed, i)))
            for i in range(spec.N)]


# --------------------------------------------------------------------------
# images
# --------------------------------------------------------------------------

def from_image(raster, drop_below: float = 0.0) -> DiscreteMeasure:
    """Measure with weights proportional to pixel intensity.

    Pixel ``(row, col)`` of an ``H x W`` raster maps to the point
    ``(col / (W-1), row / (H-1))``. Pixels with intensity ``<= drop_below``
    are dropped before normalisation.
    """
    img = np.asarray(raster, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D grayscale raster")
    H, W = img.shape
    rows, cols = np.nonzero(img > max(drop_below, 0.0))
    if rows.size == 0:
        raise MeasureError("image has no pixel above the threshold (all black)")
    x = cols / (W - 1) if W > 1 else np.zeros(cols.size)
    y = rows / (H - 1) if H > 1 else np.zeros(rows.size)
    return make_measure(np.column_stack([x, y]), img[rows, cols])


def to_image(mu: DiscreteMeasure, side: int) -> tuple[np.ndarray, int]:
    """Bin a planar measure on ``[0, 1]^2`` into a ``side x side`` raster.

    Each atom goes to its nearest grid cell (the inverse of
    :func:`from_image`). Intensities are scaled so the brightest pixel is 1.

    Returns
    -------
    raster : ndarray, shape (side, side)
    n_clamped : int
        Number of atoms outside the unit square that were clamped to the
        border; a warning is issued when it is nonzero.
    """
    if mu.dim != 2:
        raise ValueError("to_image needs a planar measure")
    scaled = mu.points * (side - 1)
    idx = np.rint(scaled).astype(np.int64)
    outside = ((mu.points < 0.0) | (mu.points > 1.0)).any(axis=1)
    n_clamped = int(outside.sum())
    if n_clamped:
        warnings.warn(f"{n_clamped} atoms outside [0,1]^2 clamped to the border",
                      stacklevel=2)
    np.clip(idx, 0, side - 1, out=idx)
    raster = np.zeros((side, side))
    np.add.at(raster, (idx[:, 1], idx[:, 0]), mu.weights)
    peak = raster.max()
    if peak > 0:
        raster /= peak
    return raster, n_clamped


def _pgm_tokens(data: bytes, count: int, start: int = 0):
    tokens, pos = [], start
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    return tokens, pos


def read_pgm(path) -> np.ndarray:
    """Read a P2 (ASCII) or P5 (binary) PGM file as floats in ``[0, 1]``."""
    with open(path, "rb") as fh:
        data = fh.read()
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    W, H, maxval = int(w), int(h), int(maxval)
    if magic == b"P2":
        values, _ = _pgm_tokens(data, W * H, pos)
        arr = np.array([int(v) for v in values], dtype=float)
    elif magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        arr = np.frombuffer(data, dtype=dtype, count=W * H, offset=pos + 1).astype(float)
    else:
        raise ValueError(f"not a PGM file (magic {magic!r})")
    return arr.reshape(H, W) / maxval


def write_pgm(path, raster, binary: bool = True, maxval: int = 255) -> None:
    """Write intensities in ``[0, 1]`` as a P5 (default) or P2 PGM file."""
    img = np.clip(np.asarray(raster, dtype=float), 0.0, 1.0)
    H, W = img.shape
    q = np.rint(img * maxval).astype(np.int64)
    header = f"{'P5' if binary else 'P2'}\n{W} {H}\n{maxval}\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            dtype = np.dtype(">u2") if maxval > 255 else np.uint8
            fh.write(q.astype(dtype).tobytes())
        else:
            for row in q:
                fh.write((" ".join(str(v) for v in row) + "\n").encode())
