import math
import warnings

import numpy as np
import pytest

from wbary.datasets import (FAMILIES, DatasetSpec, cauchy_density, from_image,
                            generate, grid_points, read_pgm, to_image, write_pgm)
from wbary.errors import MeasureError
from wbary.measures import diameter, make_measure
from wbary.seeding import derive_seed


@pytest.mark.parametrize("family", FAMILIES)
def test_every_family_generates_valid_measures(family):
    spec = DatasetSpec(family, N=4, M=36, seed=5)
    ms = generate(spec)
    assert len(ms) == 4
    for mu in ms:
        assert mu.n_atoms == 36 and mu.dim == spec.D
        assert abs(mu.weights.sum() - 1) <= 1e-12
    again = generate(spec)
    assert all(np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)
               for a, b in zip(ms, again))


def test_ellipse_points_satisfy_an_implicit_equation():
    for mu in generate(DatasetSpec("ellipses", N=20, M=50, seed=0)):
        X = mu.points
        # fit the conic a x^2 + b xy + c y^2 + d x + e y = 1 and check residuals
        A = np.column_stack([X[:, 0] ** 2, X[:, 0] * X[:, 1], X[:, 1] ** 2, X[:, 0], X[:, 1]])
        coef, *_ = np.linalg.lstsq(A, np.ones(50), rcond=None)
        assert np.abs(A @ coef - 1).max() <= 1e-9
        assert coef[1] ** 2 - 4 * coef[0] * coef[2] < 0
        assert mu.is_uniform()


def test_dirichlet_grid_weights():
    mu = generate(DatasetSpec("dirichlet-grid", N=1, M=64,
                              params={"concentration": 1.0}))[0]
    assert mu.weights.min() >= 0 and abs(mu.weights.sum() - 1) <= 1e-12


def test_cauchy_grid_matches_density():
    spec = DatasetSpec("cauchy-grid", N=1, M=81, seed=2)
    mu = generate(spec)[0]
    rng = np.random.default_rng(derive_seed(2, 0))
    center = rng.uniform(0.25, 0.75, 2)
    scale = rng.uniform(*spec.resolved()["scale"])
    dens = cauchy_density(grid_points(9), center, scale)
    np.testing.assert_allclose(mu.weights, dens / dens.sum(), rtol=1e-12)
    # peak value of the density is 1 / (2 pi scale^2)
    assert cauchy_density(center, center, scale)[0] == pytest.approx(
        1 / (2 * math.pi * scale ** 2), rel=1e-14)


def test_larger_radius_gives_larger_shapes():
    small = generate(DatasetSpec("ellipses", N=30, M=40, params={"radius": (0.05, 0.1)}))
    large = generate(DatasetSpec("ellipses", N=30, M=40, params={"radius": (0.2, 0.3)}))
    assert np.mean([diameter(m.points) for m in small]) < np.mean(
        [diameter(m.points) for m in large])


def test_spec_validation():
    with pytest.raises(ValueError, match="unknown family"):
        DatasetSpec("spirals")
    with pytest.raises(ValueError, match="perfect square"):
        DatasetSpec("dirichlet-grid", M=10)
    with pytest.raises(ValueError, match="unknown parameters"):
        DatasetSpec("ellipses", params={"levels": 2})


def test_image_examples():
    img = np.zeros((5, 5))
    img[1, 3] = 0.7
    mu = from_image(img)
    np.testing.assert_allclose(mu.points, [[0.75, 0.25]])
    flat = from_image(np.ones((4, 4)))
    assert flat.n_atoms == 16 and flat.is_uniform()
    diag = from_image(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert diag.n_atoms == 2
    np.testing.assert_allclose(diag.weights, [0.5, 0.5])
    with pytest.raises(MeasureError, match="black"):
        from_image(np.zeros((3, 3)))
    assert from_image(np.array([[0.1, 0.9]]), drop_below=0.5).n_atoms == 1


def test_rendering():
    raster, n = to_image(make_measure([[0.5, 0.5]]), 3)
    expected = np.zeros((3, 3))
    expected[1, 1] = 1
    np.testing.assert_array_equal(raster, expected)
    assert n == 0
    two = make_measure([[0.0, 0.0], [0.01, 0.0], [1.0, 1.0]], [0.25, 0.25, 0.5])
    raster, _ = to_image(two, 5)
    assert raster[0, 0] == raster[4, 4] == 1.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _, n = to_image(make_measure([[1.5, 0.5], [0.5, 0.5]]), 4)
    assert n == 1 and caught


def test_round_trip_through_image(rng):
    side = 7
    w = rng.random(side * side)
    mu = make_measure(grid_points(side), w)
    raster, _ = to_image(mu, side)
    back = from_image(raster)
    np.testing.assert_allclose(back.weights, mu.weights, atol=1e-12)
    np.testing.assert_allclose(back.points, mu.points, atol=1e-12)


@pytest.mark.parametrize("binary", [True, False])
@pytest.mark.parametrize("maxval", [255, 65535])
def test_pgm_round_trip(tmp_path, rng, binary, maxval):
    img = rng.integers(0, maxval + 1, size=(6, 9)) / maxval
    path = tmp_path / "x.pgm"
    write_pgm(path, img, binary=binary, maxval=maxval)
    np.testing.assert_allclose(read_pgm(path), img, atol=1e-12)


def test_pgm_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P2\n# a comment\n2 1\n# another\n10\n0 10\n")
    np.testing.assert_allclose(read_pgm(path), [[0.0, 1.0]])
