import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wbary.errors import MeasureError, SizeCapError
from wbary.measures import (DiscreteMeasure, centroid_set, diameter,
                            load_measure_csv, make_measure, merge_duplicates,
                            mixture, sample_empirical, save_measure_csv,
                            uniform_measure)


def test_two_point_measure_is_valid():
    mu = make_measure([[0.0], [1.0]], [0.5, 0.5])
    assert abs(mu.weights.sum() - 1) <= 1e-12
    assert mu.n_atoms == 2 and mu.dim == 1
    assert mu.original_mass is None


def test_weights_are_renormalised_and_mass_recorded():
    mu = make_measure([[0.0], [1.0]], [2, 2])
    np.testing.assert_allclose(mu.weights, [0.5, 0.5])
    assert mu.original_mass == pytest.approx(4.0)


def test_tiny_renormalisation_is_silent():
    mu = make_measure([[0.0], [1.0]], [0.5, 0.5 + 1e-8])
    assert mu.original_mass is None


@pytest.mark.parametrize("points, weights, message", [
    ([[0.0], [1.0]], [0, 0], "degenerate weights"),
    (np.zeros((0, 2)), [], "empty input"),
    ([[0.0], [np.nan]], [0.5, 0.5], "non-finite"),
    ([[0.0], [1.0]], [1.0, -0.1], "negative weight"),
])
def test_invalid_inputs_are_rejected(points, weights, message):
    with pytest.raises(MeasureError, match=message):
        make_measure(points, weights)


def test_tiny_negative_weights_are_clamped():
    mu = make_measure([[0.0], [1.0]], [1.0, -1e-13])
    assert mu.weights[1] == 0.0


def test_constructor_validates_sum():
    with pytest.raises(MeasureError):
        DiscreteMeasure(np.zeros((2, 1)), np.array([0.5, 0.6]))


def test_point_mass_sampling():
    mu = make_measure([[3.0, 4.0]])
    emp = sample_empirical(mu, 7, seed=1)
    assert emp.n_atoms == 7 and emp.sample_size == 7
    np.testing.assert_array_equal(emp.points, np.tile([3.0, 4.0], (7, 1)))
    np.testing.assert_allclose(emp.weights, 1 / 7)


def test_sampling_law_of_large_numbers():
    mu = make_measure([[0.0], [1.0]])
    emp = sample_empirical(mu, 100_000, seed=3)
    assert abs(emp.points.mean() - 0.5) <= 0.01


def test_sampling_is_deterministic_per_seed():
    mu = make_measure(np.random.default_rng(0).random((10, 2)))
    a = sample_empirical(mu, 50, seed=9)
    b = sample_empirical(mu, 50, seed=9)
    c = sample_empirical(mu, 50, seed=10)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_sampling_respects_zero_weights():
    mu = make_measure([[0.0], [1.0], [2.0]], [0.5, 0.0, 0.5])
    emp = sample_empirical(mu, 2000, seed=0)
    assert not np.any(emp.points == 1.0)


@given(st.integers(1, 6), st.integers(1, 40), st.integers(0, 2**32))
def test_empirical_measure_is_always_valid(M, S, seed):
    rng = np.random.default_rng(seed)
    mu = make_measure(rng.random((M, 2)), rng.random(M) + 1e-3)
    emp = sample_empirical(mu, S, seed)
    assert emp.n_atoms == S
    assert np.all(emp.weights == 1.0 / S)
    parents = mu.points[emp.parent_indices]
    assert np.array_equal(parents, emp.points)


def test_centroid_of_two_point_masses_is_midpoint():
    C = centroid_set([make_measure([[0.0]]), make_measure([[1.0]])], p=2)
    np.testing.assert_allclose(C, [[0.5]])


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_generic_sizes_give_twelve_centroids(p, rng):
    # clusters near the corners of an equilateral triangle keep every tuple
    # acute, so no geometric median lands on a data point
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    sizes = (2, 2, 3)
    ms = [make_measure(c + 0.05 * rng.random((m, 2))) for c, m in zip(corners, sizes)]
    C = centroid_set(ms, p=p)
    assert C.shape == (12, 2)


def test_p2_centroids_are_tuple_means(rng):
    ms = [make_measure(rng.random((m, 3))) for m in (2, 3, 2)]
    C = centroid_set(ms, p=2)
    expected = np.array([np.mean(t, axis=0) for t in
                         itertools.product(*[m.points for m in ms])])
    # both are in tuple order when no duplicates get merged
    np.testing.assert_allclose(C, expected, atol=1e-12)


def test_grid_centroids_lie_on_finer_grid():
    s, N = 3, 3
    t = np.linspace(0, 1, s)
    grid = np.array([[x, y] for y in t for x in t])
    rng = np.random.default_rng(0)
    ms = [make_measure(grid, rng.random(s * s) + 0.1) for _ in range(N)]
    C = centroid_set(ms, p=2)
    fine = C * N * (s - 1)
    np.testing.assert_allclose(fine, np.rint(fine), atol=1e-9)
    assert C.shape[0] == (N * (s - 1) + 1) ** 2


def test_p1_centroid_is_geometric_median():
    # three points forming a triangle with all angles below 120 degrees
    pts = [np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]), np.array([[0.5, 0.8]])]
    C = centroid_set([make_measure(p) for p in pts], p=1)
    stacked = np.vstack(pts)

    def obj(y):
        return np.linalg.norm(stacked - y, axis=1).sum()

    best = obj(C[0])
    for d in np.random.default_rng(0).normal(size=(200, 2)) * 1e-3:
        assert obj(C[0] + d) >= best - 1e-9


def test_centroid_cap():
    ms = [make_measure(np.random.default_rng(i).random((10, 2))) for i in range(4)]
    with pytest.raises(SizeCapError):
        centroid_set(ms, cap=1000)


def test_diameter_examples(rng):
    square = np.array([[0, 0], [0, 1], [1, 0], [1, 1.0]])
    assert diameter(square) == pytest.approx(np.sqrt(2))
    assert diameter([[1.0, 2.0]]) == 0.0
    X = rng.random((100, 3))
    brute = max(np.linalg.norm(a - b) for a in X for b in X)
    assert diameter(X, block=17) == pytest.approx(brute, abs=1e-15)


def test_merge_and_mixture():
    mu = make_measure([[0.0], [0.0], [1.0]], [0.25, 0.25, 0.5])
    merged = merge_duplicates(mu)
    assert merged.n_atoms == 2
    np.testing.assert_allclose(sorted(merged.weights), [0.5, 0.5])
    mix = mixture([make_measure([[0.0]]), make_measure([[1.0], [2.0]])])
    assert mix.n_atoms == 3
    np.testing.assert_allclose(mix.weights, [0.5, 0.25, 0.25])


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 3)),
              elements=st.floats(-1e6, 1e6)),
       st.integers(0, 2**16))
def test_csv_round_trip(tmp_path_factory, points, seed):
    w = np.random.default_rng(seed).random(points.shape[0]) + 0.01
    mu = make_measure(points, w)
    path = tmp_path_factory.mktemp("csv") / "mu.csv"
    save_measure_csv(path, mu)
    back = load_measure_csv(path)
    np.testing.assert_array_equal(back.points, mu.points)
    np.testing.assert_allclose(back.weights, mu.weights, atol=1e-12)


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(MeasureError, match="header"):
        load_measure_csv(path)


def test_uniform_measure():
    mu = uniform_measure(np.zeros((4, 2)))
    assert mu.is_uniform()
