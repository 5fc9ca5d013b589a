import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from wbary.errors import InfeasibleError, SizeCapError, UnboundedError
from wbary.lp_oracle import (LinearProgram, build_barycenter_lp, exact_barycenter,
                             lp_size_estimate, solve_lp)
from wbary.measures import centroid_set, make_measure, mixture
from wbary.ot import transport_cost


def random_measure(rng, M, D=2):
    return make_measure(rng.random((M, D)), rng.random(M) + 0.05)


def frechet(mu, ms, p=2):
    return np.mean([transport_cost(m, mu, p) for m in ms])


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_single_variable(method):
    lp = LinearProgram(np.array([1.0]), sp.csr_matrix([[1.0]]), np.array([1.0]))
    res = solve_lp(lp, method=method)
    assert res.x[0] == pytest.approx(1.0)
    assert res.value == pytest.approx(1.0)


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_infeasible_and_unbounded(method):
    infeasible = LinearProgram(np.array([1.0, 1.0]),
                               sp.csr_matrix([[1.0, 1.0], [1.0, 1.0]]),
                               np.array([1.0, 2.0]))
    with pytest.raises(InfeasibleError):
        solve_lp(infeasible, method=method)
    unbounded = LinearProgram(np.array([-1.0, 0.0]),
                              sp.csr_matrix([[1.0, -1.0]]), np.array([0.0]))
    with pytest.raises(UnboundedError):
        solve_lp(unbounded, method=method)


def test_redundant_constraint_terminates():
    A = sp.csr_matrix([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    lp = LinearProgram(np.array([1.0, 2.0, 0.0]), A, np.array([1.0, 1.0, 1.0]))
    res = solve_lp(lp, method="simplex")
    assert res.value == pytest.approx(1.0)
    assert np.abs(A @ res.x - lp.b_eq).max() <= 1e-9


@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2**32))
def test_simplex_vertex_and_duals(m, n, seed):
    rng = np.random.default_rng(seed)
    A = sp.csr_matrix(rng.random((m, m + n)))
    x0 = rng.random(m + n)
    c = rng.random(m + n)
    lp = LinearProgram(c, A, A @ x0)
    res = solve_lp(lp, method="simplex")
    ref = solve_lp(lp, method="highs")
    assert res.value == pytest.approx(ref.value, abs=1e-8)
    assert np.abs(A @ res.x - lp.b_eq).max() <= 1e-9
    assert res.x.min() >= -1e-12
    assert np.count_nonzero(res.x > 1e-9) <= m


def test_nonzero_cap():
    lp = LinearProgram(np.ones(3), sp.csr_matrix(np.ones((2, 3))), np.ones(2))
    with pytest.raises(SizeCapError):
        solve_lp(lp, nnz_cap=5)


def test_layout_counts(rng):
    ms = [random_measure(rng, m) for m in (2, 3, 4)]
    blp = build_barycenter_lp(ms, 2)
    K = blp.n_support
    assert K == 24
    assert blp.lp.n_vars == K + K * 9
    assert blp.lp.n_constraints == sum(K + m for m in (2, 3, 4))
    assert blp.pi_index(1, 0, 0) == K + K * 2
    x = np.zeros(blp.lp.n_vars)
    x[blp.pi_index(2, 5, 3)] = 7
    assert blp.plan(x, 2)[5, 3] == 7


def test_single_measure_is_its_own_barycenter(rng):
    mu = random_measure(rng, 5)
    bary, value = exact_barycenter([mu], 2)
    assert value == pytest.approx(0, abs=1e-10)
    assert transport_cost(bary, mu, 2) == pytest.approx(0, abs=1e-10)


def test_midpoint_barycenter():
    bary, value = exact_barycenter([make_measure([[0.0]]), make_measure([[1.0]])], 2)
    np.testing.assert_allclose(bary.points, [[0.5]])
    assert value == pytest.approx(0.25)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("seed", range(4))
def test_sparsity_and_optimality(p, seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 5, size=3)
    ms = [random_measure(rng, int(m)) for m in sizes]
    bary, value = exact_barycenter(ms, p)
    assert bary.n_atoms <= sizes.sum() - 3 + 1
    assert frechet(bary, ms, p) == pytest.approx(value, abs=1e-8)


def test_engines_agree(rng):
    ms = [random_measure(rng, 3) for _ in range(3)]
    _, v1 = exact_barycenter(ms, 2, method="highs")
    _, v2 = exact_barycenter(ms, 2, method="simplex")
    assert v1 == pytest.approx(v2, abs=1e-8)


def test_value_lower_bounds_random_candidates(rng):
    ms = [random_measure(rng, 3) for _ in range(3)]
    _, value = exact_barycenter(ms, 2)
    C = centroid_set(ms, 2)
    for _ in range(20):
        cand = make_measure(C, rng.random(len(C)))
        assert frechet(cand, ms) >= value - 1e-8
    # candidates off the centroid set are no better either
    cand = mixture([random_measure(rng, 4), random_measure(rng, 2)])
    assert frechet(cand, ms) >= value - 1e-8


def test_permutation_invariance(rng):
    ms = [random_measure(rng, int(m)) for m in (2, 3, 4)]
    _, v = exact_barycenter(ms, 2)
    _, w = exact_barycenter(ms[::-1], 2)
    assert v == pytest.approx(w, abs=1e-8)


def test_size_cap_message(rng):
    ms = [random_measure(rng, 20) for _ in range(4)]
    with pytest.raises(SizeCapError, match="variables"):
        exact_barycenter(ms, 2)


def test_lp_size_arithmetic():
    n_vars, n_cons = lp_size_estimate(100, grid=256, p=2)
    assert n_vars > 10**15 and n_cons > 10**10
    K = (100 * 255 + 1) ** 2
    assert n_vars == K * 100 * 256**2 + K
    n_vars, n_cons = lp_size_estimate(100, sizes=[65536] * 100)
    assert n_vars > 10**488 and n_cons > 10**483
    assert lp_size_estimate(1, sizes=[1]) == (2, 2)


def test_lp_size_matches_assembled_lp(rng):
    ms = [random_measure(rng, m) for m in (2, 3)]
    blp = build_barycenter_lp(ms, 2)
    assert lp_size_estimate(2, sizes=[2, 3]) == (blp.lp.n_vars, blp.lp.n_constraints)
