import numpy as np
import pytest

from wbary.lp_oracle import exact_barycenter
from wbary.measures import make_measure, sample_empirical
from wbary.pipeline import (derive_seed, frechet_value, randomized_barycenter,
                            read_records_csv, reference_value, summarize, sweep,
                            write_records_csv, write_summary_csv)
from wbary.bounds import frechet_gap_bound
from wbary.sua import SuaConfig


def uniform(rng, M, D=2):
    return make_measure(rng.random((M, D)))


def test_frechet_examples(rng):
    mu = uniform(rng, 5)
    assert frechet_value(mu, [mu, mu, mu]) == pytest.approx(0, abs=1e-12)
    pair = [make_measure([[0.0]]), make_measure([[1.0]])]
    assert frechet_value(make_measure([[0.5]]), pair) == pytest.approx(0.25)


@pytest.mark.parametrize("seed", range(5))
def test_frechet_never_below_lp_optimum(seed):
    rng = np.random.default_rng(seed)
    ms = [make_measure(rng.random((3, 2)), rng.random(3) + 0.1) for _ in range(3)]
    _, opt = exact_barycenter(ms, 2)
    cand = make_measure(rng.random((4, 2)), rng.random(4))
    assert frechet_value(cand, ms) >= opt - 1e-8


def test_single_repeat_is_the_repeat(rng):
    ms = [uniform(rng, 8) for _ in range(3)]
    cfg = SuaConfig(sample_size=5, repeats=1, seed=4)
    bary, recs = randomized_barycenter(ms, cfg)
    assert len(recs) == 1 and bary.n_atoms == 5


def test_mixture_weights_and_convexity(rng):
    ms = [uniform(rng, 10) for _ in range(3)]
    for seed in range(5):
        cfg = SuaConfig(sample_size=4, repeats=3, seed=seed)
        bary, recs = randomized_barycenter(ms, cfg, evaluate=True)
        assert bary.n_atoms == 12
        np.testing.assert_allclose(bary.weights, 1 / 12)
        assert frechet_value(bary, ms) <= np.mean([r.frechet for r in recs]) + 1e-9


def test_best_of_repeats(rng):
    ms = [uniform(rng, 10) for _ in range(3)]
    cfg = SuaConfig(sample_size=4, repeats=4, seed=0)
    best, recs = randomized_barycenter(ms, cfg, combine="best")
    assert frechet_value(best, ms) == pytest.approx(min(r.frechet for r in recs))


def test_exact_solver_path(rng):
    ms = [make_measure(rng.random((4, 2)), rng.random(4) + 0.1) for _ in range(2)]
    bary, _ = randomized_barycenter(ms, SuaConfig(sample_size=3, seed=1), solver="exact")
    assert frechet_value(bary, ms) >= exact_barycenter(ms, 2)[1] - 1e-8


def test_threads_do_not_change_results(rng):
    ms = [uniform(rng, 12) for _ in range(3)]
    cfg = SuaConfig(sample_size=6, repeats=4, seed=11)
    a, _ = randomized_barycenter(ms, cfg, threads=1)
    b, _ = randomized_barycenter(ms, cfg, threads=4)
    np.testing.assert_array_equal(a.points, b.points)


def test_error_decays_with_sample_size(rng):
    ms = [uniform(rng, 40) for _ in range(3)]
    ref, kind = reference_value(ms)
    assert kind == "sua"
    means = []
    for S in (4, 16, 40):
        recs = sweep(ms, [S], reps=8, seed=2, reference=ref)
        means.append(np.mean([r.rel_err for r in recs]))
    assert means[0] > means[1] > means[2]


def test_reference_uses_lp_when_small(rng):
    ms = [uniform(rng, 3) for _ in range(3)]
    value, kind = reference_value(ms)
    assert kind == "lp"
    assert value == pytest.approx(exact_barycenter(ms, 2)[1])


def test_gap_bound_holds_in_mean():
    rng = np.random.default_rng(7)
    ms = [make_measure(rng.random((3, 2)), rng.random(3) + 0.1) for _ in range(3)]
    _, opt = exact_barycenter(ms, 2)
    S = 4
    gaps = []
    for rep in range(200):
        emp = [sample_empirical(m, S, derive_seed(0, rep, i)) for i, m in enumerate(ms)]
        bary, _ = exact_barycenter(emp, 2)
        gaps.append(abs(frechet_value(bary, ms) - opt))
    assert np.mean(gaps) <= frechet_gap_bound(ms, 2, S)


def test_sweep_single_cell_and_csv(tmp_path, rng):
    ms = [uniform(rng, 6) for _ in range(2)]
    recs = sweep(ms, [3], [1], reps=1, seed=5)
    assert len(recs) == 1
    assert recs[0].rel_err is None and recs[0].frechet >= 0
    path = tmp_path / "r.csv"
    write_records_csv(path, recs)
    back = read_records_csv(path)
    assert back[0].frechet == recs[0].frechet
    assert path.read_text().splitlines()[0] == "S,R,rep,seed,frechet,rel_err,runtime_ms"


def test_sweep_is_deterministic_and_ordered(tmp_path, rng):
    ms = [uniform(rng, 8) for _ in range(3)]
    a = sweep(ms, [4, 2], [2, 1], reps=3, seed=1, threads=1)
    b = sweep(ms, [4, 2], [2, 1], reps=3, seed=1, threads=3)
    assert [(r.S, r.R, r.rep) for r in a] == sorted((r.S, r.R, r.rep) for r in a)
    write_records_csv(tmp_path / "a.csv", a)
    write_records_csv(tmp_path / "b.csv", b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = summarize(a)
    assert len(rows) == 4
    write_summary_csv(tmp_path / "s.csv", rows)
    assert (tmp_path / "s.csv").read_text().startswith("S,R,mean_err,sd_err\n")


def test_seed_derivation():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert len({derive_seed(0, r, i) for r in range(10) for i in range(10)}) == 100
    assert 0 <= derive_seed(123, 4) < 2**63
