"""
Resampling pipeline: draw empirical measures, solve their barycenter, average
the repeats; plus Frechet evaluation and factorial sweeps over (S, R).
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SizeCapError
from .lp_oracle import exact_barycenter
from .measures import DiscreteMeasure, mixture, sample_empirical
from .ot import transport_cost
from .seeding import derive_seed
from .sua import SuaConfig, sua_solve

__all__ = [
    "ExperimentRecord",
    "derive_seed",
    "frechet_value",
    "randomized_barycenter",
    "reference_value",
    "sweep",
    "summarize",
    "write_records_csv",
    "write_summary_csv",
    "read_records_csv",
    "resolve_threads",
]

RECORD_HEADER = ["S", "R", "rep", "seed", "frechet", "rel_err", "runtime_ms"]
SUMMARY_HEADER = ["S", "R", "mean_err", "sd_err"]

# spawn-key slot used for solver randomness, next to the per-measure slots
_SOLVER_SLOT = 1 << 30


@dataclass
class ExperimentRecord:
    S: int
    R: int
    rep: int
    seed: int
    frechet: float | None
    rel_err: float | None
    runtime_ms: float


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("WB_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def frechet_value(mu: DiscreteMeasure, measures: Sequence[DiscreteMeasure],
                  p: float = 2.0, threads: int = 1) -> float:
    """``F^p(mu) = (1/N) sum_i W_p^p(mu_i, mu)`` by exact OT solves."""
    costs = _map(lambda nu: transport_cost(nu, mu, p), list(measures), threads)
    return float(np.mean(costs))


def _solve_repeat(measures, config: SuaConfig, solver: str, p: float,
                  seed: int, r: int):
    S = config.sample_size
    if S is None:
        empirical = list(measures)
    else:
        empirical = [sample_empirical(mu, S, derive_seed(seed, r, i))
                     for i, mu in enumerate(measures)]
    if solver == "sua":
        if p != 2:
            raise ValueError("the SUA solver only supports p = 2")
        return sua_solve(empirical, config, seed=derive_seed(seed, r, _SOLVER_SLOT))
    if solver == "exact":
        return exact_barycenter(empirical, p)
    raise ValueError(f"unknown solver {solver!r}")


def randomized_barycenter(measures: Sequence[DiscreteMeasure],
                          config: SuaConfig | None = None, solver: str = "sua",
                          p: float = 2.0, combine: str = "mean",
                          evaluate: bool = False, threads: int = 1
                          ) -> tuple[DiscreteMeasure, list[ExperimentRecord]]:
    """Resampling approximation of the barycenter.

    For each repeat ``r`` every input is replaced by an empirical measure of
    size ``config.sample_size`` (seeded by ``(config.seed, r, i)``), the
    barycenter of the empirical measures is solved, and the repeats are
    combined.

    Parameters
    ----------
    measures : sequence of DiscreteMeasure
    config : SuaConfig
        ``sample_size``, ``repeats`` and ``seed`` drive the resampling; the
        remaining fields configure the SUA solver.
    solver : {"sua", "exact"}
    combine : {"mean", "best"}
        ``"mean"`` returns the mixture ``(1/R) sum_r bar_mu_r`` (atoms are
        concatenated, each with weight ``1/(R S)``); ``"best"`` returns the
        repeat with the smallest Frechet value (forces ``evaluate``).
    evaluate : bool
        Compute ``F^p`` of every repeat against the full inputs.
    threads : int
        Repeats run in a thread pool; the result does not depend on it.

    Returns
    -------
    barycenter : DiscreteMeasure
    records : list of ExperimentRecord
        One per repeat, ordered by repeat index.
    """
    config = config or SuaConfig()
    evaluate = evaluate or combine == "best"

    def task(r):
        start = time.perf_counter()
        bary, _ = _solve_repeat(measures, config, solver, p, config.seed, r)
        value = frechet_value(bary, measures, p) if evaluate else None
        elapsed = 1e3 * (time.perf_counter() - start)
        return bary, ExperimentRecord(config.sample_size or 0, config.repeats,
                                      r, config.seed, value, None, elapsed)

    results = _map(task, list(range(config.repeats)), threads)
    barys = [b for b, _ in results]
    records = [rec for _, rec in results]
    if combine == "mean":
        out = barys[0] if len(barys) == 1 else mixture(barys)
    elif combine == "best":
        out = barys[int(np.argmin([rec.frechet for rec in records]))]
    else:
        raise ValueError(f"unknown combine rule {combine!r}")
    return out, records


def reference_value(measures: Sequence[DiscreteMeasure], p: float = 2.0,
                    restarts: int = 10, seed: int = 0) -> tuple[float, str]:
    """Best available value of ``min F^p`` and how it was obtained.

    Uses the exact LP when it fits under the size cap (label ``"lp"``);
    otherwise, for uniform inputs of equal size, SUA on the full data with
    ``restarts`` restarts (label ``"sua"``).
    """
    try:
        return exact_barycenter(measures, p)[1], "lp"
    except SizeCapError:
        pass
    sizes = {m.n_atoms for m in measures}
    if p != 2 or len(sizes) != 1 or not all(m.is_uniform() for m in measures):
        raise SizeCapError(
            "no reference available: LP too large and inputs not uniform "
            "with equal size")
    _, value = sua_solve(measures, SuaConfig(restarts=restarts, seed=seed))
    return value, "sua"


def sweep(measures: Sequence[DiscreteMeasure], S_list: Sequence[int],
          R_list: Sequence[int] = (1,), reps: int = 1, seed: int = 0,
          p: float = 2.0, reference: float | None = None,
          config: SuaConfig | None = None, solver: str = "sua",
          threads: int = 1) -> list[ExperimentRecord]:
    """Full factorial experiment over sample sizes and repeat counts.

    Every ``(S, R, rep)`` cell gets its own derived seed, so the records do
    not depend on ``threads``. ``rel_err`` is filled when ``reference`` is
    given.
    """
    base = config or SuaConfig()
    cells = [(S, R, rep) for S in S_list for R in R_list for rep in range(reps)]

    def task(cell):
        S, R, rep = cell
        cell_seed = derive_seed(seed, S, R, rep)
        cfg = base.with_(sample_size=S, repeats=R, seed=cell_seed)
        start = time.perf_counter()
        bary, _ = randomized_barycenter(measures, cfg, solver=solver, p=p)
        value = frechet_value(bary, measures, p)
        elapsed = 1e3 * (time.perf_counter() - start)
        rel = None if reference is None else (value - reference) / reference
        return ExperimentRecord(S, R, rep, cell_seed, value, rel, elapsed)

    records = _map(task, cells, threads)
    records.sort(key=lambda rec: (rec.S, rec.R, rec.rep))
    return records


def summarize(records: Sequence[ExperimentRecord]) -> list[tuple[int, int, float, float]]:
    """Mean and sample standard deviation of the error per ``(S, R)`` cell.

    Uses ``rel_err`` when present, else the raw Frechet value.
    """
    cells: dict[tuple[int, int], list[float]] = {}
    for rec in records:
        err = rec.rel_err if rec.rel_err is not None else rec.frechet
        cells.setdefault((rec.S, rec.R), []).append(err)
    rows = []
    for (S, R), errs in sorted(cells.items()):
        errs = np.asarray(errs, dtype=float)
        sd = float(errs.std(ddof=1)) if errs.size > 1 else 0.0
        rows.append((S, R, float(errs.mean()), sd))
    return rows


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_records_csv(path, records: Sequence[ExperimentRecord],
                      include_timing: bool = False) -> None:
    """Write one row per repeat.

    ``runtime_ms`` is left empty unless ``include_timing`` is set, so that
    reruns with the same seed produce identical bytes.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_HEADER)
        for rec in records:
            writer.writerow([rec.S, rec.R, rec.rep, rec.seed, _fmt(rec.frechet),
                             _fmt(rec.rel_err),
                             f"{rec.runtime_ms:.3f}" if include_timing else ""])


def write_summary_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for S, R, mean, sd in rows:
            writer.writerow([S, R, repr(mean), repr(sd)])


def read_records_csv(path) -> list[ExperimentRecord]:
    def opt(x):
        return float(x) if x != "" else None

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [ExperimentRecord(int(r["S"]), int(r["R"]), int(r["rep"]),
                                 int(r["seed"]), opt(r["frechet"]),
                                 opt(r["rel_err"]),
                                 opt(r["runtime_ms"]) or 0.0)
                for r in reader]
