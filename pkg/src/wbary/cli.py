"""Command line interface (``wb``)."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bounds, datasets, lp_oracle, measures, ot, pipeline
from .errors import WbaryError
from .sua import SuaConfig, parse_schedule


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("parameters look like key=value")
    parts = [float(v) for v in value.split(",")]
    return key, parts[0] if len(parts) == 1 else tuple(parts)


def _load_all(paths) -> list[measures.DiscreteMeasure]:
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    if not files:
        raise UsageError("no input measures given")
    loaded = []
    for f in files:
        mu = measures.load_measure_csv(f)
        if mu.original_mass is not None:
            print(f"warning: {f} weights summed to {mu.original_mass!r}; renormalised",
                  file=sys.stderr)
        loaded.append(mu)
    return loaded


def _sua_config(args, sample_size=None, repeats=1) -> SuaConfig:
    return SuaConfig(sample_size=sample_size, repeats=repeats,
                     step=parse_schedule(args.step),
                     warmstart_steps=args.warmstart_steps, max_iters=args.max_iter,
                     tol=args.tol, restarts=args.restarts, seed=args.seed)


# -- subcommands ------------------------------------------------------------

def cmd_gen(args):
    spec = datasets.DatasetSpec(args.family, N=args.N, M=args.M, seed=args.seed,
                                params=dict(args.param))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, mu in enumerate(datasets.generate(spec)):
        measures.save_measure_csv(out / f"mu_{i:03d}.csv", mu)
    print(f"wrote {spec.N} measures to {out}")


def cmd_sample(args):
    mu = measures.load_measure_csv(args.input)
    emp = measures.sample_empirical(mu, args.S, args.seed)
    measures.save_measure_csv(args.out, emp)
    print(f"wrote {args.S} draws to {args.out}")


def cmd_ot(args):
    mu = measures.load_measure_csv(args.a)
    nu = measures.load_measure_csv(args.b)
    cost = ot.transport_cost(mu, nu, args.p)
    print(f"cost {cost!r}")
    print(f"distance {max(cost, 0.0) ** (1.0 / args.p)!r}")


def cmd_bary(args):
    inputs = _load_all(args.inputs)
    if args.method == "exact":
        if args.S is not None or args.R is not None:
            raise UsageError("bary exact does not take --S or --R")
        bary, value = lp_oracle.exact_barycenter(inputs, args.p)
    else:
        config = _sua_config(args, args.S, args.R or 1)
        bary, records = pipeline.randomized_barycenter(
            inputs, config, solver="sua", p=args.p, combine=args.combine,
            threads=pipeline.resolve_threads(args.threads))
        value = pipeline.frechet_value(bary, inputs, args.p)
    print(f"frechet {value!r}")
    print(f"atoms {bary.n_atoms}")
    if args.out:
        measures.save_measure_csv(args.out, bary)
        print(f"wrote {args.out}")


def cmd_frechet(args):
    mu = measures.load_measure_csv(args.candidate)
    inputs = _load_all(args.inputs)
    print(f"frechet {pipeline.frechet_value(mu, inputs, args.p)!r}")


def cmd_bound(args):
    inputs = _load_all(args.inputs)
    report = bounds.bound_report(inputs, args.p, args.S)
    for key, value in report.as_dict().items():
        if value is not None:
            print(f"{key},{value!r}" if isinstance(value, float) else f"{key},{value}")


def cmd_sweep(args):
    if args.inputs:
        inputs = _load_all(args.inputs)
    elif args.family:
        spec = datasets.DatasetSpec(args.family, N=args.N, M=args.M, seed=args.seed)
        inputs = datasets.generate(spec)
    else:
        raise UsageError("sweep needs --family or input measures")
    reference, kind = None, None
    if not args.no_reference:
        reference, kind = pipeline.reference_value(inputs, args.p, seed=args.seed)
        print(f"reference {reference!r} ({kind})")
    records = pipeline.sweep(inputs, args.S, args.R, reps=args.reps, seed=args.seed,
                             p=args.p, reference=reference,
                             config=_sua_config(args),
                             threads=pipeline.resolve_threads(args.threads))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    pipeline.write_records_csv(out, records, include_timing=args.timing)
    summary = Path(args.summary) if args.summary else out.with_name(out.stem + "_summary.csv")
    pipeline.write_summary_csv(summary, pipeline.summarize(records))
    print(f"wrote {out} and {summary}")


def _svg_scatter(mu, size=400) -> str:
    pts = mu.points[:, :2]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max((hi - lo).max(), 1e-12))
    xy = (pts - lo) / span * (size - 20) + 10
    r = 1.0 + 6.0 * np.sqrt(mu.weights / mu.weights.max())
    circles = "\n".join(
        f'<circle cx="{x:.2f}" cy="{size - y:.2f}" r="{s:.2f}"/>'
        for (x, y), s in zip(xy, r))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">\n'
            f'<rect width="100%" height="100%" fill="white"/>\n'
            f'<g fill="black" fill-opacity="0.6">\n{circles}\n</g>\n</svg>\n')


def cmd_render(args):
    mu = measures.load_measure_csv(args.input)
    if args.svg:
        Path(args.svg).write_text(_svg_scatter(mu), encoding="utf-8")
        print(f"wrote {args.svg}")
    if args.pgm:
        raster, n_clamped = datasets.to_image(mu, args.G)
        if n_clamped:
            print(f"warning: {n_clamped} atoms clamped to the image border",
                  file=sys.stderr)
        datasets.write_pgm(args.pgm, raster)
        print(f"wrote {args.pgm}")
    if not (args.svg or args.pgm):
        raise UsageError("render needs --svg and/or --pgm")


def cmd_lpsize(args):
    if args.grid is None and args.sizes is None:
        raise UsageError("lpsize needs --grid or --sizes")
    n_vars, n_cons = lp_oracle.lp_size_estimate(args.n, sizes=args.sizes,
                                                grid=args.grid, p=args.p)
    print(f"variables {n_vars}")
    print(f"constraints {n_cons}")
    print(f"variables_log10 {len(str(n_vars)) - 1}")
    print(f"constraints_log10 {len(str(n_cons)) - 1}")


# -- parser ------------------------------------------------------------------

def _add_solver_flags(sp):
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.add_argument("--warmstart-steps", type=int, default=None,
                    help="single-measure warmstart steps (default 2N)")
    sp.add_argument("--step", default="constant:0.5",
                    help="step schedule: constant:a or harmonic:a,b")
    sp.add_argument("--restarts", type=int, default=1)
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads (default $WB_THREADS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wb", description="Resampled Wasserstein barycenters and exact oracles.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)
    add = lambda name, **kw: sub.add_parser(name, parents=[common], **kw)  # noqa: E731

    sp = add("gen", help="generate a synthetic family")
    sp.add_argument("--family", required=True, choices=datasets.FAMILIES)
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--M", type=int, default=100)
    sp.add_argument("--param", type=_param, action="append", default=[],
                    help="override a family parameter, e.g. radius=0.1,0.2")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_gen)

    sp = add("sample", help="draw an empirical measure")
    sp.add_argument("input")
    sp.add_argument("--S", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sample)

    sp = add("ot", help="exact transport cost between two measures")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--p", type=float, default=2.0)
    sp.set_defaults(func=cmd_ot)

    sp = add("bary", help="barycenter by exact LP or resampled SUA")
    sp.add_argument("method", choices=("exact", "sua"))
    sp.add_argument("inputs", nargs="+", help="measure CSVs or directories")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--S", type=int, default=None)
    sp.add_argument("--R", type=int, default=None)
    sp.add_argument("--combine", choices=("mean", "best"), default="mean")
    sp.add_argument("--out")
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_bary)

    sp = add("frechet", help="Frechet functional of a candidate")
    sp.add_argument("candidate")
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--p", type=float, default=2.0)
    sp.set_defaults(func=cmd_frechet)

    sp = add("bound", help="error bounds for given measures")
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--S", type=int, required=True)
    sp.set_defaults(func=cmd_bound)

    sp = add("sweep", help="factorial experiment over S and R")
    sp.add_argument("inputs", nargs="*")
    sp.add_argument("--family", choices=datasets.FAMILIES)
    sp.add_argument("--N", type=int, default=5)
    sp.add_argument("--M", type=int, default=64)
    sp.add_argument("--S", type=_int_list, required=True)
    sp.add_argument("--R", type=_int_list, default=[1])
    sp.add_argument("--reps", type=int, default=10)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--no-reference", action="store_true",
                    help="skip the reference value; rel_err stays empty")
    sp.add_argument("--timing", action="store_true",
                    help="fill runtime_ms (makes the CSV run-dependent)")
    sp.add_argument("--out", default="sweep.csv")
    sp.add_argument("--summary", default=None)
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = add("render", help="PGM heatmap and/or SVG scatter")
    sp.add_argument("input")
    sp.add_argument("--G", type=int, default=256, help="raster side")
    sp.add_argument("--pgm")
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_render)

    sp = add("lpsize", help="size of the exact barycenter LP")
    sp.add_argument("--n", type=int, required=True, help="number of measures")
    sp.add_argument("--grid", type=int, default=None, help="grid side")
    sp.add_argument("--sizes", type=_int_list, default=None,
                    help="support sizes, general position")
    sp.add_argument("--p", type=float, default=2.0)
    sp.set_defaults(func=cmd_lpsize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    print(f"seed {args.seed}")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"wb: error: {exc}", file=sys.stderr)
        return 2
    except WbaryError as exc:
        print(f"wb: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"wb: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
