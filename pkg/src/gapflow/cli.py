"""Command line entry point: ``gapflow <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
``GAPFLOW_THREADS`` caps the number of worker threads used for per-L fits.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .diagnostics import density_table, ks_gof, renewal_test
from .distributions import Family
from .errors import DataError, DomainError, FitError, NumericError
from .estimation import (
    FitReport,
    OptimizerOptions,
    build_model_from_headway_fits,
    fit_headways,
    select_L,
)
from .io import (
    load_model,
    model_to_dict,
    read_arrivals,
    read_gaps,
    save_json,
    write_arrivals,
    write_gaps,
)
from .simulation import gaps_from_arrivals, simulate_arrivals

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _parse_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad L range {text!r}; use e.g. 1..5") from None
    if lo < 1 or hi < lo:
        raise UsageError(f"bad L range {text!r}")
    return list(range(lo, hi + 1))


def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use start:stop:step") from None
    if step <= 0 or stop < start or start < 0:
        raise UsageError(f"bad grid {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _threads() -> int:
    raw = os.environ.get("GAPFLOW_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"GAPFLOW_THREADS={raw!r} is not an integer") from None


def _options(args) -> OptimizerOptions:
    return OptimizerOptions(n_starts=args.starts, seed=args.seed, n_jobs=_threads())


def _fmt(x) -> str:
    return "nan" if x is None or not math.isfinite(x) else f"{x:.3f}"


# -- subcommands -----------------------------------------------------------


def cmd_gaps(args, out):
    timeline = read_arrivals(args.arrivals, sort=args.sort)
    sample = gaps_from_arrivals(timeline)
    write_gaps(sample.gaps, args.out)
    print(
        f"{sample.n_arrivals} arrivals -> {len(sample)} gaps "
        f"(mean {_fmt(sample.gaps.mean())} s, {sample.n_zero} zero)",
        file=out,
    )


def cmd_fit(args, out):
    Ls = _parse_range(args.L_range)
    opts = _options(args)
    family = Family.parse(args.family)
    gaps = read_gaps(args.gaps)
    best, table = select_L(gaps, family, Ls, opts)
    doc = {
        "schema_version": 1,
        "kind": "fit",
        "best_L": best.L,
        "best": best.to_dict(),
        "table": {
            str(L): (r.to_dict() if isinstance(r, FitReport) else {"error": str(r)})
            for L, r in sorted(table.items())
        },
        "model": model_to_dict(best.model, {"source": "fit", "gaps": str(args.gaps), "L": best.L}),
    }
    save_json(doc, args.out)
    print(f"{'L':>3} {'loglik':>12} {'AIC':>12}", file=out)
    for L, r in sorted(table.items()):
        if isinstance(r, FitReport):
            mark = " *" if L == best.L else ""
            print(f"{L:>3} {_fmt(r.max_loglik):>12} {_fmt(r.aic):>12}{mark}", file=out)
        else:
            print(f"{L:>3} failed: {r}", file=out)
    print(best.summary(), file=out)


def cmd_fit_headways(args, out):
    opts = _options(args)
    timeline = read_arrivals(args.arrivals, sort=args.sort)
    if timeline.merged:
        raise DataError("headway fitting needs a lane column; disorderly streams have no headways")
    family = Family.parse(args.family)
    reports = {}
    for lane in timeline.lanes:
        reports[lane] = fit_headways(timeline.headways(lane), family, opts)
    model = build_model_from_headway_fits(list(reports.values()))
    doc = {
        "schema_version": 1,
        "kind": "headway_fit",
        "lanes": {str(lane): r.to_dict() for lane, r in reports.items()},
        "model": model_to_dict(model, {"source": "fit-headways", "arrivals": str(args.arrivals)}),
    }
    save_json(doc, args.out)
    for lane, r in reports.items():
        print(f"lane {lane}: " + r.summary().replace("\n", "\n  "), file=out)


def cmd_eval(args, out):
    grid = _parse_grid(args.grid)
    model = load_model(args.model)
    pdf = model.pdf(grid)
    cdf = model.cdf(grid)
    with open(args.out, "w") as fh:
        fh.write("g,pdf,cdf\n")
        for row in zip(grid, pdf, cdf):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"evaluated L={model.L} model at {grid.size} points; mean gap {_fmt(model.mean_gap)} s", file=out)


def cmd_simulate(args, out):
    model = load_model(args.model)
    timeline = simulate_arrivals(model, args.horizon, args.seed, args.warmup, args.resolution)
    write_arrivals(timeline, args.out)
    sample = gaps_from_arrivals(timeline)
    if args.gaps_out:
        write_gaps(sample.gaps, args.gaps_out)
    print(f"{timeline.n_arrivals} arrivals, {len(sample)} gaps (mean {_fmt(sample.gaps.mean())} s)", file=out)


def cmd_renewal_test(args, out):
    gaps = read_gaps(args.gaps)
    if args.subsets > 1:
        chunks = np.array_split(gaps, args.subsets)
        results = [renewal_test(c, args.alpha) for c in chunks]
        rejected = sum(r.reject for r in results)
        for i, r in enumerate(results, 1):
            print(f"subset {i}: n={r.n} z={_fmt(r.statistic)} p={_fmt(r.p_value)} reject={r.reject}", file=out)
        print(f"{rejected}/{len(results)} subsets rejected at alpha={args.alpha}", file=out)
        doc = {"alpha": args.alpha, "subsets": [vars_result(r) for r in results]}
    else:
        r = renewal_test(gaps, args.alpha)
        print(f"{r.method}: n={r.n} z={_fmt(r.statistic)} p={_fmt(r.p_value)} reject={r.reject}", file=out)
        doc = vars_result(r)
    if args.out:
        save_json(doc, args.out)


def vars_result(r):
    return {
        "statistic": r.statistic,
        "p_value": r.p_value,
        "n": r.n,
        "method": r.method,
        "alpha": r.alpha,
        "reject": r.reject,
    }


def cmd_gof(args, out):
    gaps = read_gaps(args.gaps)
    pos = gaps[gaps > 0]
    res = ks_gof(pos, load_model(args.model))
    print(f"KS D={res.ks_statistic:.4f} p={res.p_value:.4g} n={res.n}", file=out)
    if args.out:
        save_json({"ks_statistic": res.ks_statistic, "p_value": res.p_value, "n": res.n}, args.out)


def cmd_density(args, out):
    gaps = read_gaps(args.gaps)
    table = density_table(gaps, load_model(args.model), args.bins, args.g_max)
    if args.out:
        table.to_csv(args.out)
    else:
        print("bin_center,empirical_density,model_pdf", file=out)
        for row in table.rows():
            print(",".join(repr(float(v)) for v in row), file=out)
    if table.mass_beyond:
        print(f"# {table.mass_beyond:.4f} of the sample lies beyond g_max", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gapflow", description="Gap distributions of superposed renewal traffic streams.")
    p.add_argument("--version", action="version", version=f"gapflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common_fit(sp):
        sp.add_argument("--family", default="gamma", choices=[f.value for f in Family])
        sp.add_argument("--starts", type=int, default=8, help="optimizer restarts")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("gaps", help="arrivals CSV -> gaps CSV")
    sp.add_argument("--arrivals", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--sort", action="store_true", help="sort out-of-order times instead of failing")
    sp.set_defaults(func=cmd_gaps)

    sp = sub.add_parser("fit", help="fit the gap model, choosing L by AIC")
    sp.add_argument("--gaps", required=True)
    sp.add_argument("--L-range", "--L", dest="L_range", default="1", help="e.g. 2 or 1..5")
    sp.add_argument("--out", required=True)
    common_fit(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("fit-headways", help="fit lane headways and superpose them")
    sp.add_argument("--arrivals", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--sort", action="store_true")
    common_fit(sp)
    sp.set_defaults(func=cmd_fit_headways)

    sp = sub.add_parser("eval", help="tabulate gap pdf and cdf on a grid")
    sp.add_argument("--model", required=True)
    sp.add_argument("--grid", default="0:10:0.05", help="start:stop:step in seconds")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("simulate", help="generate lane-wise arrivals from a model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--horizon", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--warmup", type=float, default=None)
    sp.add_argument("--resolution", type=float, default=None, help="round times to this step")
    sp.add_argument("--out", required=True)
    sp.add_argument("--gaps-out", default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("renewal-test", help="serial-independence check of gaps")
    sp.add_argument("--gaps", required=True)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--subsets", type=int, default=1, help="split into this many disjoint runs")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_renewal_test)

    sp = sub.add_parser("gof", help="Kolmogorov-Smirnov test against a model")
    sp.add_argument("--gaps", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gof)

    sp = sub.add_parser("density", help="histogram density next to the model pdf")
    sp.add_argument("--gaps", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--bins", type=int, default=60)
    sp.add_argument("--g-max", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_density)
    return p


def run_cli(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        args.func(args, out)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DomainError) as exc:
        print(f"gapflow: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FitError as exc:
        print(f"gapflow: fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NumericError as exc:
        print(f"gapflow: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    return EXIT_OK


def main():
    sys.exit(run_cli())
