"""Command-line interface: ``specdiff compare|cluster|simulate|table1|spectrum|calibrate|normality``.

Every error exits with status 2 and a single stderr line starting ``error:``.
A rejected hypothesis is a result, not an error (exit 0).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import cluster, harness, inference
from .core import FourierGrid, SeriesError, TimeSeries, load_csv, prepare_comparison, write_csv
from .procgen import SimulationError, replication_seed, simulate_pair, zoo
from .spectral import periodogram_on_grid

SEED_ENV = "SPECDIFF_SEED"


class CliError(Exception):
    pass


def _probability(text):
    x = float(text)
    if not 0 < x < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return x


def _positive(text):
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return x


def _positive_int(text):
    x = int(text)
    if x < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return x


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CliError(f"{SEED_ENV}={env!r} is not an integer") from None


def _write(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _parse_params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"parameter override {item!r} must look like name=value")
        if key not in ("phi", "theta", "d", "burn_in", "truncation"):
            raise CliError(f"unknown model parameter {key!r}")
        out[key] = int(value) if key in ("burn_in", "truncation") else float(value)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_compare(args) -> int:
    a = load_csv(args.a, args.column)
    b = load_csv(args.b, args.column)
    inp = prepare_comparison(a, b, center=not args.no_center)
    report = inference.compare(inp, args.alpha, args.epsilon)
    report["labels"] = [inp.short.label, inp.long.label]
    if args.json:
        _write(inference.report_json(report) + "\n", args.out)
        return 0
    lines = [f"{k}: {report[k]}" for k in inference.REPORT_FIELDS]
    if "precise" in report:
        p = report["precise"]
        lines += [f"precise.{k}: {v}" for k, v in p.items()]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_cluster(args) -> int:
    if len(args.files) < 2:
        raise CliError("cluster needs at least two files")
    series = [load_csv(f, args.column) for f in args.files]
    m = cluster.distance_matrix(series, center=not args.no_center)
    tree = cluster.agglomerate(m, args.linkage)
    if args.matrix_out:
        Path(args.matrix_out).write_text(m.to_csv(), encoding="utf-8")
    _write(cluster.export_dendrogram(tree, args.format) + "\n", args.out)
    return 0


def cmd_simulate(args) -> int:
    seed = _seed(args)
    params = _parse_params(args.param)
    model = zoo(args.model, **params)
    if args.pair_model is None:
        other, n2 = model, args.n
    else:
        other = zoo(args.pair_model, **_parse_params(args.pair_param))
        n2 = args.pair_n or args.n
    if n2 < args.n:
        raise CliError("--pair-n must be >= --n (the first series is the shorter one)")
    a, b = simulate_pair(model, other, args.n, n2, args.rho, replication_seed(seed, 0))
    if args.out is None:
        sys.stdout.write("\n".join(repr(float(x)) for x in a.values) + "\n")
    else:
        write_csv(a, args.out)
    if args.pair_model is not None:
        if args.pair_out is None:
            raise CliError("--pair-out is required with --pair-model")
        write_csv(b, args.pair_out)
    return 0


def cmd_table1(args) -> int:
    seed = _seed(args)
    columns = args.columns.split(",") if args.columns else None
    for c in columns or ():
        if c not in harness.TABLE1_COLUMNS:
            raise CliError(f"unknown column {c!r}; choose from {','.join(harness.TABLE1_COLUMNS)}")
    sizes = harness.TABLE1_SIZES
    if args.sizes:
        try:
            sizes = tuple(tuple(int(v) for v in s.split("x")) for s in args.sizes.split(","))
        except ValueError:
            raise CliError(f"--sizes must look like 256x256,256x384; got {args.sizes!r}") from None

    def progress(col, n1, n2):
        if args.verbose:
            print(f"done {col} ({n1},{n2})", file=sys.stderr)

    table = harness.run_table1(seed, args.reps, args.threads, columns, sizes,
                               flip=args.flip, progress=progress)
    if args.out is None:
        sys.stdout.write(table.to_csv())
    else:
        out = Path(args.out)
        out.write_text(table.to_csv(), encoding="utf-8")
        out.with_suffix(".json").write_text(table.to_json() + "\n", encoding="utf-8")
    return 0


def cmd_spectrum(args) -> int:
    x = load_csv(args.file, args.column)
    if not args.no_center:
        x = x.centered()
    n1 = args.grid_n or x.n
    grid = FourierGrid(n1)
    values = periodogram_on_grid(x, grid)
    lines = ["lambda,I"] + [f"{float(lam)!r},{float(v)!r}" for lam, v in zip(grid.frequencies, values)]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_calibrate(args) -> int:
    report = harness.calibrate_sigma_h0(args.reps, args.n, _seed(args))
    _write(report.to_json() + "\n", args.out)
    return 0


def cmd_normality(args) -> int:
    rep = harness.normality_diagnostic(args.model, args.n, args.reps, _seed(args), args.threads)
    _write(json.dumps(rep.__dict__, indent=2) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="specdiff", description="Compare spectral densities of time series "
                "with unequal sample sizes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compare", help="test equality of two spectra")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--alpha", type=_probability, default=0.05)
    c.add_argument("--epsilon", type=_positive, default=None,
                   help="also run the precise-hypothesis test H0: R^2 > epsilon")
    c.add_argument("--no-center", action="store_true", help="do not subtract sample means")
    c.add_argument("--column", default=None, help="CSV column index or header name")
    c.add_argument("--json", action="store_true")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("cluster", help="hierarchical clustering by spectral distance")
    k.add_argument("files", nargs="+")
    k.add_argument("--linkage", choices=cluster.LINKAGES, default="average")
    k.add_argument("--format", choices=("newick", "json"), default="newick")
    k.add_argument("--matrix-out", default=None)
    k.add_argument("--no-center", action="store_true")
    k.add_argument("--column", default=None)
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_cluster)

    s = sub.add_parser("simulate", help="simulate a model series (optionally a coupled pair)")
    s.add_argument("--model", required=True, help="X1..X5")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--param", action="append", help="override, e.g. phi=-0.5")
    s.add_argument("--out", default=None)
    s.add_argument("--pair-model", default=None)
    s.add_argument("--pair-n", type=_positive_int, default=None)
    s.add_argument("--pair-param", action="append")
    s.add_argument("--pair-out", default=None)
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("table1", help="Monte Carlo rejection-frequency table")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--reps", type=_positive_int, default=1000)
    t.add_argument("--out", default=None, help="CSV path; a JSON mirror is written next to it")
    t.add_argument("--threads", type=_positive_int, default=1)
    t.add_argument("--columns", default=None, help="comma-separated subset, e.g. X1,X1X3")
    t.add_argument("--sizes", default=None, help="comma-separated n1xn2 list")
    t.add_argument("--flip", action="store_true", help="put the second-named model at n1")
    t.add_argument("--verbose", action="store_true")
    t.set_defaults(func=cmd_table1)

    sp = sub.add_parser("spectrum", help="dump periodogram on a Fourier grid as CSV")
    sp.add_argument("file")
    sp.add_argument("--grid-n", type=_positive_int, default=None,
                    help="grid size n1 (default: the series length)")
    sp.add_argument("--no-center", action="store_true")
    sp.add_argument("--column", default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_spectrum)

    cal = sub.add_parser("calibrate", help="null-variance calibration run")
    cal.add_argument("--reps", type=_positive_int, default=500)
    cal.add_argument("--n", type=_positive_int, default=4096)
    cal.add_argument("--seed", type=int, default=None)
    cal.add_argument("--out", default=None)
    cal.set_defaults(func=cmd_calibrate)

    nm = sub.add_parser("normality", help="KS check of the null statistic")
    nm.add_argument("--model", default="X1")
    nm.add_argument("--n", type=_positive_int, default=2048)
    nm.add_argument("--reps", type=_positive_int, default=1000)
    nm.add_argument("--seed", type=int, default=None)
    nm.add_argument("--threads", type=_positive_int, default=1)
    nm.add_argument("--out", default=None)
    nm.set_defaults(func=cmd_normality)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (CliError, SeriesError, SimulationError, ValueError, KeyError, OSError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
