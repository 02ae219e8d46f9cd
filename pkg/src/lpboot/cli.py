"""Command-line entry point: ``lpboot run | infer | plot-data``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .bootstrap import BootPipelineConfig, run_lp_bootstrap
from .errors import InvalidInputError, InvalidSpecError, LpBootError, PipelineError, SingularDesignError
from .experiment import list_fixtures, run_experiment
from .metrics import fmt
from .plotdata import IRF_BAND_COLUMNS, emit_plot_data, irf_band_rows, rows_to_csv
from .regress import default_p_max, select_lag_sbic
from .resample import ResampleScheme, default_block_length

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL = 0, 2, 3
MISSING = {"", "na", "nan", "null", "none", "."}


def read_column(path, column: str) -> np.ndarray:
    """Numeric column of a CSV file; missing or non-numeric cells are errors."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise InvalidInputError(f"column {column!r} not found in {path}")
        values = []
        for i, row in enumerate(reader, start=2):
            cell = (row[column] or "").strip()
            if cell.lower() in MISSING:
                raise InvalidInputError(f"missing value in column {column!r} at line {i}")
            try:
                x = float(cell)
            except ValueError:
                raise InvalidInputError(f"non-numeric value {cell!r} in column {column!r} at line {i}") from None
            if not math.isfinite(x):
                raise InvalidInputError(f"non-finite value in column {column!r} at line {i}")
            values.append(x)
    return np.array(values)


def infer(args) -> int:
    y = read_column(args.csv, args.column)
    T = y.size
    if T < 2 or np.ptp(y) == 0:
        raise SingularDesignError(f"column {args.column!r} is constant; the lag regressions are singular", float("inf"))
    if not args.no_demean:
        y = y - y.mean()
    if args.p == "sbic":
        p_max = default_p_max(T)
        if T <= p_max + 10:
            raise InvalidInputError(f"series of length {T} is too short to select lags up to {p_max}")
        p = select_lag_sbic(y, p_max)
    else:
        p = int(args.p)
        if p < 1:
            raise InvalidInputError("--p must be 'sbic' or a positive integer")
    if T <= p + args.H + 10:
        raise InvalidInputError(f"series of length {T} is too short for p={p} and H={args.H} (need more than {p + args.H + 10})")
    l = default_block_length(args.H, args.block_rule) if args.scheme in ("bwb", "bb") else 1
    cfg = BootPipelineConfig(
        method=args.method,
        B=args.B,
        alpha=args.alpha,
        scheme=ResampleScheme(args.scheme, l, args.weight_law),
    )
    res = run_lp_bootstrap(y, p, args.H, cfg, args.seed)
    records = res.records()
    print(f"# column={args.column} T={T} p={p} H={args.H} method={res.method} scheme={args.scheme} B={args.B} alpha={fmt(args.alpha)} seed={args.seed}")
    if res.fallback:
        print(f"# note: {'; '.join(res.warnings)}")
    header = ("horizon", "point", "lo_t", "hi_t", "lo_efron", "hi_efron")
    print("".join(f"{h:>12}" for h in header))
    for r in records:
        print("".join(f"{fmt(r[k]):>12}" for k in header))
    print(f"# failed replicates: {res.n_failures}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.column
    meta = dict(column=args.column, T=T, p=p, H=args.H, method=res.method, scheme=args.scheme, B=args.B, alpha=args.alpha, seed=args.seed, fallback=res.fallback)
    (out / f"{stem}_infer.json").write_text(json.dumps({"meta": meta, "records": records}, indent=1) + "\n", encoding="utf-8")
    (out / f"{stem}_band.csv").write_text(rows_to_csv(irf_band_rows(records), IRF_BAND_COLUMNS), encoding="utf-8")
    return EXIT_OK


def run(args) -> int:
    outcome = run_experiment(args.spec, args.out, workers=args.workers, paper_scale=args.paper_scale)
    m = outcome.manifest
    print(f"wrote {', '.join(sorted(m['artifacts']))} and manifest.json to {outcome.out_dir} in {m['wall_clock_seconds']} s")
    if outcome.exit_code:
        print(f"some replications failed; see {outcome.out_dir / 'failures.json'}", file=sys.stderr)
    return outcome.exit_code


def plot_data(args) -> int:
    text = emit_plot_data(args.result, args.kind)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpboot", description="Local-projection impulse responses with MA bootstrap intervals.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a Monte Carlo experiment spec")
    r.add_argument("spec", help=f"spec file or fixture name ({', '.join(list_fixtures())})")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--workers", type=_positive_int, default=None, help="worker processes (default: $LPBOOT_WORKERS or 1)")
    r.add_argument("--paper-scale", action="store_true", help="use B=999 bootstrap replicates")
    r.set_defaults(func=run)

    i = sub.add_parser("infer", help="bootstrap intervals for one CSV column")
    i.add_argument("csv")
    i.add_argument("--column", required=True)
    i.add_argument("--p", default="sbic", help="'sbic' or a fixed lag order")
    i.add_argument("--H", type=int, required=True, help="largest response horizon")
    i.add_argument("--method", type=int, choices=(1, 2), default=1)
    i.add_argument("--scheme", choices=("bwb", "wild", "iid", "bb"), default="bwb")
    i.add_argument("--block-rule", choices=("H", "1.5H"), default="H")
    i.add_argument("--weight-law", choices=("rademacher", "normal"), default="rademacher")
    i.add_argument("--B", type=int, default=999)
    i.add_argument("--alpha", type=float, default=0.10)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--no-demean", action="store_true", help="do not subtract the sample mean first")
    i.add_argument("--out", default=".", help="directory for the JSON and plot-data files")
    i.set_defaults(func=infer)

    d = sub.add_parser("plot-data", help="emit long-format CSV for plotting")
    d.add_argument("result", help="inference JSON (irf-band) or run directory / metrics.csv (coverage-bars)")
    d.add_argument("--kind", choices=("irf-band", "coverage-bars"), required=True)
    d.add_argument("--out", default=None, help="file to write (default: stdout)")
    d.set_defaults(func=plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "H", 0) is not None and getattr(args, "H", 0) < 0:
        parser.error("--H must be non-negative")
    try:
        return args.func(args)
    except (InvalidSpecError, InvalidInputError, SingularDesignError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except LpBootError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
