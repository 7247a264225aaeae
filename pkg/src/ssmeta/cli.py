"""Command-line front end: ``python -m ssmeta <subcommand> ...``.

Every subcommand prints its result to stdout.  With ``--out`` the same data
is written atomically to that path and a JSON run manifest is written to
``<out>.manifest.json``; without it the manifest goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .encoding import build_design_matrix
from .linreg import ols_fit, run_horizon_regressions
from .mars import MarsConfig, cross_validate, default_cv_grid, fit_mars
from .meta_db import (DUMMY_FIELDS, NUMERIC_FIELDS, SUMMARY_HEADER, DEFAULT_COLUMNS,
                      RangeWarning, load_database, partition_by_horizon, summarize)
from .pdp import partial_dependence
from .report import atomic_write, emit_pdp_artifacts, format_regression_table, pdp_to_csv
from .skill import SolarSeries, read_series, reference_forecast, rmse, score_forecast

DEFAULT_SEED = 20220101
PARTITIONS = {"intra-hour": "intra_hour", "intra-day": "intra_day",
              "day-ahead": "day_ahead", "all": None}


@dataclass
class RunManifest:
    subcommand: str
    inputs: list
    config: dict
    seed: int
    outputs: list = field(default_factory=list)
    tool_version: str = __version__
    started: str = ""
    duration_s: float = 0.0


class CliError(Exception):
    pass


def _sig(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def _load(args):
    column_map = json.loads(args.column_map) if args.column_map else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RangeWarning)
        ds = load_database(args.input, column_map=column_map, delimiter=args.delimiter)
    for w in caught[:20]:
        print(f"warning: {w.message}", file=sys.stderr)
    if len(caught) > 20:
        print(f"warning: ... {len(caught) - 20} more range warnings", file=sys.stderr)
    return ds


def _select(ds, partition):
    key = PARTITIONS[partition]
    if key is None:
        return ds
    part = partition_by_horizon(ds)[key]
    if len(part) == 0:
        raise CliError(f"partition {partition} is empty")
    return part


def _mars_config(args) -> MarsConfig:
    return MarsConfig(max_degree=args.max_degree, max_terms=args.max_terms,
                      min_rsq_gain=args.min_rsq_gain, cv_folds=args.cv_folds,
                      rng_seed=args.seed)


def cmd_ingest(args, out):
    ds = _load(args)
    parts = partition_by_horizon(ds)
    out.append(f"rows\t{ds.row_count}\n")
    out.append(f"rejected\t{len(ds.rejected)}\n")
    for name, part in parts.items():
        out.append(f"{name}\t{len(part)}\n")
    for diag in ds.rejected:
        out.append(f"rejected_row\t{diag}\n")


def cmd_summary(args, out):
    ds = _load(args)
    variables = [args.var] if args.var else [DEFAULT_COLUMNS[f] for f in
                                              sorted(NUMERIC_FIELDS + DUMMY_FIELDS,
                                                     key=lambda f: DEFAULT_COLUMNS[f])]
    digits = 2 if args.precision is None else args.precision
    out.append(SUMMARY_HEADER + "\n")
    for v in variables:
        try:
            stats = summarize(ds, v)
        except (KeyError, TypeError) as exc:
            raise CliError(str(exc)) from None
        out.append(stats.as_row(v, digits) + "\n")


def cmd_ols(args, out):
    ds = _load(args)
    decimals = 3 if args.precision is None else args.precision
    if args.partition == "all":
        fits = run_horizon_regressions(ds)
    else:
        part = _select(ds, args.partition)
        fits = {PARTITIONS[args.partition]: ols_fit(build_design_matrix(part))}
    out.append(format_regression_table(fits, decimals))


def cmd_mars(args, out):
    ds = _select(_load(args), args.partition)
    model = fit_mars(build_design_matrix(ds), _mars_config(args))
    if args.json:
        out.append(model.to_json() + "\n")
    else:
        out.append(model.summary() + "\n")


def cmd_pdp(args, out):
    ds = _select(_load(args), args.partition)
    dm = build_design_matrix(ds)
    model = fit_mars(dm, _mars_config(args))
    features = [f.strip() for f in args.var.split(",") if f.strip()]
    grid = partial_dependence(model, dm, features, n_points=args.points)
    out.append(pdp_to_csv(grid, precision=args.precision or 10))
    return grid


def cmd_cv(args, out):
    ds = _select(_load(args), args.partition)
    base = _mars_config(args)
    grid = [g for g in default_cv_grid(base) if g.max_degree <= args.max_degree]
    best, scores = cross_validate(build_design_matrix(ds), grid)
    digits = 4 if args.precision is None else args.precision
    out.append("max_degree,max_terms,cv_rmse\n")
    for cfg in grid:
        out.append(f"{cfg.max_degree},{cfg.max_terms},{_sig(scores[cfg], digits)}\n")
    out.append(f"best,{best.max_degree},{best.max_terms}\n")


def cmd_ss(args, out):
    series, forecast = read_series(args.series)
    if args.step is not None:
        series = SolarSeries(series.values, args.step, series.clear_sky)
    digits = 4 if args.precision is None else args.precision
    if forecast is None:
        ref, alpha = reference_forecast(series, args.reference, args.h, args.alpha)
        ok = np.isfinite(ref)
        out.append(f"reference: {args.reference}\nhorizon_steps: {args.h}\n")
        if alpha is not None:
            out.append(f"alpha: {_sig(alpha, digits)}\n")
        out.append(f"rmse_reference: {_sig(rmse(series.values[ok], ref[ok]), digits)}\n")
        out.append("skill_score_pct: NA (no forecast column)\n")
        return
    result = score_forecast(series, forecast, args.reference, args.h, args.alpha)
    out.append(result.report(digits))


COMMANDS = {"ingest": cmd_ingest, "summary": cmd_summary, "ols": cmd_ols, "mars": cmd_mars,
            "pdp": cmd_pdp, "cv": cmd_cv, "ss": cmd_ss}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssmeta", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, database=True):
        if database:
            p.add_argument("--input", required=True, help="skill-score database (delimited text)")
            p.add_argument("--delimiter", default=",")
            p.add_argument("--column-map", help='JSON mapping, e.g. {"Horizon": "horizon"}')
            p.add_argument("--partition", choices=PARTITIONS, default="all")
        p.add_argument("--out", help="write the data output here (atomic)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--precision", type=int, default=None,
                       help="digits for numeric output")

    def mars_opts(p):
        p.add_argument("--max-degree", type=int, choices=(1, 2), default=2)
        p.add_argument("--max-terms", type=int, default=34)
        p.add_argument("--min-rsq-gain", type=float, default=0.001)
        p.add_argument("--cv-folds", type=int, default=10)

    common(sub.add_parser("ingest", help="load and validate the database"))
    p = sub.add_parser("summary", help="descriptive statistics per variable")
    common(p)
    p.add_argument("--var", help="variable name (default: all numeric and dummy)")
    common(sub.add_parser("ols", help="regression per horizon class"))
    p = sub.add_parser("mars", help="fit MARS")
    common(p)
    mars_opts(p)
    p.add_argument("--json", action="store_true", help="emit the model as JSON")
    p = sub.add_parser("pdp", help="partial dependence of a MARS fit")
    common(p)
    mars_opts(p)
    p.add_argument("--var", required=True, help="one feature or two, comma separated")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--no-graphic", action="store_true")
    p = sub.add_parser("cv", help="cross-validated MARS grid search")
    common(p)
    mars_opts(p)
    p = sub.add_parser("ss", help="skill score of a forecast series")
    common(p, database=False)
    p.add_argument("--series", required=True,
                   help="timestamp,value[,clear_sky][,forecast] delimited text")
    p.add_argument("--reference", choices=("persistence", "sp", "cp", "climatology"),
                   default="sp")
    p.add_argument("--h", type=int, default=1, help="forecast horizon in steps")
    p.add_argument("--alpha", type=float, default=None, help="fixed CP weight")
    p.add_argument("--step", type=float, default=None, help="step length in minutes")
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    manifest = RunManifest(
        subcommand=args.command,
        inputs=[p for p in (getattr(args, "input", None), getattr(args, "series", None)) if p],
        config={k: v for k, v in vars(args).items() if k not in ("command",)},
        seed=args.seed,
        started=time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
    )
    out: list[str] = []
    try:
        result = COMMANDS[args.command](args, out)
    except (CliError, ValueError, KeyError, TypeError, OSError, ZeroDivisionError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1
    text = "".join(out)
    sys.stdout.write(text)
    if args.out:
        try:
            if args.command == "pdp":
                manifest.outputs = emit_pdp_artifacts(result, args.out,
                                                      graphic=not args.no_graphic)
            else:
                with atomic_write(args.out) as fh:
                    fh.write(text)
                manifest.outputs = [args.out]
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return 1
    manifest.duration_s = round(time.time() - started, 3)
    doc = json.dumps(asdict(manifest), indent=2, sort_keys=True, default=str)
    if args.out:
        with atomic_write(args.out + ".manifest.json") as fh:
            fh.write(doc + "\n")
    else:
        print(doc, file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run_cli())
