"""Command-line front end.

Subcommands: ``tables`` (order-statistic tables), ``fit`` (criterion-based
order selection on a dataset CSV), ``simulate`` (Monte Carlo experiments)
and ``generate`` (write a synthetic dataset CSV).

Dataset CSV: header ``y,x1,...,xk`` followed by one decimal row per
observation, no missing values. Report numbers carry 12 significant digits.

Exit codes: 0 success, 2 invalid arguments or input, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .criteria import MODES, AdaptiveCorrection, aic_criterion, select_order, sric
from .errors import DatasetFormatError, DomainError, OrthogonalityError, QuadratureError, TableTooShortError
from .order_stats import DEFAULT_TOL, OrderStatCache, OrderStatProvider, expected_order_stat_table
from .regression import Dataset, greedy_subset_path
from .simulation import (
    CRITERIA,
    DEFAULT_NS,
    ExperimentConfig,
    TrueModelSpec,
    generate_dataset,
    run_bias_experiment,
    run_correction_experiment,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("sric")


class UsageError(Exception):
    pass


def _fmt(v):
    return format(float(v), ".12g")


def _num(v):
    v = float(v)
    return float(format(v, ".12g")) if math.isfinite(v) else None


def _int_list(text):
    try:
        values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("values must be positive integers")
    return values


def _criteria_list(text):
    values = [p.strip() for p in text.split(",") if p.strip()]
    bad = [v for v in values if v not in CRITERIA]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown criteria {bad}; choose from {','.join(CRITERIA)}")
    return tuple(values)


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_manifest(out_dir, subcommand, params, seed, outputs):
    """Outputs are recorded relative to ``out_dir`` so a manifest does not depend on where it was written."""
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "parameters": params,
        "seed": seed,
        "outputs": [os.path.relpath(p, out_dir) for p in outputs],
    }
    path = os.path.join(out_dir, "manifest.json")
    _write_text(path, json.dumps(manifest, indent=2) + "\n")
    return path


def _open_cache(path):
    return OrderStatCache(path) if path else None


# -- dataset CSV ------------------------------------------------------------


def read_dataset_csv(path):
    """Parse ``y,x1,...,xk``; returns ``(y, X)``. Errors name the row and column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file")
        header = [h.strip() for h in header]
        k = len(header) - 1
        expected = ["y"] + [f"x{j}" for j in range(1, k + 1)]
        if k < 1 or header != expected:
            raise DatasetFormatError(f"{path}: header must be y,x1,...,xk; got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != k + 1:
                raise DatasetFormatError(f"{path}: row {lineno}: expected {k + 1} fields, got {len(row)}")
            values = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetFormatError(f"{path}: row {lineno}, column {col}: not a number: {cell!r}")
                if not math.isfinite(v):
                    raise DatasetFormatError(f"{path}: row {lineno}, column {col}: non-finite value")
                values.append(v)
            rows.append(values)
    if len(rows) < 2:
        raise DatasetFormatError(f"{path}: need at least two observations")
    data = np.array(rows)
    return data[:, 0], data[:, 1:]


def write_dataset_csv(path, y, X):
    """Write with 17 significant digits so a re-read reproduces the data exactly."""
    k = X.shape[1]
    lines = [",".join(["y"] + [f"x{j}" for j in range(1, k + 1)])]
    for yi, row in zip(y, X):
        lines.append(",".join(format(float(v), ".17g") for v in (yi, *row)))
    _write_text(path, "\n".join(lines) + "\n")


# -- subcommands ------------------------------------------------------------


def cmd_tables(args):
    cache = _open_cache(args.cache)
    out_dir = args.out
    outputs = []
    for k in args.k:
        r_max = min(args.rmax, k) if args.rmax else k
        tab = expected_order_stat_table(k, r_max, args.df, args.tol, cache=cache, threads=args.threads)
        lines = ["r,expectation,cumulative"]
        for r in range(1, r_max + 1):
            lines.append(f"{r},{_fmt(tab.expectation(r))},{_fmt(tab.cumulative(r))}")
        path = os.path.join(out_dir, f"table_df{args.df}_k{k}.csv")
        _write_text(path, "\n".join(lines) + "\n")
        outputs.append(path)
    if cache is not None:
        cache.save()
    params = {"k": args.k, "rmax": args.rmax, "df": args.df, "tol": args.tol}
    _write_manifest(out_dir, "tables", params, None, outputs)
    for p in outputs:
        print(p)
    return EXIT_OK


def cmd_fit(args):
    y, X = read_dataset_csv(args.dataset)
    if args.orthogonalize:
        dataset = Dataset.orthogonalized(y, X)
    else:
        dataset = Dataset(y, X)
        if not dataset.orthonormal:
            r = dataset.report
            raise OrthogonalityError(
                "design is not orthonormal "
                f"(max |mean| {r.max_abs_mean:.3g}, max |meansq-1| {r.max_meansq_dev:.3g}, "
                f"max |offdiag| {r.max_offdiag:.3g}); rerun with --orthogonalize"
            )
    k = dataset.k
    m_max = min(k, args.mmax) if args.mmax else min(k, 100)
    path = greedy_subset_path(dataset, m_max)
    cache = _open_cache(args.cache)
    provider = OrderStatProvider(df=1, tol=args.tol, cache=cache, threads=args.threads)

    report = {
        "dataset": os.path.basename(args.dataset),
        "N": dataset.N,
        "k": k,
        "criterion": args.criterion,
        "orthogonality": {key: (_num(v) if isinstance(v, float) else v) for key, v in dataset.report.as_dict().items()},
        "orthogonalized": bool(args.orthogonalize),
        "ranking": [int(i) + 1 for i in path.ranking],
        "coefficients": [_num(v) for v in path.coefficients],
        "orders": list(range(m_max + 1)),
        "loglik": [_num(v) for v in path.loglik],
    }
    if args.criterion == "aic":
        res = aic_criterion(path)
    elif args.criterion == "sric":
        res = sric(path, k, provider.table(k, m_max))
    else:
        corr = AdaptiveCorrection(k, m_max, provider, args.mode, args.scale, args.tol)
        trace = corr.trace(path)
        res = select_order(path, trace, dataset.N)
        report["mode"] = args.mode
        report["adaptive"] = {
            "increments": [_num(v) for v in trace.increments],
            "alpha": [_num(v) for v in trace.alpha],
            "w": [_num(v) for v in trace.w],
            "penalty": [_num(v) for v in trace.penalty],
            "corrected_loglik": [_num(v) for v in trace.corrected_loglik],
        }
    if cache is not None:
        cache.save()
    report["criterion_values"] = [_num(v) for v in res.values]
    report["selected_order"] = res.selected_order
    report["selected_indices"] = [int(i) + 1 for i in path.ranking[: res.selected_order]]
    report["safeguard_applied"] = bool(res.safeguard_applied)
    text = json.dumps(report, indent=2) + "\n"
    if not args.out:
        sys.stdout.write(text)
        return EXIT_OK
    path = os.path.join(args.out, "fit.json")
    _write_text(path, text)
    params = {
        "dataset": os.path.abspath(args.dataset),
        "criterion": args.criterion,
        "mode": args.mode,
        "scale": args.scale,
        "mmax": m_max,
        "orthogonalize": bool(args.orthogonalize),
        "tol": args.tol,
    }
    _write_manifest(args.out, "fit", params, None, [path])
    print(path)
    return EXIT_OK


def cmd_simulate(args):
    truth = TrueModelSpec.for_case(args.case, args.k, args.noise_variance)
    config = ExperimentConfig(
        truth=truth,
        N=args.N,
        NS=args.NS,
        m_max=args.mmax,
        seed=args.seed,
        criteria=args.criteria,
        mode=args.mode,
        scale=args.scale,
        tol=args.tol,
        threads=args.threads,
    )
    cache = _open_cache(args.cache)
    provider = OrderStatProvider(df=1, tol=args.tol, cache=cache, threads=args.threads)
    if config.criteria:
        report = run_correction_experiment(config, provider)
    else:
        report = run_bias_experiment(config, provider)
    if cache is not None:
        cache.save()
    csv_path = os.path.join(args.out, "report.csv")
    json_path = os.path.join(args.out, "report.json")
    _write_text(csv_path, report.csv_text())
    _write_text(json_path, report.json_text())
    _write_manifest(args.out, "simulate", config.describe(), config.seed, [csv_path, json_path])
    log.info("wall clock %.2fs", report.wall_clock)
    print(csv_path)
    print(json_path)
    return EXIT_OK


def cmd_generate(args):
    truth = TrueModelSpec.for_case(args.case, args.k, args.noise_variance)
    ds = generate_dataset(truth, args.N, args.seed, args.replication)
    write_dataset_csv(args.out, ds.y, ds.X)
    print(args.out)
    return EXIT_OK


def _manifest_argv(manifest):
    """Rebuild the command line a manifest was produced by (without --out/--threads/--cache)."""
    cmd = manifest.get("subcommand")
    p = manifest.get("parameters") or {}
    try:
        if cmd == "tables":
            return ["tables", "--k", ",".join(str(k) for k in p["k"]), "--rmax", str(p["rmax"]),
                    "--df", str(p["df"]), "--tol", repr(p["tol"])]
        if cmd == "simulate":
            argv = ["simulate", "--case", str(p["case"]), "--k", str(p["k"]), "--N", str(p["N"]),
                    "--NS", str(p["NS"]), "--seed", str(p["seed"]), "--mmax", str(p["m_max"]),
                    "--mode", p["mode"], "--scale", repr(p["scale"]), "--tol", repr(p["tol"]),
                    "--noise-variance", repr(p["noise_variance"])]
            if p["criteria"]:
                argv += ["--criteria", ",".join(p["criteria"])]
            else:
                argv += ["--criteria", ""]
            return argv
        if cmd == "fit":
            argv = ["fit", p["dataset"], "--criterion", p["criterion"], "--mode", p["mode"],
                    "--scale", repr(p["scale"]), "--mmax", str(p["mmax"]), "--tol", repr(p["tol"])]
            if p["orthogonalize"]:
                argv.append("--orthogonalize")
            return argv
    except (KeyError, TypeError) as exc:
        raise UsageError(f"manifest is missing parameter {exc}")
    raise UsageError(f"manifest has unknown subcommand {cmd!r}")


def cmd_rerun(args):
    with open(args.manifest, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.manifest}: not a manifest: {exc}")
    argv = _manifest_argv(manifest) + ["--out", args.out, "--threads", str(args.threads)]
    if args.cache:
        argv += ["--cache", args.cache]
    log.info("rerun: sric %s", " ".join(argv))
    sub = build_parser().parse_args(argv)
    return sub.func(sub)


def build_parser():
    p = argparse.ArgumentParser(prog="sric", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL, help="quadrature tolerance")
        sp.add_argument("--cache", help="order-statistic cache file (df,N,r,tol,value lines)")
        sp.add_argument("--threads", type=int, default=1, help="cap on worker threads")

    t = sub.add_parser("tables", help="expected chi-square order statistics")
    t.add_argument("--k", type=_int_list, required=True, help="comma-separated sample counts")
    t.add_argument("--rmax", type=int, default=30, help="largest rank (clipped to k; 0 = all)")
    t.add_argument("--df", type=int, default=1)
    t.add_argument("--out", default=".", help="output directory")
    common(t)
    t.set_defaults(func=cmd_tables)

    f = sub.add_parser("fit", help="select the subset order of a dataset")
    f.add_argument("dataset", help="CSV with header y,x1,...,xk")
    f.add_argument("--criterion", choices=CRITERIA, default="adaptive")
    f.add_argument("--mode", choices=MODES, default="mixture")
    f.add_argument("--scale", type=float, default=1.0, help="multiplier on E[X_(1|k-m)] in the noise weight")
    f.add_argument("--mmax", type=int, default=None)
    f.add_argument("--orthogonalize", action="store_true", help="orthonormalize a non-orthonormal design")
    f.add_argument("--out", help="output directory for fit.json and manifest.json (default: report on stdout)")
    common(f)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="Monte Carlo bias and correction experiments")
    s.add_argument("--case", type=int, choices=range(1, 7), required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--N", type=int, default=1000)
    s.add_argument("--NS", type=int, default=DEFAULT_NS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mmax", type=int, default=None)
    s.add_argument("--criteria", type=_criteria_list, default=CRITERIA)
    s.add_argument("--mode", choices=MODES, default="mixture")
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--noise-variance", type=float, default=0.1)
    s.add_argument("--out", default=".", help="output directory")
    common(s)
    s.set_defaults(func=cmd_simulate)

    rr = sub.add_parser("rerun", help="repeat the run recorded in a manifest.json")
    rr.add_argument("manifest")
    rr.add_argument("--out", required=True, help="output directory")
    rr.add_argument("--threads", type=int, default=1)
    rr.add_argument("--cache")
    rr.set_defaults(func=cmd_rerun)

    g = sub.add_parser("generate", help="write a synthetic dataset CSV")
    g.add_argument("--case", type=int, choices=range(1, 7), required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--N", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--replication", type=int, default=0)
    g.add_argument("--noise-variance", type=float, default=0.1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except QuadratureError as exc:
        print(f"sric: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DatasetFormatError, OrthogonalityError, DomainError, TableTooShortError, UsageError) as exc:
        print(f"sric: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"sric: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
