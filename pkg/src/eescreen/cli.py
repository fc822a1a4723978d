"""Command-line front end: screen, boost, simulate, evaluate.

Every run that writes to an output directory also writes a manifest
recording the subcommand, the resolved options, SHA-256 digests of the
input files, the seed where one applies, the package version, and the wall
time. Wall time lives only in the manifest, so all other outputs from the
same seed are reproducible byte for byte regardless of threading.

Exit codes: 0 success, 2 usage, 3 invalid data, 4 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .boost import DEFAULT_EPSILON, DEFAULT_T_MAX, MAX_EPSILON, eeboost, gcv_tune
from .data import load_matrix, load_survival
from .equations import ModelSpec
from .errors import (
    DataValidationError,
    EEScreenError,
    NumericDegeneracyError,
    ReplicationError,
)
from .metrics import brier, c_statistic, ipcw_auc
from .screening import eescreen, write_ranking_csv
from .simulate import METHOD_KEYS, ScenarioConfig, run_experiment

#: CLI model names to internal model kinds.
MODEL_NAMES = {
    "linear": "linear",
    "cox": "cox_score",
    "tyear": "t_year",
    "aft": "aft_gehan",
    "modelfree": "model_free_si",
}

BOOST_MODELS = ("linear", "tyear", "aft")

_DEFAULT_CRITERIA = {"linear": "rss_gcv", "tyear": "brier_gcv", "aft": "gehan_gcv"}


def _epsilon_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 < value <= MAX_EPSILON:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, {MAX_EPSILON}]")
    return value


def _int_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir, subcommand, options, inputs, seed, started):
    manifest = {
        "subcommand": subcommand,
        "options": options,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "seed": seed,
        "version": __version__,
        "wall_time_seconds": time.perf_counter() - started,
    }
    _write_json(Path(out_dir) / "manifest.json", manifest)


def _build_model(args) -> ModelSpec:
    kind = MODEL_NAMES[args.model]
    if kind == "t_year" and args.t0 is None:
        raise DataValidationError("--t0 is required with --model tyear")
    return ModelSpec(kind, t0=args.t0 if kind == "t_year" else None)


def _load_scores(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "score" not in header:
            raise DataValidationError(f"{path}: expected a header containing a score column")
        col = header.index("score")
        values = []
        for line, row in enumerate(reader, start=2):
            try:
                values.append(float(row[col]))
            except (IndexError, ValueError):
                raise DataValidationError(f"{path}:{line}: bad score row")
    if not values:
        raise DataValidationError(f"{path}: no score rows")
    return np.asarray(values)


def cmd_screen(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = _build_model(args)
    x = load_matrix(args.x)
    outcome = load_survival(args.outcome)
    result = eescreen(model, x, outcome, d=args.d, gamma=args.gamma)
    write_ranking_csv(out_dir / "ranking.csv", result.retained)
    warnings = []
    if result.stats.clamp_count:
        warnings.append(f"clamped {result.stats.clamp_count} censoring weights")
    _write_json(
        out_dir / "metadata.json",
        {
            "model": model.kind,
            "t0": model.t0,
            "n": x.n,
            "p": x.p,
            "rule": result.retained.rule,
            "retained": int(result.retained.size),
            "nuisance": result.stats.nuisance,
            "warnings": warnings,
        },
    )
    options = {k: v for k, v in vars(args).items() if k not in ("func",)}
    _write_manifest(out_dir, "screen", options, [args.x, args.outcome], None, started)
    return 0


def cmd_boost(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = _build_model(args)
    x = load_matrix(args.x)
    outcome = load_survival(args.outcome)
    path = eeboost(model, x, outcome, epsilon=args.epsilon, t_max=args.t_max)
    criterion = args.criterion or _DEFAULT_CRITERIA[args.model]
    tuned = gcv_tune(model, x, outcome, path, criterion)
    with open(out_dir / "path.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "j", "signed_step"])
        for t, (j, sign) in enumerate(zip(path.steps, path.signs), start=1):
            writer.writerow([t, int(j), repr(float(sign) * path.epsilon)])
    _write_json(
        out_dir / "path_meta.json",
        {
            "model": model.kind,
            "t0": model.t0,
            "epsilon": path.epsilon,
            "t_max": args.t_max,
            "t_final": path.t_final,
            "stop_reason": path.stop_reason,
        },
    )
    _write_json(
        out_dir / "tuned.json",
        {
            "criterion": criterion,
            "t": tuned.t,
            "coefficients": {str(j): b for j, b in tuned.coefficients.items()},
            "grid": tuned.grid.tolist(),
            "values": tuned.values.tolist(),
            "degrees": tuned.degrees.tolist(),
        },
    )
    options = {k: v for k, v in vars(args).items() if k not in ("func",)}
    _write_manifest(out_dir, "boost", options, [args.x, args.outcome], None, started)
    return 0


def _resolve_scenario(args) -> ScenarioConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = ScenarioConfig.from_json(fh.read())
    else:
        config = ScenarioConfig()
    overrides = {}
    for name in ("n", "p", "structure", "rho", "error_dist", "censoring_rate", "reps"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.epsilon is not None:
        overrides["boost_epsilon"] = args.epsilon
    if args.t_max is not None:
        overrides["boost_t_max"] = args.t_max
    return replace(config, **overrides) if overrides else config


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _resolve_scenario(args)
    methods = [m for m in args.methods.split(",") if m]
    result = run_experiment(
        config,
        methods,
        d=args.d,
        fit_sizes=args.fit_sizes,
        processes=args.threads,
    )
    from .plots import (
        fp_fn_figure,
        mms_figure,
        write_curve_csv,
        write_fits_csv,
        write_mms_csv,
    )

    write_mms_csv(result, out_dir / "replications.csv")
    write_curve_csv(result, out_dir / "curve.csv")
    if args.fit_sizes:
        write_fits_csv(result, out_dir / "fits.csv")
    _write_json(out_dir / "aggregates.json", result.to_json_dict())
    if not args.no_plots:
        fp_fn_figure(result, out_dir / "fp_fn.png")
        mms_figure(result, out_dir / "mms.png")
    options = {k: v for k, v in vars(args).items() if k not in ("func",)}
    options["resolved_config"] = asdict(config)
    inputs = [args.config] if args.config else []
    _write_manifest(out_dir, "simulate", options, inputs, config.base_seed, started)
    return 0


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    scores = _load_scores(args.scores)
    outcome = load_survival(args.outcome)
    if args.metric == "brier":
        if args.t0 is None:
            raise DataValidationError("--t0 is required for the brier metric")
        value = brier(scores, outcome, args.t0)
    elif args.metric == "auc":
        if args.t0 is None:
            raise DataValidationError("--t0 is required for the auc metric")
        value = ipcw_auc(scores, outcome, args.t0)
    else:
        value = c_statistic(scores, outcome, tau=args.tau)
    print(f"{args.metric} {value:.10f}")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(
            out_dir / "metrics.json",
            {"metric": args.metric, "value": value, "t0": args.t0, "tau": args.tau},
        )
        options = {k: v for k, v in vars(args).items() if k not in ("func",)}
        _write_manifest(
            out_dir, "evaluate", options, [args.scores, args.outcome], None, started
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eescreen",
        description="Estimating-equation screening, boosting, simulation, and scoring.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    screen = sub.add_parser("screen", help="rank covariates and retain a subset")
    screen.add_argument("--x", required=True, help="covariate file (.csv or .eemat)")
    screen.add_argument("--outcome", required=True, help="survival CSV with time,event")
    screen.add_argument("--model", required=True, choices=sorted(MODEL_NAMES))
    screen.add_argument("--t0", type=float, default=None, help="horizon (tyear only)")
    rule = screen.add_mutually_exclusive_group()
    rule.add_argument("--d", type=int, default=None, help="retain the d top columns")
    rule.add_argument("--gamma", type=float, default=None, help="retain stats above gamma")
    screen.add_argument("--out-dir", required=True)
    screen.set_defaults(func=cmd_screen)

    boost = sub.add_parser("boost", help="run the stagewise booster and tune the stop")
    boost.add_argument("--x", required=True)
    boost.add_argument("--outcome", required=True)
    boost.add_argument("--model", required=True, choices=BOOST_MODELS)
    boost.add_argument("--t0", type=float, default=None)
    boost.add_argument("--epsilon", type=_epsilon_arg, default=DEFAULT_EPSILON)
    boost.add_argument("--t-max", type=int, default=DEFAULT_T_MAX)
    boost.add_argument("--criterion", choices=sorted(_DEFAULT_CRITERIA.values()), default=None)
    boost.add_argument("--out-dir", required=True)
    boost.set_defaults(func=cmd_boost)

    simulate = sub.add_parser("simulate", help="run a Monte-Carlo screening study")
    simulate.add_argument("--config", default=None, help="scenario JSON file")
    simulate.add_argument("--n", type=int, default=None)
    simulate.add_argument("--p", type=int, default=None)
    simulate.add_argument("--structure", choices=("partial_orthogonal", "compound_symmetric"), default=None)
    simulate.add_argument("--rho", type=float, default=None)
    simulate.add_argument("--error-dist", dest="error_dist", choices=("logistic", "normal"), default=None)
    simulate.add_argument("--censoring-rate", dest="censoring_rate", type=float, default=None)
    simulate.add_argument("--reps", type=int, default=None)
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--epsilon", type=_epsilon_arg, default=None)
    simulate.add_argument("--t-max", type=int, default=None)
    simulate.add_argument("--methods", required=True, help=f"comma list from {','.join(METHOD_KEYS)}")
    simulate.add_argument("--d", type=int, default=None)
    simulate.add_argument("--fit-sizes", type=_int_list, default=None)
    simulate.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("EESCREEN_THREADS", "1")),
        help="worker processes for replications (env EESCREEN_THREADS)",
    )
    simulate.add_argument("--no-plots", action="store_true")
    simulate.add_argument("--out-dir", required=True)
    simulate.set_defaults(func=cmd_simulate)

    evaluate = sub.add_parser("evaluate", help="score predictions against survival data")
    evaluate.add_argument("--scores", required=True, help="CSV with a score column")
    evaluate.add_argument("--outcome", required=True)
    evaluate.add_argument("--metric", required=True, choices=("brier", "auc", "cstat"))
    evaluate.add_argument("--t0", type=float, default=None)
    evaluate.add_argument("--tau", type=float, default=None)
    evaluate.add_argument("--out-dir", default=None)
    evaluate.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ReplicationError as exc:
        cause = exc.cause
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(cause, NumericDegeneracyError):
            return 4
        if isinstance(cause, DataValidationError):
            return 3
        return 1
    except NumericDegeneracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EEScreenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
