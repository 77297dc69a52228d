"""Command-line entry point: ``solarcast <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model or
convergence error. ``SOLARCAST_LOG_LEVEL`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

from .config import ConfigError, RunConfig
from .experiment import LockError, StageError, regenerate_reports, run_full_experiment
from .forest import ForestParams, ForestSchemaError
from .ingest import IngestError, load_dataset, parse_csv, summary_stats, to_csv, validate, write_summary
from .pipeline import SEASONS, PipelineSchemaError, SeasonMismatchError, TwoStagePipeline
from .preprocess import (
    SplitSpec,
    filter_daytime,
    parse_month_range,
    select_months,
    shift_timestamps,
    split_holdout_and_train_test,
)
from .pv.inverter import InverterDomainError
from .pv.module import ConvergenceError
from .pv.system import PvSystemSpec, load_equipment, simulate_energy

logger = logging.getLogger("solarcast")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _forest_args(p):
    g = p.add_argument_group("forest")
    g.add_argument("--n-trees", type=int)
    g.add_argument("--max-depth", type=int)
    g.add_argument("--min-samples-leaf", type=int)
    g.add_argument("--max-features")
    g.add_argument("--jobs", type=int, dest="n_jobs")


def _forest_params(args, base: ForestParams = ForestParams()) -> ForestParams:
    changes = {}
    for name in ("n_trees", "max_depth", "min_samples_leaf", "n_jobs"):
        if getattr(args, name, None) is not None:
            changes[name] = getattr(args, name)
    mf = getattr(args, "max_features", None)
    if mf is not None:
        changes["max_features"] = mf if mf in ("all", "sqrt") else float(mf)
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return replace(base, **changes)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="solarcast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse a data file and write its summary table")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--header-mode", default="auto", choices=["auto", "plain", "nsrdb"])
    p.add_argument("--summary", required=True, type=Path)

    p = sub.add_parser("preprocess", help="shift, filter and split into train/test/validation CSVs")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--header-mode", default="auto", choices=["auto", "plain", "nsrdb"])
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--wet-months", default="5-10")
    p.add_argument("--validation-year", type=int, default=2022)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--chronological", action="store_true", help="split by time instead of shuffling")
    p.add_argument("--out-dir", required=True, type=Path)

    p = sub.add_parser("train", help="train a two-stage pipeline")
    p.add_argument("--season", default="annual", choices=SEASONS)
    p.add_argument("--data", required=True, type=Path, help="directory written by 'preprocess'")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--model-out", required=True, type=Path)
    _forest_args(p)

    p = sub.add_parser("evaluate", help="score a trained pipeline")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--split", default="test", choices=["test", "validation"])
    p.add_argument("--data", type=Path, help="preprocess directory (default: the one used for training)")
    p.add_argument("--report", required=True, type=Path)
    p.add_argument("--force", action="store_true", help="allow data outside the model's season")

    p = sub.add_parser("predict", help="predict irradiance for a CSV of weather records")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--header-mode", default="auto", choices=["auto", "plain", "nsrdb"])
    p.add_argument("--shift-minutes", type=int, default=0, help="shift raw timestamps first (30 for raw NSRDB)")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("simulate", help="PV energy from predicted irradiance")
    p.add_argument("--predictions", required=True, type=Path)
    p.add_argument("--weather", required=True, type=Path)
    p.add_argument("--module", default="trina", help="trina, canadian, or a module JSON file")
    p.add_argument("--system", type=Path, help="system spec JSON (location, array, inverter, losses)")
    p.add_argument("--shift-minutes", type=int, default=0,
                   help="shift raw weather timestamps to match the predictions (30 for raw NSRDB)")
    p.add_argument("--solar-offset-minutes", type=float, default=-30.0)
    p.add_argument("--out", required=True, type=Path, help="hourly CSV")
    p.add_argument("--daily-out", required=True, type=Path)

    p = sub.add_parser("report", help="regenerate result CSVs from a previous run's cache")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out-dir", type=Path)

    p = sub.add_parser("run", help="full experiment from a config file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--data", type=Path)
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--seed", type=int, dest="split_seed")
    _forest_args(p)
    return parser


def cmd_ingest(args):
    ts = load_dataset(args.input, args.header_mode)
    for line in validate(ts).lines():
        logger.info(line)
    args.summary.parent.mkdir(parents=True, exist_ok=True)
    write_summary(summary_stats(ts), args.summary)
    print(f"{len(ts)} records -> {args.summary}")


def cmd_preprocess(args):
    spec = SplitSpec.with_wet_months(
        parse_month_range(args.wet_months),
        validation_year=args.validation_year,
        train_fraction=args.train_fraction,
        shuffle_seed=args.seed,
        chronological=args.chronological,
    )
    ts = load_dataset(args.input, args.header_mode)
    splits = split_holdout_and_train_test(filter_daytime(shift_timestamps(ts)), spec)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for part in ("train", "test", "validation"):
        to_csv(getattr(splits, part), args.out_dir / f"{part}.csv")
    manifest = {
        "input": str(args.input),
        "seed": args.seed,
        "counts": splits.counts(),
        "wet_months": sorted(spec.wet_months),
        "dry_months": sorted(spec.dry_months),
        "validation_year": spec.validation_year,
        "train_fraction": spec.train_fraction,
        "chronological": spec.chronological,
        "timezone_offset_hours": ts.timezone_offset_hours,
    }
    (args.out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(json.dumps(splits.counts()))


def _split_manifest(data_dir: Path) -> dict:
    path = data_dir / "manifest.json"
    return json.loads(path.read_text()) if path.exists() else {}


def cmd_train(args):
    meta = _split_manifest(args.data)
    spec = SplitSpec.with_wet_months(meta.get("wet_months", range(5, 11)))
    train = parse_csv(args.data / "train.csv", "plain")
    pipe = TwoStagePipeline.train(train, args.season, _forest_params(args), spec)
    pipe.manifest["data_dir"] = str(args.data.resolve())
    args.model_out.parent.mkdir(parents=True, exist_ok=True)
    pipe.save_to(args.model_out)
    print(f"{args.season} pipeline ({pipe.manifest['rows_stage1']} rows) -> {args.model_out}")


def _load_model(path: Path) -> TwoStagePipeline:
    if not path.exists():
        raise FileNotFoundError(f"model file {path} not found; train one first")
    return TwoStagePipeline.load(path)


def cmd_evaluate(args):
    pipe = _load_model(args.model)
    data_dir = args.data or Path(pipe.manifest.get("data_dir", "."))
    ts = parse_csv(data_dir / f"{args.split}.csv", "plain")
    if not args.force:
        ts = select_months(ts, pipe.months)
    report = pipe.evaluate(ts, force=args.force)
    args.report.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(args.report)
    print(report.to_frame().to_string(index=False))


def cmd_predict(args):
    pipe = _load_model(args.model)
    ts = parse_csv(args.input, args.header_mode)
    if args.shift_minutes:
        ts = shift_timestamps(ts, args.shift_minutes)
    pred = pipe.predict(ts)
    pred.index.name = "timestamp"
    args.out.parent.mkdir(parents=True, exist_ok=True)
    pred.reset_index().to_csv(args.out, index=False, float_format="%.6f")
    print(f"{len(pred)} predictions -> {args.out}")


def cmd_simulate(args):
    system = PvSystemSpec.from_file(args.system) if args.system else PvSystemSpec.default()
    system = system.with_module(load_equipment(args.module))
    pred = pd.read_csv(args.predictions, parse_dates=["timestamp"]).set_index("timestamp")
    weather = parse_csv(args.weather)
    if args.shift_minutes:
        weather = shift_timestamps(weather, args.shift_minutes)
    weather = weather.frame.reindex(pred.index)
    if weather["temperature"].isna().any():
        raise ValueError("weather file does not cover every prediction timestamp")
    hourly, daily = simulate_energy(pred, weather, system, args.solar_offset_minutes)
    for path in (args.out, args.daily_out):
        path.parent.mkdir(parents=True, exist_ok=True)
    hourly[["g_poa", "cell_temp", "p_dc", "p_ac"]].rename_axis("timestamp").reset_index().to_csv(
        args.out, index=False, float_format="%.6f")
    daily.reset_index().to_csv(args.daily_out, index=False, float_format="%.6f")
    print(f"{system.module.name}: {daily.sum():.3f} kWh over {len(daily)} day(s)")


def _config_with_flags(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    changes = {}
    if getattr(args, "data", None):
        changes["data"] = args.data
    if getattr(args, "out_dir", None):
        changes["output_dir"] = args.out_dir
    if getattr(args, "split_seed", None) is not None:
        changes["split"] = replace(cfg.split, shuffle_seed=args.split_seed)
    if hasattr(args, "n_trees"):
        changes["forest"] = _forest_params(args, cfg.forest)
    return cfg.override(**changes)


def cmd_run(args):
    run = run_full_experiment(_config_with_flags(args))
    print(f"artifacts in {run.out}")
    for season, rows in run.manifest["metrics"].items():
        for row in rows:
            print(f"{season:6s} {row['target']:13s} rmse={row['rmse']:8.3f} nrmse={row['nrmse']:.3f} "
                  f"({row['nrmse_rating']}) mase={row['mase']:.3f}")


def cmd_report(args):
    run = regenerate_reports(_config_with_flags(args))
    print(f"reports regenerated in {run.out}")


COMMANDS = {
    "ingest": cmd_ingest,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "run": cmd_run,
    "report": cmd_report,
}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (ConvergenceError, ForestSchemaError, PipelineSchemaError, InverterDomainError)):
        return EXIT_MODEL
    if isinstance(exc, (UsageError, ConfigError, SeasonMismatchError, LockError)):
        return EXIT_USAGE
    return EXIT_DATA


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("SOLARCAST_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (IngestError, FileNotFoundError, ValueError, KeyError, RuntimeError, LockError) as exc:
        stage = f"[{exc.stage}] " if isinstance(exc, StageError) else ""
        print(f"solarcast {args.command}: {stage}{exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
