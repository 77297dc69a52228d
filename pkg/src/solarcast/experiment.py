"""End-to-end batch run: data -> forecasts -> metrics -> energy."""

from __future__ import annotations

import json
import logging
import os
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__, eda
from .config import RunConfig
from .ingest import load_dataset, parse_csv, summary_stats, to_csv, validate
from .pipeline import STAGE1_TARGETS, STAGE2_TARGETS, TwoStagePipeline
from .preprocess import Splits, filter_daytime, select_months, shift_timestamps, split_holdout_and_train_test
from .pv.system import PvSystemSpec, simulate_energy

logger = logging.getLogger(__name__)

ARTIFACTS = {
    "summary": "summary_table.csv",
    "metrics_annual": "metrics_annual.csv",
    "metrics_wet": "metrics_wet.csv",
    "metrics_dry": "metrics_dry.csv",
    "predictions_hourly": "predictions_2022_hourly.csv",
    "predictions_daily": "predictions_2022_daily.csv",
    "feature_importance": "feature_importance.csv",
    "energy_trina": "energy_trina_daily.csv",
    "energy_canadian": "energy_canadian_daily.csv",
}
FLOAT_FORMAT = "%.6f"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class LockError(RuntimeError):
    pass


@contextmanager
def output_lock(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".solarcast.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockError(f"{out_dir} is in use by another run (remove {lock.name} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


class Run:
    """Tracks artifacts and the manifest for one output directory."""

    def __init__(self, config: RunConfig, out_dir: Path | None = None):
        self.config = config
        self.out = Path(out_dir or config.output_dir).resolve()
        self.manifest = {
            "tool_version": __version__,
            "config_hash": config.digest(),
            "config": config.to_dict(),
            "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
            "stages": {},
            "row_counts": {},
            "artifacts": {},
            "metrics": {},
        }
        self._pending: list = []

    def path(self, name: str) -> Path:
        p = (self.out / name).resolve()
        if self.out not in p.parents:
            raise ValueError(f"refusing to write outside {self.out}: {name}")
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write(self, key: str, name: str, writer) -> Path:
        """Call ``writer(path)`` on a ``.partial`` file; renamed when the stage succeeds."""
        final = self.path(name)
        partial = final.with_name(final.name + ".partial")
        writer(partial)
        self._pending.append((key, partial, final))
        return final

    def write_csv(self, key: str, frame: pd.DataFrame, name: str | None = None, index: bool = False) -> Path:
        return self.write(key, name or ARTIFACTS[key],
                          lambda p: frame.to_csv(p, index=index, float_format=FLOAT_FORMAT))

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        self._pending = []
        try:
            yield
        except Exception as exc:
            self.manifest["stages"][name] = {"status": "failed", "error": str(exc)}
            self.save_manifest()
            raise StageError(name, exc) from exc
        for key, partial, final in self._pending:
            os.replace(partial, final)
            self.manifest["artifacts"][key] = str(final.relative_to(self.out))
        self._pending = []
        self.manifest["stages"][name] = {"status": "ok", "seconds": round(time.perf_counter() - t0, 3)}

    def save_manifest(self) -> None:
        self.manifest["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
        self.path("manifest.json").write_text(json.dumps(self.manifest, indent=2, default=str))


def prepare_splits(ts, config: RunConfig) -> Splits:
    shifted = shift_timestamps(ts, config.shift_minutes)
    return split_holdout_and_train_test(filter_daytime(shifted), config.split)


def load_system(config: RunConfig, module: str, timezone_offset=None) -> PvSystemSpec:
    """System spec for ``module``; a known data time zone overrides the spec's."""
    base = PvSystemSpec.from_file(config.system) if config.system else PvSystemSpec.default(module)
    system = base.with_module(module)
    if timezone_offset is not None:
        system = replace(system, location=replace(system.location, timezone_offset=float(timezone_offset)))
    return system


def run_full_experiment(config: RunConfig) -> Run:
    """Train, evaluate and simulate everything; returns the finished run."""
    config.check_paths()
    run = Run(config)
    with output_lock(run.out):
        with run.stage("ingest"):
            ts = load_dataset(config.data, config.header_mode)
            run.manifest["row_counts"]["raw"] = len(ts)
            run.manifest["validation"] = validate(ts).lines()
            run.write_csv("summary", summary_stats(ts), index=True)
            corr, _ = eda.correlation_matrix(ts, daytime=True)
            run.write_csv("correlation", eda.correlation_long(corr), "eda/correlation_daytime.csv")
            run.write_csv("ghi_pivot", eda.pivot_long(eda.month_hour_pivot(ts, "ghi")), "eda/ghi_month_hour.csv")

        with run.stage("preprocess"):
            splits = prepare_splits(ts, config)
            run.manifest["row_counts"].update(splits.counts())
            run.manifest["timezone_offset_hours"] = ts.timezone_offset_hours
            for part in ("train", "test", "validation"):
                data = getattr(splits, part)
                run.write(f"processed_{part}", f"processed/{part}.csv", lambda p, d=data: to_csv(d, p))

        with run.stage("train"):
            for season in config.seasons:
                pipe = TwoStagePipeline.train(splits.train, season, config.forest, config.split)
                run.write(f"model_{season}", f"models/pipeline_{season}.npz", pipe.save_to)
                run.manifest["row_counts"][f"train_{season}"] = pipe.manifest["rows_stage1"]

        generate_reports(run, splits)
    run.save_manifest()
    return run


def load_cached_splits(out: Path) -> Splits:
    parts = {}
    for part in ("train", "test", "validation"):
        path = out / "processed" / f"{part}.csv"
        if not path.exists():
            raise FileNotFoundError(f"cached split {path} missing; run the experiment first")
        parts[part] = parse_csv(path, "plain")
    return Splits(**parts)


def regenerate_reports(config: RunConfig) -> Run:
    """Rebuild every result CSV from cached splits and models (no training)."""
    run = Run(config)
    with output_lock(run.out):
        splits = load_cached_splits(run.out)
        previous = run.out / "manifest.json"
        if previous.exists():
            old = json.loads(previous.read_text())
            run.manifest["timezone_offset_hours"] = old.get("timezone_offset_hours")
            for key in ("stages", "row_counts", "artifacts"):
                run.manifest[key].update(old.get(key, {}))
            run.manifest["regenerated_from"] = old.get("config_hash")
        run.manifest["row_counts"].update(splits.counts())
        generate_reports(run, splits)
    run.save_manifest()
    return run


def _load_pipeline(run: Run, season: str) -> TwoStagePipeline:
    path = run.out / "models" / f"pipeline_{season}.npz"
    if not path.exists():
        raise FileNotFoundError(f"trained model {path} not found")
    return TwoStagePipeline.load(path)


def generate_reports(run: Run, splits: Splits) -> None:
    config = run.config
    with run.stage("evaluate"):
        for season in config.seasons:
            pipe = _load_pipeline(run, season)
            test = select_months(splits.test, pipe.months)
            report = pipe.evaluate(test, season=season)
            run.write_csv(f"metrics_{season}", report.to_frame())
            run.manifest["metrics"][season] = report.to_frame().to_dict(orient="records")
            val = select_months(splits.validation, pipe.months)
            if len(val) >= 2:
                vrep = pipe.evaluate(val, season=season)
                run.write_csv(f"metrics_{season}_validation", vrep.to_frame(), f"metrics_{season}_validation.csv")
            delta = pipe.teacher_forcing_delta(test)
            run.write_csv(f"teacher_forcing_{season}", delta, f"diagnostics/teacher_forcing_{season}.csv")

    if "annual" not in config.seasons:
        return
    annual = _load_pipeline(run, "annual")
    validation = splits.validation
    if len(validation) == 0:
        raise StageError("predict", ValueError(f"no {config.split.validation_year} records to predict"))

    with run.stage("predict"):
        pred = annual.predict(validation)
        hourly = pred.copy()
        for t in STAGE1_TARGETS + STAGE2_TARGETS:
            hourly[t] = validation.frame[t].to_numpy(np.float64)
        hourly.index.name = "timestamp"
        run.write_csv("predictions_hourly", hourly.reset_index())
        daily = hourly.groupby(hourly.index.normalize()).sum(min_count=1) / 1000.0
        daily.index.name = "date"
        run.write_csv("predictions_daily", daily.reset_index())
        run.write_csv("feature_importance", annual.feature_importances().reset_index(names="feature"))

    with run.stage("simulate"):
        for module in config.modules:
            system = load_system(config, module, run.manifest.get("timezone_offset_hours"))
            hourly_pv, daily_kwh = simulate_energy(pred, validation.frame, system,
                                                   solar_time_offset_minutes=-config.shift_minutes)
            run.write_csv(f"energy_{module}", daily_kwh.reset_index(), f"energy_{module}_daily.csv")
            run.write_csv(f"energy_{module}_hourly",
                          hourly_pv[["g_poa", "cell_temp", "p_dc", "p_ac"]].rename_axis("timestamp").reset_index(),
                          f"energy_{module}_hourly.csv")
