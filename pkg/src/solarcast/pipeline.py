"""Two-stage irradiance forecaster: clear-sky first, then actual sky."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from . import forest
from .forest import ForestModel, ForestParams
from .ingest import TimeSeries
from .metrics import MetricsReport
from .preprocess import DAY_END_HOUR, DAY_START_HOUR, SplitSpec, drop_missing_cloud, filter_daytime, select_months

logger = logging.getLogger(__name__)

STAGE1_FEATURES = [
    "month", "day", "hour", "precipitable_water", "dew_point",
    "relative_humidity", "pressure", "temperature", "wind_speed", "wind_direction",
]
STAGE1_TARGETS = ["clearsky_ghi", "clearsky_dni", "clearsky_dhi"]
STAGE2_FEATURES = STAGE1_FEATURES + ["clearsky_ghi", "clearsky_dni", "clearsky_dhi", "cloud_type"]
STAGE2_TARGETS = ["ghi", "dni", "dhi"]

# column order of the evaluation tables
REPORT_TARGETS = ["clearsky_dhi", "clearsky_dni", "clearsky_ghi", "dhi", "dni", "ghi"]

SEASONS = ("annual", "wet", "dry")


class SeasonMismatchError(ValueError):
    pass


class PipelineSchemaError(ValueError):
    pass


def _require(frame: pd.DataFrame, columns) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise PipelineSchemaError(f"missing columns {missing}")


@dataclass
class TwoStagePipeline:
    season: str
    months: frozenset
    stage1: dict  # target -> ForestModel
    stage2: dict
    manifest: dict = field(default_factory=dict)

    @classmethod
    def train(cls, ts_train: TimeSeries, season: str = "annual", params: ForestParams = ForestParams(),
              spec: SplitSpec = SplitSpec()) -> "TwoStagePipeline":
        """Fit three clear-sky forests and three actual-sky forests.

        ``ts_train`` should already be time-shifted and daytime-filtered;
        it is restricted here to the months of ``season``. Stage-2 forests
        see the observed clear-sky values as inputs and skip rows whose
        cloud type is missing.
        """
        if season not in SEASONS:
            raise ValueError(f"unknown season {season!r}")
        months = spec.months(season)
        data = select_months(ts_train, months)
        if len(data) == 0:
            raise ValueError(f"no training rows for season {season!r}")
        frame = data.frame
        _require(frame, STAGE2_FEATURES + STAGE2_TARGETS)
        stage1 = {
            t: ForestModel.fit(frame[STAGE1_FEATURES], frame[t], params, target=t)
            for t in STAGE1_TARGETS
        }
        cloudy = drop_missing_cloud(data).frame
        if len(cloudy) == 0:
            raise ValueError("no rows with a cloud type to train the actual-sky stage")
        stage2 = {
            t: ForestModel.fit(cloudy[STAGE2_FEATURES].astype(np.float64), cloudy[t], params, target=t)
            for t in STAGE2_TARGETS
        }
        manifest = {
            "season": season,
            "months": sorted(months),
            "rows_stage1": len(frame),
            "rows_stage2": len(cloudy),
            "params": asdict(params),
        }
        return cls(season, frozenset(months), stage1, stage2, manifest)

    def check_season(self, ts: TimeSeries, season: str | None = None, force: bool = False) -> None:
        if force:
            return
        if season is not None and self.season != "annual" and season != self.season:
            raise SeasonMismatchError(f"{self.season} pipeline asked to evaluate {season} data; pass force")
        outside = sorted(set(ts.frame["month"].unique()) - set(self.months))
        if outside and self.season != "annual":
            raise SeasonMismatchError(f"{self.season} pipeline got records from months {outside}; pass force")

    def predict(self, ts: TimeSeries, observed_clearsky: bool = False) -> pd.DataFrame:
        """Predict all six components for every record of ``ts``.

        Stage-1 outputs are the stage-2 clear-sky inputs unless
        ``observed_clearsky`` is set (a diagnostic only). Rows with no
        cloud type get NaN actual-sky predictions. Everything is clipped
        at zero.
        """
        frame = ts.frame
        _require(frame, STAGE2_FEATURES)
        out = pd.DataFrame(index=frame.index)
        if len(frame) == 0:
            for t in STAGE1_TARGETS + STAGE2_TARGETS:
                out[f"pred_{t}"] = np.array([], dtype=np.float64)
            return out
        for t in STAGE1_TARGETS:
            out[f"pred_{t}"] = np.maximum(self.stage1[t].predict(frame[STAGE1_FEATURES]), 0.0)
        x2 = frame[STAGE1_FEATURES].astype(np.float64).copy()
        for t in STAGE1_TARGETS:
            x2[t] = frame[t].to_numpy(np.float64) if observed_clearsky else out[f"pred_{t}"].to_numpy()
        has_cloud = frame["cloud_type"].notna().to_numpy()
        x2["cloud_type"] = frame["cloud_type"].astype("Float64").fillna(0).to_numpy(np.float64)
        for t in STAGE2_TARGETS:
            pred = np.full(len(frame), np.nan)
            if has_cloud.any():
                pred[has_cloud] = np.maximum(self.stage2[t].predict(x2[has_cloud]), 0.0)
            out[f"pred_{t}"] = pred
        return out

    def evaluate(self, ts: TimeSeries, season: str | None = None, force: bool = False,
                 observed_clearsky: bool = False) -> MetricsReport:
        """Score the six outputs on daytime records, in time order."""
        self.check_season(ts, season, force)
        day = filter_daytime(ts)
        dropped = len(ts) - len(day)
        if dropped:
            logger.info("evaluation ignores %d night-time record(s)", dropped)
        frame = day.frame.sort_index(kind="mergesort")
        if len(frame) < 2:
            raise ValueError("evaluation set needs at least two daytime records")
        pred = self.predict(day.replace(frame), observed_clearsky=observed_clearsky)
        report = MetricsReport()
        for t in REPORT_TARGETS[:3]:
            report.add(t, frame[t].to_numpy(np.float64), pred[f"pred_{t}"].to_numpy())
        ok = frame["cloud_type"].notna().to_numpy()
        for t in REPORT_TARGETS[3:]:
            report.add(t, frame[t].to_numpy(np.float64)[ok], pred[f"pred_{t}"].to_numpy()[ok])
        return report

    def teacher_forcing_delta(self, ts: TimeSeries, force: bool = False) -> pd.DataFrame:
        """Actual-sky RMSE with predicted vs observed clear-sky inputs."""
        inferred = self.evaluate(ts, force=force)
        forced = self.evaluate(ts, force=force, observed_clearsky=True)
        rows = []
        for t in STAGE2_TARGETS:
            a, b = inferred[t]["rmse"], forced[t]["rmse"]
            rows.append({"target": t, "rmse_predicted_clearsky": a, "rmse_observed_clearsky": b, "delta": a - b})
        return pd.DataFrame(rows)

    def feature_importances(self) -> pd.DataFrame:
        """One column per model, one row per stage-2 feature (NaN where unused)."""
        cols = {f"stage1_{t}": m.importance_series() for t, m in self.stage1.items()}
        cols.update({f"stage2_{t}": m.importance_series() for t, m in self.stage2.items()})
        return pd.DataFrame(cols).reindex(STAGE2_FEATURES)

    def save(self, path) -> None:
        arrays = {}
        models = {}
        for stage, group in (("stage1", self.stage1), ("stage2", self.stage2)):
            for t, m in group.items():
                prefix = f"{stage}.{t}."
                arrays.update(forest._pack(m.trees, prefix))
                models[prefix] = {"target": t, "feature_names": m.feature_names, "params": asdict(m.params)}
        meta = {
            "format_version": forest.FORMAT_VERSION,
            "season": self.season,
            "months": sorted(self.months),
            "models": models,
            "manifest": self.manifest,
        }
        np.savez_compressed(path, meta=np.array(json.dumps(meta)), **arrays)

    def save_to(self, path) -> None:
        """Save under exactly ``path`` (``np.savez`` would append ``.npz``)."""
        with open(path, "wb") as fh:
            self.save(fh)

    @classmethod
    def load(cls, path) -> "TwoStagePipeline":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta["format_version"] != forest.FORMAT_VERSION:
                raise forest.ForestSchemaError(f"unsupported model format {meta['format_version']}")
            stages = {"stage1": {}, "stage2": {}}
            for prefix, info in meta["models"].items():
                trees = forest._unpack(z, prefix)
                model = ForestModel(trees, info["feature_names"], ForestParams(**info["params"]), info["target"])
                stages[prefix.split(".")[0]][info["target"]] = model
        return cls(meta["season"], frozenset(meta["months"]), stages["stage1"], stages["stage2"], meta["manifest"])


def persistence_baseline(ts: TimeSeries, column: str) -> pd.Series:
    """Previous-hour value of ``column`` within the same day's daytime window.

    Hours with no same-day daytime predecessor (the first daytime hour of
    each day, or gaps) are NaN and should be left out of scoring.
    """
    s = ts.frame[column].astype(np.float64)
    prev_time = s.index - pd.Timedelta(hours=1)
    lookup = s[~s.index.duplicated()]
    prev = lookup.reindex(prev_time).to_numpy()
    ok = (prev_time.normalize() == s.index.normalize()) & (prev_time.hour >= DAY_START_HOUR) & (
        prev_time.hour <= DAY_END_HOUR
    )
    return pd.Series(np.where(ok, prev, np.nan), index=s.index, name=f"persist_{column}")
