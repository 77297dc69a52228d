"""Run configuration file handling."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .forest import ForestParams
from .preprocess import SplitSpec, parse_month_range


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    data: Path
    output_dir: Path
    split: SplitSpec
    forest: ForestParams = ForestParams()
    header_mode: str = "auto"
    system: Path | None = None  # JSON system spec; None -> bundled defaults
    modules: tuple = ("trina", "canadian")
    seasons: tuple = ("annual", "wet", "dry")
    shift_minutes: int = 30
    extra: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, raw: dict, base: Path = Path(".")) -> "RunConfig":
        raw = dict(raw)
        split = dict(raw.pop("split", {}))
        if "seed" not in split:
            raise ConfigError("split.seed is mandatory")
        wet = split.pop("wet_months", "5-10")
        wet = parse_month_range(wet) if isinstance(wet, str) else frozenset(wet)
        split.pop("dry_months", None)
        try:
            spec = SplitSpec.with_wet_months(
                wet,
                validation_year=int(split.pop("validation_year", 2022)),
                train_fraction=float(split.pop("train_fraction", 0.8)),
                shuffle_seed=int(split.pop("seed")),
                chronological=bool(split.pop("chronological", False)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if split:
            raise ConfigError(f"unknown split keys {sorted(split)}")
        forest = ForestParams(**raw.pop("forest", {}))
        for key in ("data", "output_dir"):
            if key not in raw:
                raise ConfigError(f"{key} is mandatory")

        def resolve(p):
            p = Path(p).expanduser()
            return p if p.is_absolute() else (base / p)

        data = resolve(raw.pop("data"))
        out = resolve(raw.pop("output_dir"))
        system = raw.pop("system", None)
        cfg = cls(
            data=data,
            output_dir=out,
            split=spec,
            forest=forest,
            header_mode=raw.pop("header_mode", "auto"),
            system=resolve(system) if system else None,
            modules=tuple(raw.pop("modules", ("trina", "canadian"))),
            seasons=tuple(raw.pop("seasons", ("annual", "wet", "dry"))),
            shift_minutes=int(raw.pop("shift_minutes", 30)),
        )
        if raw:
            raise ConfigError(f"unknown config keys {sorted(raw)}")
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(raw, base=path.parent)

    def check_paths(self) -> None:
        if not self.data.exists():
            raise ConfigError(f"data path {self.data} does not exist")
        if self.system is not None and not self.system.exists():
            raise ConfigError(f"system spec {self.system} does not exist")

    def to_dict(self) -> dict:
        split = self.split
        return {
            "data": str(self.data),
            "output_dir": str(self.output_dir),
            "header_mode": self.header_mode,
            "split": {
                "seed": split.shuffle_seed,
                "train_fraction": split.train_fraction,
                "validation_year": split.validation_year,
                "wet_months": sorted(split.wet_months),
                "chronological": split.chronological,
            },
            "forest": asdict(self.forest),
            "system": str(self.system) if self.system else None,
            "modules": list(self.modules),
            "seasons": list(self.seasons),
            "shift_minutes": self.shift_minutes,
        }

    def digest(self) -> str:
        # n_jobs and output location do not change results
        d = self.to_dict()
        d["forest"].pop("n_jobs", None)
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def override(self, **changes) -> "RunConfig":
        return replace(self, **changes)
