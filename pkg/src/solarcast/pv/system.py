"""PV system description, bundled equipment files, and hourly simulation."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from .inverter import InverterParamsSNL, inverter_ac_power
from .irradiance import ArrayGeometry, faiman_cell_temp, poa_components
from .module import ModuleParamsCEC, single_diode_max_power
from .solarpos import IBADAN, Location, extraterrestrial_dni, solar_position

logger = logging.getLogger(__name__)

BUNDLED = {
    "trina": "trina_tsm_500de18m_ii.json",
    "canadian": "canadian_cs3y_500ms.json",
    "fronius": "fronius_primo_gen24_3_8.json",
}


class MisalignedError(ValueError):
    pass


def _build(cls, data: dict):
    names = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in data.items() if k in names})


def load_equipment(ref):
    """Load a module or inverter from a bundled key or a JSON path."""
    if isinstance(ref, dict):
        data = ref
    elif str(ref) in BUNDLED:
        data = json.loads(resources.files(__package__).joinpath("data", BUNDLED[str(ref)]).read_text())
    else:
        data = json.loads(Path(ref).read_text())
    kind = data.get("kind")
    if kind == "module":
        return _build(ModuleParamsCEC, data)
    if kind == "inverter":
        return _build(InverterParamsSNL, data)
    raise ValueError(f"equipment file must declare kind 'module' or 'inverter', got {kind!r}")


@dataclass(frozen=True)
class CellTempParams:
    u0: float = 25.0
    u1: float = 6.84

    def __post_init__(self):
        if not self.u0 > 0 or self.u1 < 0:
            raise ValueError("Faiman coefficients need u0 > 0 and u1 >= 0")


@dataclass(frozen=True)
class PvSystemSpec:
    module: ModuleParamsCEC
    inverter: InverterParamsSNL
    location: Location = IBADAN
    geometry: ArrayGeometry = field(default_factory=lambda: ArrayGeometry(tilt=IBADAN.latitude))
    thermal: CellTempParams = CellTempParams()
    loss_fraction: float = 0.0
    modules_per_string: int = 1
    strings: int = 1

    def __post_init__(self):
        if not 0 <= self.loss_fraction < 1:
            raise ValueError("loss_fraction must be within [0, 1)")

    @classmethod
    def default(cls, module: str = "trina") -> "PvSystemSpec":
        return cls(module=load_equipment(module), inverter=load_equipment("fronius"))

    @classmethod
    def from_dict(cls, data: dict) -> "PvSystemSpec":
        kw = {
            "module": load_equipment(data.get("module", "trina")),
            "inverter": load_equipment(data.get("inverter", "fronius")),
        }
        if "location" in data:
            kw["location"] = Location(**data["location"])
        if "array" in data:
            kw["geometry"] = ArrayGeometry(**data["array"])
        elif "location" in data:
            kw["geometry"] = ArrayGeometry(tilt=abs(kw["location"].latitude))
        if "thermal" in data:
            kw["thermal"] = CellTempParams(**data["thermal"])
        for key in ("loss_fraction", "modules_per_string", "strings"):
            if key in data:
                kw[key] = data[key]
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "PvSystemSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["module"]["kind"] = "module"
        out["inverter"]["kind"] = "inverter"
        return out

    def with_module(self, module) -> "PvSystemSpec":
        from dataclasses import replace

        return replace(self, module=load_equipment(module) if not isinstance(module, ModuleParamsCEC) else module)


def _irradiance_columns(predictions: pd.DataFrame) -> dict:
    out = {}
    for comp in ("ghi", "dni", "dhi"):
        for name in (f"pred_{comp}", comp):
            if name in predictions:
                out[comp] = predictions[name].to_numpy(np.float64)
                break
        else:
            raise KeyError(f"predictions need a {comp!r} or 'pred_{comp}' column")
    return out


def simulate_hourly(predictions: pd.DataFrame, weather: pd.DataFrame, system: PvSystemSpec,
                    solar_time_offset_minutes: float = 0.0) -> pd.DataFrame:
    """Hourly POA, cell temperature, DC and AC power.

    ``weather`` needs ``temperature`` and ``wind_speed`` and, unless the
    array fixes an albedo, ``surface_albedo``. Its index must match the
    prediction index exactly. Solar position is evaluated at
    ``index + solar_time_offset_minutes``, which undoes an earlier
    timestamp shift so the sun matches the instant the irradiance
    describes.
    """
    if not predictions.index.equals(weather.index):
        raise MisalignedError("prediction and weather timestamps differ")
    irr = _irradiance_columns(predictions)
    missing = sum(int(np.isnan(v).sum()) for v in irr.values())
    if missing:
        logger.warning("%d missing irradiance value(s) treated as zero", missing)
    irr = {k: np.nan_to_num(v, nan=0.0) for k, v in irr.items()}

    index = pd.DatetimeIndex(predictions.index)
    sun_times = index + pd.Timedelta(minutes=solar_time_offset_minutes)
    sun = solar_position(sun_times, system.location)
    albedo = None if system.geometry.albedo is not None else weather["surface_albedo"].to_numpy(np.float64)
    poa = poa_components(irr["ghi"], irr["dhi"], irr["dni"], extraterrestrial_dni(sun_times),
                         sun["zenith"].to_numpy(), sun["azimuth"].to_numpy(), system.geometry, albedo)
    t_cell = faiman_cell_temp(poa["poa_global"], weather["temperature"].to_numpy(np.float64),
                              weather["wind_speed"].to_numpy(np.float64), system.thermal.u0, system.thermal.u1)
    effective = poa["poa_global"] * (1.0 - system.loss_fraction)
    mpp = single_diode_max_power(system.module, effective, t_cell)
    p_dc = mpp["p_mp"] * system.modules_per_string * system.strings
    v_dc = mpp["v_mp"] * system.modules_per_string
    p_ac = inverter_ac_power(p_dc, v_dc, system.inverter)
    return pd.DataFrame(
        {
            "g_poa": poa["poa_global"],
            "effective_irradiance": effective,
            "cell_temp": t_cell,
            "v_dc": v_dc,
            "p_dc": p_dc,
            "p_ac": p_ac,
        },
        index=index,
    )


def daily_energy(hourly: pd.DataFrame) -> pd.Series:
    """kWh per calendar day from hourly AC power (night tare excluded)."""
    ac = hourly["p_ac"].clip(lower=0.0)
    energy = ac.groupby(ac.index.normalize()).sum() / 1000.0
    energy.index = pd.DatetimeIndex(energy.index, name="date")
    return energy.rename("energy_kwh")


def simulate_energy(predictions: pd.DataFrame, weather: pd.DataFrame, system: PvSystemSpec,
                    solar_time_offset_minutes: float = 0.0):
    """Return ``(hourly frame, daily kWh series)``."""
    hourly = simulate_hourly(predictions, weather, system, solar_time_offset_minutes)
    return hourly, daily_energy(hourly)
