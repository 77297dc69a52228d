"""Low-precision solar ephemeris (Michalsky 1988, Astronomical Almanac).

Stated accuracy is 0.01 degree for 1950-2050. Zenith is apparent, i.e.
it includes the almanac's refraction correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

SOLAR_CONSTANT = 1367.0
VALID_YEARS = (1950, 2050)


@dataclass(frozen=True)
class Location:
    latitude: float
    longitude: float
    altitude: float = 0.0
    timezone_offset: float = 0.0  # hours east of UTC

    def __post_init__(self):
        if abs(self.latitude) > 90 or abs(self.longitude) > 180:
            raise ValueError(f"bad coordinates ({self.latitude}, {self.longitude})")


IBADAN = Location(latitude=7.4515, longitude=3.8899, altitude=227.0, timezone_offset=1.0)


def _utc_julian(times, timezone_offset: float) -> np.ndarray:
    times = pd.DatetimeIndex(times)
    if times.tz is not None:
        times = times.tz_convert("UTC").tz_localize(None)
    else:
        times = times - pd.Timedelta(hours=timezone_offset)
    years = times.year
    if len(times) and (years.min() < VALID_YEARS[0] or years.max() > VALID_YEARS[1]):
        raise ValueError(f"solar position only valid for {VALID_YEARS[0]}-{VALID_YEARS[1]}")
    seconds = times.asi8 / 1e9 if times.asi8.dtype.kind == "i" else times.asi8
    return seconds / 86400.0 + 2440587.5


def solar_position(times, location: Location) -> pd.DataFrame:
    """Apparent zenith, elevation and azimuth (degrees, azimuth east of north).

    ``times`` are naive local clock times at ``location.timezone_offset``,
    or tz-aware timestamps.
    """
    index = pd.DatetimeIndex(times)
    jd = _utc_julian(index, location.timezone_offset)
    t = jd - 2451545.0

    mnlong = np.mod(280.460 + 0.9856474 * t, 360.0)
    mnanom = np.radians(np.mod(357.528 + 0.9856003 * t, 360.0))
    eclong = np.radians(np.mod(mnlong + 1.915 * np.sin(mnanom) + 0.020 * np.sin(2 * mnanom), 360.0))
    oblqec = np.radians(23.439 - 0.0000004 * t)
    ra = np.mod(np.arctan2(np.cos(oblqec) * np.sin(eclong), np.cos(eclong)), 2 * np.pi)
    dec = np.arcsin(np.sin(oblqec) * np.sin(eclong))

    ut_hours = np.mod(jd - 0.5, 1.0) * 24.0
    gmst = np.mod(6.697375 + 0.0657098242 * t + ut_hours, 24.0)
    lmst = np.radians(np.mod(gmst + location.longitude / 15.0, 24.0) * 15.0)
    ha = np.mod(lmst - ra + np.pi, 2 * np.pi) - np.pi

    lat = np.radians(location.latitude)
    el = np.arcsin(np.sin(dec) * np.sin(lat) + np.cos(dec) * np.cos(lat) * np.cos(ha))
    az = np.degrees(np.arctan2(-np.cos(dec) * np.sin(ha),
                               np.sin(dec) * np.cos(lat) - np.cos(dec) * np.sin(lat) * np.cos(ha)))
    az = np.mod(az, 360.0)

    el_deg = np.degrees(el)
    # no refraction once the sun is well below the horizon (as SPA does)
    refrac = np.where(
        el_deg > -0.56,
        3.51561 * (0.1594 + 0.0196 * el_deg + 0.00002 * el_deg**2) / (1 + 0.505 * el_deg + 0.0845 * el_deg**2),
        0.0,
    )
    refrac = np.where(el_deg + refrac > 90.0, 0.0, refrac)
    apparent_el = el_deg + refrac
    return pd.DataFrame(
        {
            "zenith": 90.0 - apparent_el,
            "elevation": apparent_el,
            "azimuth": az,
            "declination": np.degrees(dec),
            "hour_angle": np.degrees(ha),
        },
        index=index,
    )


def extraterrestrial_dni(times) -> np.ndarray:
    """Solar constant scaled by Spencer's Earth-Sun distance series."""
    doy = pd.DatetimeIndex(times).dayofyear.to_numpy(np.float64)
    b = 2 * np.pi * (doy - 1) / 365.0
    return SOLAR_CONSTANT * (1.00011 + 0.034221 * np.cos(b) + 0.00128 * np.sin(b)
                             + 0.000719 * np.cos(2 * b) + 0.000077 * np.sin(2 * b))
