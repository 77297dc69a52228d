"""Plane-of-array transposition with the Hay-Davies sky model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# floor for cos(zenith) in the beam projection ratio
COS_ZENITH_FLOOR = float(np.cos(np.radians(87.0)))


@dataclass(frozen=True)
class ArrayGeometry:
    tilt: float  # degrees from horizontal
    azimuth: float = 180.0  # degrees east of north the array faces
    albedo: float | None = None  # None -> use the per-record surface albedo

    def __post_init__(self):
        if not 0 <= self.tilt <= 90:
            raise ValueError(f"tilt must be within [0, 90], got {self.tilt}")
        if not 0 <= self.azimuth < 360:
            raise ValueError(f"azimuth must be within [0, 360), got {self.azimuth}")
        if self.albedo is not None and not 0 <= self.albedo <= 1:
            raise ValueError(f"albedo must be within [0, 1], got {self.albedo}")


def cos_aoi(zenith, azimuth, tilt, array_azimuth):
    z, a = np.radians(zenith), np.radians(azimuth)
    b, g = np.radians(tilt), np.radians(array_azimuth)
    c = np.cos(z) * np.cos(b) + np.sin(z) * np.sin(b) * np.cos(a - g)
    return np.clip(c, -1.0, 1.0)


def angle_of_incidence(zenith, azimuth, tilt, array_azimuth):
    """Angle between the sun vector and the array normal, degrees."""
    return np.degrees(np.arccos(cos_aoi(zenith, azimuth, tilt, array_azimuth)))


def hay_davies_sky_diffuse(dhi, dni, dni_extra, zenith, aoi, tilt):
    """Sky diffuse irradiance on the tilted plane.

    ``dhi * (A * Rb + (1 - A) * (1 + cos(tilt)) / 2)`` with anisotropy
    index ``A = dni / dni_extra`` and ``Rb = max(cos aoi, 0) / max(cos
    zenith, cos 87deg)``.
    """
    dhi = np.asarray(dhi, dtype=np.float64)
    a = np.asarray(dni, dtype=np.float64) / np.asarray(dni_extra, dtype=np.float64)
    rb = np.maximum(np.cos(np.radians(aoi)), 0.0) / np.maximum(np.cos(np.radians(zenith)), COS_ZENITH_FLOOR)
    iso = (1.0 + np.cos(np.radians(tilt))) / 2.0
    return np.maximum(dhi * (a * rb + (1.0 - a) * iso), 0.0)


def poa_components(ghi, dhi, dni, dni_extra, zenith, azimuth, geometry: ArrayGeometry, albedo=None):
    """Beam, sky-diffuse, ground-reflected and total POA irradiance.

    Components are zero whenever the sun is at or below the horizon.
    ``albedo`` overrides ``geometry.albedo`` and may be per-record.
    """
    if albedo is None:
        albedo = geometry.albedo if geometry.albedo is not None else 0.25
    ghi, dhi, dni, zenith = (np.asarray(v, dtype=np.float64) for v in (ghi, dhi, dni, zenith))
    up = zenith < 90.0
    c_aoi = cos_aoi(zenith, azimuth, geometry.tilt, geometry.azimuth)
    aoi = np.degrees(np.arccos(c_aoi))
    beam = np.where(up, dni * np.maximum(c_aoi, 0.0), 0.0)
    sky = np.where(up, hay_davies_sky_diffuse(dhi, dni, dni_extra, zenith, aoi, geometry.tilt), 0.0)
    ground = np.where(up, ghi * np.asarray(albedo, dtype=np.float64)
                      * (1.0 - np.cos(np.radians(geometry.tilt))) / 2.0, 0.0)
    return {
        "poa_global": beam + sky + ground,
        "poa_beam": beam,
        "poa_sky_diffuse": sky,
        "poa_ground_diffuse": ground,
        "aoi": aoi,
    }


def faiman_cell_temp(poa_global, temp_air, wind_speed, u0: float = 25.0, u1: float = 6.84):
    """Module temperature ``temp_air + poa / (u0 + u1 * wind_speed)``, degC."""
    return np.asarray(temp_air, dtype=np.float64) + np.asarray(poa_global, dtype=np.float64) / (
        u0 + u1 * np.asarray(wind_speed, dtype=np.float64)
    )
