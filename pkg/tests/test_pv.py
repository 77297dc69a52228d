import numpy as np
import pandas as pd
import pvlib
import pytest

from solarcast.pv import (
    IBADAN,
    ArrayGeometry,
    InverterDomainError,
    Location,
    PvSystemSpec,
    angle_of_incidence,
    extraterrestrial_dni,
    faiman_cell_temp,
    hay_davies_sky_diffuse,
    inverter_ac_power,
    load_equipment,
    poa_components,
    simulate_energy,
    single_diode_max_power,
    solar_position,
)
from solarcast.pv.system import MisalignedError

TRINA = load_equipment("trina")
CANADIAN = load_equipment("canadian")
FRONIUS = load_equipment("fronius")


# solar position

def test_zenith_against_spa():
    times = pd.date_range("2020-01-01 00:30", "2022-12-31 23:30", freq="7h")
    ours = solar_position(times, IBADAN)
    ref = pvlib.solarposition.get_solarposition(
        times.tz_localize("Etc/GMT-1"), IBADAN.latitude, IBADAN.longitude, IBADAN.altitude, method="nrel_numpy"
    )
    up = ref["apparent_elevation"].to_numpy() > 5
    dz = np.abs(ours["zenith"].to_numpy() - ref["apparent_zenith"].to_numpy())[up]
    assert dz.max() < 0.05
    daz = np.abs((ours["azimuth"].to_numpy() - ref["azimuth"].to_numpy() + 180) % 360 - 180)[up]
    assert daz.max() < 0.1


def test_equator_equinox_noon():
    loc = Location(0.0, 0.0, 0.0, 0.0)
    day = pd.date_range("2021-03-20 11:00", "2021-03-20 13:00", freq="1min")
    assert solar_position(day, loc)["zenith"].min() < 0.6


def test_out_of_range_years_rejected():
    with pytest.raises(ValueError):
        solar_position(pd.DatetimeIndex(["2080-01-01 12:00"]), IBADAN)


def test_extraterrestrial_matches_spencer():
    times = pd.date_range("2021-01-01 12:00", periods=365, freq="D")
    ref = pvlib.irradiance.get_extra_radiation(times, solar_constant=1367, method="spencer")
    assert np.allclose(extraterrestrial_dni(times), ref.to_numpy(), rtol=1e-9)


# transposition

def _vector(zenith, azimuth):
    z, a = np.radians(zenith), np.radians(azimuth)
    return np.stack([np.sin(z) * np.sin(a), np.sin(z) * np.cos(a), np.cos(z)], axis=-1)


def test_aoi_against_vector_geometry():
    rng = np.random.default_rng(0)
    zen, az = rng.uniform(0, 89, 500), rng.uniform(0, 360, 500)
    tilt, arr_az = rng.uniform(0, 60, 500), rng.uniform(0, 360, 500)
    dots = np.sum(_vector(zen, az) * _vector(tilt, arr_az), axis=-1)
    want = np.degrees(np.arccos(np.clip(dots, -1, 1)))
    assert np.allclose(angle_of_incidence(zen, az, tilt, arr_az), want, atol=1e-7)
    assert np.allclose(angle_of_incidence(zen, az, 0.0, 180.0), zen, atol=1e-7)
    assert angle_of_incidence(30.0, 200.0, 30.0, 200.0) == pytest.approx(0.0, abs=1e-6)


def test_hay_davies_hand_example():
    e0 = 1367.0
    got = hay_davies_sky_diffuse(100.0, 500.0, e0, 30.0, 20.0, 20.0)
    a = 500 / 1367
    want = 100 * (a * np.cos(np.radians(20)) / np.cos(np.radians(30)) + (1 - a) * (1 + np.cos(np.radians(20))) / 2)
    assert got == pytest.approx(want, rel=1e-12)
    assert got == pytest.approx(101.2, abs=0.05)


def test_hay_davies_limits_exact():
    dhi = np.array([50.0, 120.0, 300.0])
    iso = (1 + np.cos(np.radians(25.0))) / 2
    assert np.array_equal(hay_davies_sky_diffuse(dhi, 0.0, 1367.0, 40.0, 35.0, 25.0), dhi * iso)
    # flat plane: aoi == zenith so Rb == 1 and the result is DHI
    got = hay_davies_sky_diffuse(dhi, np.array([100.0, 400.0, 800.0]), 1367.0, 0.0, 0.0, 0.0)
    assert np.array_equal(got, dhi)


def test_hay_davies_against_pvlib():
    rng = np.random.default_rng(1)
    n = 300
    zen, az = rng.uniform(0, 85, n), rng.uniform(0, 360, n)
    dni, dhi = rng.uniform(0, 900, n), rng.uniform(10, 400, n)
    e0 = np.full(n, 1367.0)
    aoi = angle_of_incidence(zen, az, 20.0, 180.0)
    ours = hay_davies_sky_diffuse(dhi, dni, e0, zen, aoi, 20.0)
    ref = pvlib.irradiance.haydavies(20.0, 180.0, dhi, dni, e0, zen, az)
    assert np.allclose(ours, ref, rtol=1e-9, atol=1e-9)


def test_poa_night_and_flat_closure():
    geo = ArrayGeometry(tilt=0.0)
    out = poa_components(500.0, 100.0, 600.0, 1367.0, 95.0, 120.0, geo, albedo=0.2)
    assert all(float(out[k]) == 0.0 for k in ("poa_global", "poa_beam", "poa_sky_diffuse", "poa_ground_diffuse"))
    out = poa_components(500.0, 100.0, 600.0, 1367.0, 30.0, 120.0, geo, albedo=0.2)
    assert float(out["poa_ground_diffuse"]) == 0.0
    assert float(out["poa_global"]) == pytest.approx(600 * np.cos(np.radians(30)) + 100, rel=1e-12)


# thermal

def test_faiman():
    assert faiman_cell_temp(800.0, 25.0, 1.0) == pytest.approx(25 + 800 / 31.84, rel=1e-12)
    assert faiman_cell_temp(800.0, 25.0, 1.0) == pytest.approx(50.13, abs=0.005)
    t_air = np.array([-5.0, 21.3, 40.0])
    assert np.array_equal(faiman_cell_temp(0.0, t_air, np.array([0.0, 3.0, 9.0])), t_air)
    winds = np.linspace(0, 10, 11)
    assert np.all(np.diff(faiman_cell_temp(600.0, 30.0, winds)) < 0)
    ref = pvlib.temperature.faiman(800.0, 25.0, 1.0, u0=25.0, u1=6.84)
    assert faiman_cell_temp(800.0, 25.0, 1.0) == pytest.approx(ref, rel=1e-12)


# module

@pytest.mark.parametrize("module, stc", [(TRINA, 500.332), (CANADIAN, 500.4)])
def test_stc_power(module, stc):
    out = single_diode_max_power(module.resolved(), 1000.0, 25.0)
    assert out["p_mp"][0] == pytest.approx(stc, rel=0.005)


def test_trina_recovered_saturation_current():
    p = TRINA.resolved()
    assert p.i_o_ref > 0
    assert p.i_o_ref == pytest.approx(2.06e-11, rel=0.02)


@pytest.mark.parametrize("module", [TRINA, CANADIAN])
def test_single_diode_against_pvlib(module):
    p = module.resolved()
    irr = np.array([100.0, 250.0, 500.0, 800.0, 1000.0, 1100.0])
    temp = np.array([20.0, 35.0, 45.0, 55.0, 25.0, 60.0])
    params = pvlib.pvsystem.calcparams_cec(
        irr, temp, p.alpha_sc, p.a_ref, p.i_l_ref, p.i_o_ref, p.r_sh_ref, p.r_s, p.adjust
    )
    ref = pvlib.pvsystem.singlediode(*params, method="lambertw")
    ours = single_diode_max_power(p, irr, temp)
    assert np.allclose(ours["p_mp"], ref["p_mp"], rtol=1e-7)
    assert np.allclose(ours["v_oc"], ref["v_oc"], rtol=1e-8)
    assert np.allclose(ours["i_sc"], ref["i_sc"], rtol=1e-8)


def test_pmp_monotone_in_irradiance_and_zero_when_dark():
    irr = np.linspace(100, 1000, 19)
    p = single_diode_max_power(TRINA.resolved(), irr, 30.0)["p_mp"]
    assert np.all(np.diff(p) > 0)
    dark = single_diode_max_power(TRINA.resolved(), np.zeros(3), 25.0)
    assert all(np.all(v == 0) for v in dark.values())


# inverter

def test_inverter_anchors():
    assert inverter_ac_power(FRONIUS.pdco, FRONIUS.vdco, FRONIUS) == 3802.0
    assert inverter_ac_power(10.0, 42.0, FRONIUS) == -8.3
    assert inverter_ac_power(27.8054, 400.0, FRONIUS) == -8.3
    assert inverter_ac_power(2 * FRONIUS.pdco, 400.0, FRONIUS) == FRONIUS.paco
    with pytest.raises(InverterDomainError):
        inverter_ac_power(100.0, 600.0, FRONIUS)


def test_inverter_against_pvlib():
    inv = FRONIUS
    pdc = np.linspace(30, 3800, 40)
    vdc = np.linspace(30, 470, 40)
    ref = pvlib.inverter.sandia(vdc, pdc, {
        "Paco": inv.paco, "Pdco": inv.pdco, "Vdco": inv.vdco, "Pso": inv.pso, "C0": inv.c0,
        "C1": inv.c1, "C2": inv.c2, "C3": inv.c3, "Pnt": inv.pnt,
    })
    assert np.allclose(inverter_ac_power(pdc, vdc, inv), ref, rtol=1e-12, atol=1e-9)


# system

def _day(irr_scale=1.0, date="2022-03-15"):
    idx = pd.date_range(f"{date} 07:00", periods=12, freq="h")
    shape = np.sin(np.linspace(0.2, np.pi - 0.2, 12))
    pred = pd.DataFrame({"pred_ghi": 800 * shape, "pred_dni": 600 * shape, "pred_dhi": 150 * shape}, index=idx)
    weather = pd.DataFrame({"temperature": 30.0, "wind_speed": 1.5, "surface_albedo": 0.18}, index=idx)
    return pred * irr_scale, weather


def test_all_dark_day_gives_zero_energy():
    pred, weather = _day(0.0)
    hourly, daily = simulate_energy(pred, weather, PvSystemSpec.default("trina"), -30)
    assert daily.iloc[0] == 0.0
    assert np.all(hourly["p_ac"] == -FRONIUS.pnt)


def test_modules_similar_and_loss_scaling():
    pred, weather = _day()
    _, trina = simulate_energy(pred, weather, PvSystemSpec.default("trina"), -30)
    _, canadian = simulate_energy(pred, weather, PvSystemSpec.default("canadian"), -30)
    assert trina.iloc[0] > 1.0
    assert abs(trina.iloc[0] / canadian.iloc[0] - 1) < 0.05
    from dataclasses import replace

    lossy = replace(PvSystemSpec.default("trina"), loss_fraction=0.5)
    hourly_full, _ = simulate_energy(pred, weather, PvSystemSpec.default("trina"), -30)
    hourly_half, _ = simulate_energy(pred, weather, lossy, -30)
    assert np.allclose(hourly_half["effective_irradiance"], hourly_full["effective_irradiance"] / 2)
    lit = hourly_full["p_dc"] > 0
    assert lit.sum() >= 10
    assert (hourly_half["p_dc"][lit] < hourly_full["p_dc"][lit]).all()


def test_misaligned_inputs():
    pred, weather = _day()
    with pytest.raises(MisalignedError):
        simulate_energy(pred, weather.iloc[1:], PvSystemSpec.default("trina"))


def test_system_spec_round_trip(tmp_path):
    spec = PvSystemSpec.default("canadian")
    back = PvSystemSpec.from_dict(spec.to_dict() | {"module": spec.to_dict()["module"],
                                                      "inverter": spec.to_dict()["inverter"]})
    assert back.module == spec.module and back.inverter == spec.inverter
    with pytest.raises(ValueError):
        load_equipment({"kind": "battery"})
