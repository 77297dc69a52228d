"""CEC five-parameter single-diode module model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

logger = logging.getLogger(__name__)

BOLTZMANN_EV = 8.617333262e-05  # eV/K
EG_REF = 1.121  # eV, crystalline silicon
DEG_DT = -0.0002677
T_REF = 298.15
IRRAD_REF = 1000.0
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModuleParamsCEC:
    name: str
    n_s: int
    i_l_ref: float
    i_o_ref: float
    r_s: float
    r_sh_ref: float
    a_ref: float
    alpha_sc: float
    adjust: float
    stc: float
    v_oc_ref: float
    i_sc_ref: float
    v_mp_ref: float
    i_mp_ref: float
    beta_oc: float = 0.0
    gamma_r: float = 0.0
    t_noct: float = 45.0  # carried, not used by the Faiman thermal model
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("r_s", "r_sh_ref", "a_ref"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{self.name}: {name} must be positive")
        if self.i_o_ref < 0:
            raise ValueError(f"{self.name}: i_o_ref must be non-negative")

    def resolved(self) -> "ModuleParamsCEC":
        """Return a copy with a usable (positive) saturation current.

        Datasheet tables sometimes print ``I_o_ref`` rounded to 0.0. In that
        case it is recovered from the reference open-circuit condition
        I(V_oc_ref) = 0.
        """
        if self.i_o_ref > 0:
            return self
        i_o = (self.i_l_ref - self.v_oc_ref / self.r_sh_ref) / math.expm1(self.v_oc_ref / self.a_ref)
        logger.info("%s: recovered I_o_ref = %.6e A from V_oc_ref", self.name, i_o)
        return replace(self, i_o_ref=i_o)


def calcparams_cec(params: ModuleParamsCEC, effective_irradiance, temp_cell):
    """Translate reference parameters to operating conditions (De Soto with
    the CEC ``Adjust`` factor on the short-circuit temperature coefficient).

    Returns ``(i_l, i_o, r_s, r_sh, n_ns_vth)`` as arrays.
    """
    p = params.resolved()
    s = np.asarray(effective_irradiance, dtype=np.float64)
    tk = np.asarray(temp_cell, dtype=np.float64) + 273.15
    alpha = p.alpha_sc * (1.0 - p.adjust / 100.0)
    eg = EG_REF * (1.0 + DEG_DT * (tk - T_REF))
    n_ns_vth = p.a_ref * tk / T_REF
    i_l = s / IRRAD_REF * (p.i_l_ref + alpha * (tk - T_REF))
    i_o = p.i_o_ref * (tk / T_REF) ** 3 * np.exp(EG_REF / (BOLTZMANN_EV * T_REF) - eg / (BOLTZMANN_EV * tk))
    with np.errstate(divide="ignore"):
        r_sh = np.where(s > 0, p.r_sh_ref * IRRAD_REF / np.where(s > 0, s, 1.0), np.inf)
    r_s = np.full_like(s, p.r_s)
    return np.broadcast_arrays(i_l, i_o, r_s, r_sh, n_ns_vth)


def diode_residual(v, i, i_l, i_o, r_s, r_sh, a):
    """Single-diode equation residual, amperes; zero on the I-V curve."""
    vd = v + i * r_s
    return i_l - i_o * np.expm1(vd / a) - vd / r_sh - i


def _bracketed_newton(f_df, lo, hi, x, tol, max_iter=200):
    """Vectorised Newton on a decreasing function with bisection fallback."""
    lo, hi, x = lo.copy(), hi.copy(), x.copy()
    for _ in range(max_iter):
        f, df = f_df(x)
        if np.all(np.abs(f) < tol):
            return x
        pos = f > 0
        lo = np.where(pos, x, lo)
        hi = np.where(pos, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - f / df
        bad = ~((step > lo) & (step < hi)) | ~np.isfinite(step)
        x = np.where(np.abs(f) < tol, x, np.where(bad, 0.5 * (lo + hi), step))
    f, _ = f_df(x)
    if np.any(np.abs(f) >= tol * 10):
        raise ConvergenceError(f"Newton solve did not converge; max residual {np.max(np.abs(f)):.3e}")
    return x


def current_at_voltage(v, i_l, i_o, r_s, r_sh, a, tol=1e-12):
    """Terminal current for voltages in [0, V_oc]."""
    v = np.asarray(v, dtype=np.float64)

    def f_df(i):
        vd = v + i * r_s
        e = np.exp(vd / a)
        f = i_l - i_o * (e - 1.0) - vd / r_sh - i
        df = -i_o * e * r_s / a - r_s / r_sh - 1.0
        return f, df

    lo = np.zeros_like(v)
    hi = np.maximum(i_l, 0.0) + 1e-12
    return _bracketed_newton(f_df, lo, hi, 0.5 * hi, tol)


def open_circuit_voltage(i_l, i_o, r_sh, a, tol=1e-12):
    def f_df(v):
        e = np.exp(v / a)
        return i_l - i_o * (e - 1.0) - v / r_sh, -i_o * e / a - 1.0 / r_sh

    hi = a * np.log1p(i_l / i_o) + 1e-9
    lo = np.zeros_like(hi)
    return _bracketed_newton(f_df, lo, hi, hi, tol)


def single_diode_max_power(params: ModuleParamsCEC, effective_irradiance, temp_cell, tol_v=1e-9):
    """Maximum power point plus V_oc and I_sc at the given conditions.

    The current at each voltage comes from a bracketed Newton solve of the
    single-diode equation; the MPP is located by golden-section search of
    P(V) on [0, V_oc]. Points with zero irradiance return all zeros.

    Returns a dict of arrays: ``v_mp, i_mp, p_mp, v_oc, i_sc``.
    """
    s = np.atleast_1d(np.asarray(effective_irradiance, dtype=np.float64))
    t = np.broadcast_to(np.asarray(temp_cell, dtype=np.float64), s.shape)
    if np.any(s < 0):
        raise ValueError("effective irradiance must be non-negative")
    out = {k: np.zeros(s.shape) for k in ("v_mp", "i_mp", "p_mp", "v_oc", "i_sc")}
    lit = s > 0
    if not lit.any():
        return out
    i_l, i_o, r_s, r_sh, a = (x[lit] for x in calcparams_cec(params, s, t))

    v_oc = open_circuit_voltage(i_l, i_o, r_sh, a)
    i_sc = current_at_voltage(np.zeros_like(v_oc), i_l, i_o, r_s, r_sh, a)

    def power(v):
        return v * current_at_voltage(v, i_l, i_o, r_s, r_sh, a)

    lo, hi = np.zeros_like(v_oc), v_oc.copy()
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    p1, p2 = power(x1), power(x2)
    while np.max(hi - lo) > tol_v:
        left = p1 > p2  # maximum lies in [lo, x2]
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        nx1 = np.where(left, hi - GOLDEN * (hi - lo), x2)
        nx2 = np.where(left, x1, lo + GOLDEN * (hi - lo))
        # one new evaluation per lane; the other point is reused
        new_x = np.where(left, nx1, nx2)
        new_p = power(new_x)
        p1, p2 = np.where(left, new_p, p2), np.where(left, p1, new_p)
        x1, x2 = nx1, nx2
    v_mp = 0.5 * (lo + hi)
    i_mp = current_at_voltage(v_mp, i_l, i_o, r_s, r_sh, a)
    resid = np.abs(diode_residual(v_mp, i_mp, i_l, i_o, r_s, r_sh, a))
    if np.any(resid >= 1e-10):
        raise ConvergenceError(f"MPP residual {resid.max():.3e} A exceeds 1e-10 A")
    out["v_mp"][lit], out["i_mp"][lit], out["p_mp"][lit] = v_mp, i_mp, v_mp * i_mp
    out["v_oc"][lit], out["i_sc"][lit] = v_oc, i_sc
    return out
