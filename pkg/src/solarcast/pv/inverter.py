"""Sandia grid-tied inverter performance model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InverterDomainError(ValueError):
    pass


@dataclass(frozen=True)
class InverterParamsSNL:
    name: str
    paco: float
    pdco: float
    vdco: float
    pso: float
    c0: float
    c1: float
    c2: float
    c3: float
    pnt: float
    vdcmax: float
    idcmax: float = float("nan")
    mppt_low: float = 0.0
    mppt_high: float = float("inf")
    vac: float = float("nan")

    def __post_init__(self):
        if not self.paco < self.pdco:
            raise ValueError(f"{self.name}: Paco must be below Pdco")
        if not self.pso > 0:
            raise ValueError(f"{self.name}: Pso must be positive")
        if not self.mppt_low < self.mppt_high:
            raise ValueError(f"{self.name}: MPPT window is empty")


def inverter_ac_power(p_dc, v_dc, inv: InverterParamsSNL):
    """AC output, W, clipped at ``paco``; ``-pnt`` when ``p_dc <= pso``."""
    p_dc = np.asarray(p_dc, dtype=np.float64)
    v_dc = np.asarray(v_dc, dtype=np.float64)
    if np.any(v_dc < 0) or np.any(v_dc > inv.vdcmax):
        raise InverterDomainError(f"DC voltage outside [0, {inv.vdcmax}] V")
    dv = v_dc - inv.vdco
    a = inv.pdco * (1.0 + inv.c1 * dv)
    b = inv.pso * (1.0 + inv.c2 * dv)
    c = inv.c0 * (1.0 + inv.c3 * dv)
    if np.any(a <= b):
        raise InverterDomainError("Pdco-derived term does not exceed Pso-derived term at this voltage")
    x = p_dc - b
    ac = inv.paco * x / (a - b) - c * (a - b) * x + c * x * x
    ac = np.minimum(ac, inv.paco)
    return np.where(p_dc <= inv.pso, -inv.pnt, ac)
