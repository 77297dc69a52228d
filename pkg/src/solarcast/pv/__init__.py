from .inverter import InverterDomainError, InverterParamsSNL, inverter_ac_power
from .irradiance import ArrayGeometry, angle_of_incidence, faiman_cell_temp, hay_davies_sky_diffuse, poa_components
from .module import ConvergenceError, ModuleParamsCEC, calcparams_cec, single_diode_max_power
from .solarpos import IBADAN, Location, extraterrestrial_dni, solar_position
from .system import CellTempParams, MisalignedError, PvSystemSpec, daily_energy, load_equipment, simulate_energy

__all__ = [
    "ArrayGeometry", "CellTempParams", "ConvergenceError", "IBADAN", "InverterDomainError",
    "InverterParamsSNL", "Location", "MisalignedError", "ModuleParamsCEC", "PvSystemSpec",
    "angle_of_incidence", "calcparams_cec", "daily_energy", "extraterrestrial_dni",
    "faiman_cell_temp", "hay_davies_sky_diffuse", "inverter_ac_power", "load_equipment",
    "poa_components", "simulate_energy", "single_diode_max_power", "solar_position",
]
