"""Two-stage solar irradiance forecasting and PV energy simulation."""

__version__ = "0.1.0"
