"""Thermostatted kinetic models: closed-form steady states, exact particle
simulation, grid solvers and the coupling diagnostics around them."""

from .model import (DomainSpec, ModelConfig, PhasePoint, Reservoir, ReservoirSet, TemperatureSchedule,
                    equilibrium_parameters, maxwellian_density, temperature_at)
from .steady_state import (MixingMeasure, NessDensity, bgk_ness_density, fp_mixing_density, fp_ness_density,
                           pure_reservoir_ness, stationarity_residual)

__all__ = [
    "DomainSpec", "ModelConfig", "PhasePoint", "Reservoir", "ReservoirSet", "TemperatureSchedule",
    "equilibrium_parameters", "maxwellian_density", "temperature_at",
    "MixingMeasure", "NessDensity", "bgk_ness_density", "fp_mixing_density", "fp_ness_density",
    "pure_reservoir_ness", "stationarity_residual",
]
__version__ = "0.1.0"
