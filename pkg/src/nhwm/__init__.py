"""Split-step simulations of loss-assisted four-wave mixing in condensates.

Internal units are um, ms and hbar = 1; see :mod:`nhwm.units`.
"""

__version__ = "0.1.0"

from .units import UNITS, PhysicalParams, physical_params, rubidium87_params, hz_to_rad_per_ms
from .grid import Grid, WaveField, to_momentum, to_position, read_snapshot, write_snapshot
from .solver import (LossModel, NumericalError, SimState, energy, evolve, momentum_density,
                     signal_strength, step)
from .three_mode import ThreeModeParams, ThreeModeState, eigenvalues, gain_approx, integrate_three_mode
from .eit import LambdaParams, loss_spectrum, steady_state
from .scenarios import ScenarioConfig, build, default_eit_params
from .analysis import compare_runs, fit_growth_rate
from .config import ConfigError, RunConfig, dump_config, parse_config

__all__ = [
    "__version__", "UNITS", "PhysicalParams", "physical_params", "rubidium87_params", "hz_to_rad_per_ms",
    "Grid", "WaveField", "to_momentum", "to_position", "read_snapshot", "write_snapshot",
    "LossModel", "NumericalError", "SimState", "energy", "evolve", "momentum_density", "signal_strength",
    "step", "ThreeModeParams", "ThreeModeState", "eigenvalues", "gain_approx", "integrate_three_mode",
    "LambdaParams", "loss_spectrum", "steady_state", "ScenarioConfig", "build", "default_eit_params",
    "compare_runs", "fit_growth_rate", "ConfigError", "RunConfig", "dump_config", "parse_config",
]
