"""Scenario simulator for public-safety networks with mmWave and LTE links."""

from .errors import (GroupConstraintError, MobilityError, PlacementError, PscSimError,
                     RadioConfigError, TraceError)
from .geometry import Box, Point2
from .scenario import (ChemConfig, MvaConfig, ScenarioSpec, SchoolConfig, gen_chemical_plant,
                       gen_mva, gen_school_shooting)
from .simcore import MetricsReport, Simulation, run

__version__ = "0.1.0"

__all__ = [
    "Box", "Point2", "ScenarioSpec", "MetricsReport", "Simulation", "run",
    "MvaConfig", "ChemConfig", "SchoolConfig",
    "gen_mva", "gen_chemical_plant", "gen_school_shooting",
    "PscSimError", "PlacementError", "MobilityError", "GroupConstraintError",
    "RadioConfigError", "TraceError",
]
