"""Planar cable-driven payload simulation and force-control library."""

from .core import (
    GRAVITY,
    ModuleGeometry,
    PayloadModel,
    PlanarPose,
    PlanarTwist,
    TensionVector,
    Wrench,
    ZERO_WRENCH,
    normalize_angle,
    planar_wrench,
)
from .errors import (
    CableSimError,
    DegenerateGeometryError,
    IncomparableRunsError,
    InvalidProblemError,
    NoSolutionError,
    NonConvergenceError,
    ScenarioFormatError,
    SimulationDivergedError,
)

__version__ = "0.1.0"

__all__ = [
    "GRAVITY",
    "ModuleGeometry",
    "PayloadModel",
    "PlanarPose",
    "PlanarTwist",
    "TensionVector",
    "Wrench",
    "ZERO_WRENCH",
    "normalize_angle",
    "planar_wrench",
    "CableSimError",
    "DegenerateGeometryError",
    "IncomparableRunsError",
    "InvalidProblemError",
    "NoSolutionError",
    "NonConvergenceError",
    "ScenarioFormatError",
    "SimulationDivergedError",
    "__version__",
]
