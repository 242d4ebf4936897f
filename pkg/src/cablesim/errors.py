"""Exception types shared across the simulator and control stack."""

from __future__ import annotations


class CableSimError(Exception):
    """Base class for all cablesim-specific failures."""


class DegenerateGeometryError(CableSimError, ValueError):
    """Cable anchor and attachment (nearly) coincide; no direction defined."""


class NoSolutionError(CableSimError, ValueError):
    """Cable lengths are geometrically inconsistent (triangle inequality)."""


class InvalidProblemError(CableSimError, ValueError):
    """The quadratic cost is not strictly convex; the solver refuses it."""


class NonConvergenceError(CableSimError, RuntimeError):
    """Solver hit its iteration cap. Carries the best iterate found."""

    def __init__(self, message: str, best, iterations: int):
        super().__init__(message)
        self.best = best
        self.iterations = iterations


class SimulationDivergedError(CableSimError, RuntimeError):
    """Integration produced a non-finite state. Carries the last good state."""

    def __init__(self, message: str, last_state, tick: int):
        super().__init__(message)
        self.last_state = last_state
        self.tick = tick


class IncomparableRunsError(CableSimError, ValueError):
    """Two run logs do not share trajectory metadata and cannot be compared."""


class ScenarioFormatError(CableSimError, ValueError):
    """Scenario file failed validation. Message names the offending key."""
