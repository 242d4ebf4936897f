"""Non-ideal tension source: 1 kHz tension PID with feedforward, a
Karnopp-style stick/slip friction latch, viscous drag, and output
slew/saturation limits.

The friction disturbance depends on cable velocity only, never on the
commanded tension level, so tension error distributions are identical
across command magnitudes (as long as the output stays off its clamps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ActuatorConfig:
    """Inner-loop gains and friction/saturation parameters.

    Defaults are tuned so a 50 N step rises (10-90%) in well under 75 ms
    and settles to +/-2 N in under 100 ms, with the +/-10 N zero-velocity
    stiction band; they are frozen as the package-wide non-ideal actuator.
    """

    kp: float = 0.5
    ki: float = 10.0
    kd: float = 0.0
    k_ff: float = 1.0
    stiction_band: float = 10.0   # N, breakaway output error / kinetic level
    viscous: float = 20.0         # N per m/s of cable velocity
    reflected_inertia: float = 0.0  # kg apparent at the cable (diagnostic)
    t_min: float = 30.0           # N, commanded floor honored upstream
    t_max: float = 300.0          # N, hard output ceiling
    max_rate: float = 2500.0      # N/s output slew
    v_stick: float = 1e-3         # m/s, stick/slip velocity threshold

    def __post_init__(self):
        if self.stiction_band < 0:
            raise ValueError("stiction_band must be nonnegative")
        if not self.t_min < self.t_max:
            raise ValueError("t_min must be below t_max")
        if self.max_rate <= 0:
            raise ValueError("max_rate must be positive")
        if self.v_stick <= 0:
            raise ValueError("v_stick must be positive")

    @classmethod
    def ideal(cls, t_max: float = 300.0) -> "ActuatorConfig":
        """Pure torque source: no friction, no feedback, no practical slew."""
        return cls(kp=0.0, ki=0.0, kd=0.0, k_ff=1.0, stiction_band=0.0,
                   viscous=0.0, t_max=t_max, max_rate=1e9)


@dataclass(frozen=True)
class ActuatorState:
    """Per-module inner-loop memory."""

    integrator: float = 0.0       # N*s of accumulated tension error
    prev_error: float = 0.0       # N
    applied_tension: float = 0.0  # N actually exerted on the cable
    stuck: bool = True            # stiction latch (diagnostic)

    @classmethod
    def at_rest(cls, tension: float = 0.0) -> "ActuatorState":
        return cls(applied_tension=tension)


def backdrive_disturbance(config: ActuatorConfig, cable_velocity: float) -> float:
    """Velocity-dependent friction perturbation on the output tension.

    Kinetic friction at the stiction level with a linear ramp inside the
    stick threshold, plus viscous drag. Independent of commanded tension.
    """
    v = float(cable_velocity)
    ramp = min(1.0, abs(v) / config.v_stick)
    return math.copysign(config.stiction_band * ramp, v) + config.viscous * v


def step_actuator(state: ActuatorState, config: ActuatorConfig,
                  commanded: float, measured: float, cable_velocity: float,
                  dt: float) -> tuple[ActuatorState, float]:
    """Advance the inner tension loop one tick; returns (state, applied N).

    control = k_ff * commanded + PID(commanded - measured). While the cable
    is slower than v_stick and the control effort is within the stiction
    band of the current output, the output holds (stick). Otherwise it
    slews toward control minus the backdrive disturbance, clamped to
    [0, t_max]. Integration pauses while the clamp is pushing back
    (clamping anti-windup), but continues during stick so the loop can
    build breakaway effort.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not math.isfinite(commanded):
        raise ValueError("commanded tension must be finite")

    error = commanded - measured
    integrator = state.integrator + error * dt
    derivative = (error - state.prev_error) / dt
    control = (config.k_ff * commanded + config.kp * error
               + config.ki * integrator + config.kd * derivative)

    if (abs(cable_velocity) < config.v_stick
            and abs(control - state.applied_tension) < config.stiction_band):
        applied = state.applied_tension
        stuck = True
    else:
        target = control - backdrive_disturbance(config, cable_velocity)
        max_step = config.max_rate * dt
        delta = min(max(target - state.applied_tension, -max_step), max_step)
        applied = min(max(state.applied_tension + delta, 0.0), config.t_max)
        stuck = False

    if (applied >= config.t_max and error > 0) or (applied <= 0.0 and error < 0):
        integrator = state.integrator  # clamped: do not wind further

    return (ActuatorState(integrator=integrator, prev_error=error,
                          applied_tension=applied, stuck=stuck),
            applied)


def run_step_response(config: ActuatorConfig, start: float, end: float,
                      duration: float = 0.3, dt: float = 1e-3):
    """Simulate a command step with perfect tension measurement; returns
    (times, applied) arrays for envelope analysis."""
    import numpy as np

    n = int(round(duration / dt))
    state = ActuatorState.at_rest(start)
    times = np.arange(n) * dt
    applied = np.empty(n)
    for k in range(n):
        state, out = step_actuator(state, config, end,
                                   state.applied_tension, 0.0, dt)
        applied[k] = out
    return times, applied


def rise_and_settle(times, applied, start: float, end: float,
                    settle_tol: float = 2.0) -> tuple[float, float]:
    """(10-90% rise time, +/-settle_tol settling time) of a step trace."""
    import numpy as np

    span = end - start
    lo = start + 0.1 * span
    hi = start + 0.9 * span
    crossed_lo = np.nonzero(applied >= lo if span > 0 else applied <= lo)[0]
    crossed_hi = np.nonzero(applied >= hi if span > 0 else applied <= hi)[0]
    if len(crossed_lo) == 0 or len(crossed_hi) == 0:
        return math.inf, math.inf
    rise = times[crossed_hi[0]] - times[crossed_lo[0]]
    outside = np.nonzero(np.abs(applied - end) > settle_tol)[0]
    settle = 0.0 if len(outside) == 0 else float(times[outside[-1] + 1]) \
        if outside[-1] + 1 < len(times) else math.inf
    return float(rise), settle
