"""Outer-loop controllers producing the desired payload wrench: gravity
compensation, Cartesian pose PID, teleoperation passthrough, and
force amplification from an external-wrench estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import (
    ModuleGeometry,
    PayloadModel,
    PlanarPose,
    TensionVector,
    Wrench,
    ZERO_WRENCH,
    normalize_angle,
    planar_wrench,
)
from .kinematics import build_jacobian, compute_cable_states

# Default Cartesian pose gains, tuned against the square-trajectory
# scenario with stiction actuators and then frozen. theta is uncontrolled
# by default (planar Cartesian position control only).
DEFAULT_KP = (400.0, 400.0, 0.0)
DEFAULT_KI = (100.0, 100.0, 0.0)
DEFAULT_KD = (150.0, 150.0, 0.0)
DEFAULT_INTEGRATOR_LIMIT = (0.5, 0.5, 0.5)


@dataclass(frozen=True)
class PosePidGains:
    """Per-axis (x, z, theta) PID gains mapping pose error to force/moment."""

    kp: tuple[float, float, float] = DEFAULT_KP
    ki: tuple[float, float, float] = DEFAULT_KI
    kd: tuple[float, float, float] = DEFAULT_KD
    integrator_limit: tuple[float, float, float] = DEFAULT_INTEGRATOR_LIMIT
    derivative_cutoff_hz: float = 20.0

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "integrator_limit"):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != 3:
                raise ValueError(f"{name} needs one entry per axis (x, z, theta)")
            if any(v < 0 for v in vals):
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, vals)
        if any(v <= 0 for v in self.integrator_limit):
            raise ValueError("integrator_limit must be positive")
        if self.derivative_cutoff_hz <= 0:
            raise ValueError("derivative_cutoff_hz must be positive")


@dataclass(frozen=True)
class PosePidState:
    """Integrator, filtered measurement derivative, and previous sample."""

    integrator: tuple[float, float, float] = (0.0, 0.0, 0.0)
    derivative: tuple[float, float, float] = (0.0, 0.0, 0.0)
    prev_measured: tuple[float, float, float] | None = None


def gravity_compensation(payload: PayloadModel) -> Wrench:
    """The wrench holding the payload's weight: (0, +m*g, 0) planar."""
    return planar_wrench(0.0, payload.mass * payload.gravity, 0.0)


def pose_pid(target: PlanarPose, measured: PlanarPose, gains: PosePidGains,
             state: PosePidState, dt: float) -> tuple[Wrench, PosePidState]:
    """Feedback part of W_des: per-axis PID on pose error.

    Derivative acts on the measurement (no setpoint kick) through a
    first-order low-pass at ``derivative_cutoff_hz``; each axis integrator
    clamps at its limit. Returns (feedback wrench, new state).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    meas = (measured.x, measured.z, measured.theta)
    error = (target.x - measured.x, target.z - measured.z,
             normalize_angle(target.theta - measured.theta))

    prev = state.prev_measured if state.prev_measured is not None else meas
    alpha = dt / (dt + 1.0 / (2.0 * math.pi * gains.derivative_cutoff_hz))
    integ = []
    deriv = []
    out = []
    for i in range(3):
        raw = (meas[i] - prev[i]) / dt
        if i == 2:
            raw = normalize_angle(meas[i] - prev[i]) / dt
        d = state.derivative[i] + alpha * (raw - state.derivative[i])
        limit = gains.integrator_limit[i]
        accum = min(max(state.integrator[i] + error[i] * dt, -limit), limit)
        integ.append(accum)
        deriv.append(d)
        out.append(gains.kp[i] * error[i] + gains.ki[i] * accum
                   - gains.kd[i] * d)
    new_state = PosePidState(integrator=tuple(integ), derivative=tuple(deriv),
                             prev_measured=meas)
    return planar_wrench(out[0], out[1], out[2]), new_state


def amplify(w_ext_estimate: Wrench, gain: float,
            payload: PayloadModel) -> Wrench:
    """W_des for force amplification: weight compensation plus ``gain``
    times the sensed external wrench. gain = 0 is pure transparency."""
    if gain < 0:
        raise ValueError("amplification gain must be nonnegative")
    if gain == 0.0:
        return gravity_compensation(payload)
    return gravity_compensation(payload) + w_ext_estimate.scaled(gain)


def estimate_external_wrench(accel: tuple[float, float, float],
                             payload: PayloadModel,
                             modules: list[ModuleGeometry],
                             tensions: TensionVector,
                             pose: PlanarPose) -> Wrench:
    """Inverse-dynamics residual: w_ext = m*a + weight - J(pose) @ T.

    ``accel`` is the observed (ax, az, alpha) of the payload; ``tensions``
    the applied (load-cell) values. Unfiltered; see WrenchLowPass.
    """
    j = build_jacobian(compute_cable_states(pose, payload, modules))
    cable = j.apply(tensions)
    return planar_wrench(
        payload.mass * accel[0] - cable[0],
        payload.mass * accel[1] + payload.mass * payload.gravity - cable[2],
        payload.inertia_yy * accel[2] - cable[4])


class WrenchLowPass:
    """First-order low-pass over wrench components (default 10 Hz)."""

    def __init__(self, cutoff_hz: float = 10.0):
        if cutoff_hz <= 0:
            raise ValueError("cutoff_hz must be positive")
        self.cutoff_hz = cutoff_hz
        self._value = ZERO_WRENCH

    @property
    def value(self) -> Wrench:
        return self._value

    def update(self, sample: Wrench, dt: float) -> Wrench:
        alpha = dt / (dt + 1.0 / (2.0 * math.pi * self.cutoff_hz))
        v = self._value
        self._value = v + (sample - v).scaled(alpha)
        return self._value

    def reset(self, value: Wrench = ZERO_WRENCH):
        self._value = value


# --- control modes ---------------------------------------------------------


@dataclass(frozen=True)
class Hold:
    """Regulate to a fixed pose (scenario initial pose when target is None)."""

    target: PlanarPose | None = None


@dataclass(frozen=True)
class Trajectory:
    """Follow timed waypoints with piecewise-linear interpolation."""

    waypoints: tuple[tuple[float, PlanarPose], ...]

    def __post_init__(self):
        wps = tuple((float(t), p) for t, p in self.waypoints)
        if not wps:
            raise ValueError("trajectory needs at least one waypoint")
        times = [t for t, _ in wps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint timestamps must strictly increase")
        object.__setattr__(self, "waypoints", wps)

    def reference(self, t: float) -> PlanarPose:
        wps = self.waypoints
        if t <= wps[0][0]:
            return wps[0][1]
        if t >= wps[-1][0]:
            return wps[-1][1]
        for (t0, p0), (t1, p1) in zip(wps, wps[1:]):
            if t0 <= t <= t1:
                s = (t - t0) / (t1 - t0)
                return PlanarPose(
                    p0.x + s * (p1.x - p0.x),
                    p0.z + s * (p1.z - p0.z),
                    p0.theta + s * normalize_angle(p1.theta - p0.theta))
        return wps[-1][1]


@dataclass(frozen=True)
class Teleop:
    """Pass an operator-commanded wrench through on top of gravity
    compensation; the live command arrives via the bridge/CLI queue."""

    initial_command: Wrench = ZERO_WRENCH


@dataclass(frozen=True)
class Amplify:
    """Gravity compensation plus gain x estimated external wrench."""

    gain: float = 0.0

    def __post_init__(self):
        if self.gain < 0:
            raise ValueError("amplification gain must be nonnegative")


ControlMode = Hold | Trajectory | Teleop | Amplify
