"""Planar rigid-body payload under cable tensions, gravity, and external
wrenches, integrated with semi-implicit (symplectic) Euler."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    ModuleGeometry,
    PayloadModel,
    PlanarPose,
    PlanarTwist,
    TensionVector,
    Wrench,
    ZERO_WRENCH,
)
from .errors import SimulationDivergedError
from .kinematics import build_jacobian, compute_cable_states

MAX_DT = 0.01  # s; the integrator is validated only at small steps


@dataclass(frozen=True)
class DynamicsState:
    """Plant state: pose, twist, and simulation time."""

    pose: PlanarPose
    twist: PlanarTwist
    time: float = 0.0

    @classmethod
    def at_rest(cls, x: float, z: float, theta: float = 0.0) -> "DynamicsState":
        return cls(PlanarPose(x, z, theta), PlanarTwist(0.0, 0.0, 0.0), 0.0)


def gravity_wrench(payload: PayloadModel) -> Wrench:
    return Wrench(0.0, 0.0, -payload.mass * payload.gravity, 0.0, 0.0, 0.0)


def net_wrench(pose: PlanarPose, payload: PayloadModel,
               modules: list[ModuleGeometry], tensions: TensionVector,
               w_ext: Wrench = ZERO_WRENCH) -> Wrench:
    """Cable wrench J(pose) @ T plus gravity plus the external wrench."""
    if len(tensions) != len(modules):
        raise ValueError(f"{len(tensions)} tensions for {len(modules)} modules")
    j = build_jacobian(compute_cable_states(pose, payload, modules))
    cable = Wrench(*j.apply(tensions))
    return cable + gravity_wrench(payload) + w_ext


def step_dynamics(state: DynamicsState, net: Wrench, payload: PayloadModel,
                  dt: float) -> DynamicsState:
    """One semi-implicit Euler step: update twist from the net wrench,
    then advance the pose with the *new* twist."""
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must be in (0, {MAX_DT}] s, got {dt}")
    vx = state.twist.vx + (net.fx / payload.mass) * dt
    vz = state.twist.vz + (net.fz / payload.mass) * dt
    omega = state.twist.omega + (net.my / payload.inertia_yy) * dt
    x = state.pose.x + vx * dt
    z = state.pose.z + vz * dt
    theta = state.pose.theta + omega * dt
    if not all(map(math.isfinite, (vx, vz, omega, x, z, theta))):
        raise SimulationDivergedError(
            f"non-finite state at t = {state.time + dt:.6f} s",
            last_state=state, tick=None)
    return DynamicsState(PlanarPose(x, z, theta), PlanarTwist(vx, vz, omega),
                         state.time + dt)


def mechanical_energy(state: DynamicsState, payload: PayloadModel) -> float:
    """Kinetic plus gravitational potential energy (J), datum at z = 0."""
    t = state.twist
    kinetic = 0.5 * payload.mass * (t.vx ** 2 + t.vz ** 2) \
        + 0.5 * payload.inertia_yy * t.omega ** 2
    return kinetic + payload.mass * payload.gravity * state.pose.z
