"""Canonical example scenarios.

These are the runs the command-line experiment suites execute and the
source of the ``scenarios/*.scenario`` files shipped in the repository
(a test keeps the two in sync). Geometry models a 4 m wide by 2.5 m tall
planar workspace with winch modules clamped to the side rails: one pair
at the top corners and, for four-module runs, a second pair 0.3 m below.
"""

from __future__ import annotations

import math

from .actuator import ActuatorConfig
from .allocation import AllocationWeights
from .control import Amplify, Hold, Trajectory
from .core import ModuleGeometry, PayloadModel, PlanarPose
from .harness import NoiseConfig, OperatorModel, Scenario

UPPER_ANCHORS = ((0.0, 2.5), (4.0, 2.5))
LOWER_ANCHORS = ((0.0, 2.2), (4.0, 2.2))
SQUARE_SPEED = 0.1      # m/s along each edge
SQUARE_SIDE = 1.0       # m
DWELL = 1.0             # s of rest before and after motion

_BOX_16 = PayloadModel(mass=16.0, inertia_yy=0.667)
_BOX_27 = PayloadModel(mass=27.2, inertia_yy=1.133)


def _modules(anchors) -> tuple[ModuleGeometry, ...]:
    return tuple(ModuleGeometry(anchor=a, attachment=(0.0, 0.0))
                 for a in anchors)


def _path_waypoints(points, speed, dwell) -> tuple:
    t = dwell
    wps = [(0.0, PlanarPose(*points[0], 0.0)),
           (t, PlanarPose(*points[0], 0.0))]
    for a, b in zip(points, points[1:]):
        t += math.hypot(b[0] - a[0], b[1] - a[1]) / speed
        wps.append((t, PlanarPose(*b, 0.0)))
    t += dwell
    wps.append((t, PlanarPose(*points[-1], 0.0)))
    return tuple(wps), t


def hold() -> Scenario:
    """Regulation at rest: the drift benchmark (ideal actuators)."""
    return Scenario(
        modules=_modules(UPPER_ANCHORS),
        payload=_BOX_27,
        initial_pose=PlanarPose(2.0, 1.0, 0.0),
        mode=Hold(),
        weights=AllocationWeights(w_t=1e-4),
        actuator=ActuatorConfig.ideal(),
        duration=10.0,
        seed=3,
        name="hold",
        description="Hold a 27.2 kg payload at workspace center with ideal "
                    "actuators; regulation drift benchmark.")


def _square_mode() -> tuple[Trajectory, float]:
    corners = [(1.5, 0.6), (2.5, 0.6), (2.5, 1.6), (1.5, 1.6), (1.5, 0.6)]
    wps, t_end = _path_waypoints(corners, SQUARE_SPEED, DWELL)
    return Trajectory(wps), float(math.ceil(t_end))


def square(n_modules: int = 4) -> Scenario:
    """1 m square at 0.1 m/s with the stiction actuator model."""
    if n_modules == 2:
        anchors = UPPER_ANCHORS
    elif n_modules == 4:
        anchors = UPPER_ANCHORS + LOWER_ANCHORS
    else:
        raise ValueError("square scenario supports 2 or 4 modules")
    mode, duration = _square_mode()
    return Scenario(
        modules=_modules(anchors),
        payload=_BOX_16,
        initial_pose=PlanarPose(1.5, 0.6, 0.0),
        mode=mode,
        duration=duration,
        seed=7,
        name=f"square-{n_modules}mod",
        description=f"Track a {SQUARE_SIDE:g} m square at "
                    f"{SQUARE_SPEED:g} m/s with {n_modules} modules and "
                    "frictional actuators; tension-scaling benchmark.")


def _diamond_operator() -> tuple[OperatorModel, float]:
    cx, cz, r = 2.0, 1.0, 0.5
    points = [(cx, cz), (cx + r, cz), (cx, cz + r), (cx - r, cz),
              (cx, cz - r), (cx, cz)]
    wps, t_end = _path_waypoints(points, SQUARE_SPEED, DWELL)
    return OperatorModel(reference=Trajectory(wps)), float(math.ceil(t_end))


def amplify(ideal: bool = False) -> Scenario:
    """Operator drags the payload +-0.5 m under gravity compensation."""
    operator, duration = _diamond_operator()
    return Scenario(
        modules=_modules(UPPER_ANCHORS + LOWER_ANCHORS),
        payload=_BOX_27,
        initial_pose=PlanarPose(2.0, 1.0, 0.0),
        mode=Amplify(gain=0.0),
        actuator=ActuatorConfig.ideal() if ideal else ActuatorConfig(),
        operator=operator,
        duration=duration,
        seed=11,
        name="amplify-ideal" if ideal else "amplify",
        description="Scripted operator drags a 27.2 kg payload +-0.5 m in "
                    "x and z under gravity compensation with "
                    + ("ideal" if ideal else "frictional") + " actuators; "
                    "force-amplification benchmark.")


def teleop() -> Scenario:
    """Interactive default for the bridge: gravity compensation, ready for
    injected wrenches and target commands."""
    return Scenario(
        modules=_modules(UPPER_ANCHORS + LOWER_ANCHORS),
        payload=_BOX_27,
        initial_pose=PlanarPose(2.0, 1.0, 0.0),
        mode=Amplify(gain=0.0),
        noise=NoiseConfig(sigma_pos=2e-4),
        duration=60.0,
        seed=17,
        name="teleop",
        description="Gravity-compensated 27.2 kg payload awaiting live "
                    "teleoperation commands.")


PRESETS = {
    "hold": hold,
    "square_2mod": lambda: square(2),
    "square_4mod": lambda: square(4),
    "amplify": lambda: amplify(False),
    "amplify_ideal": lambda: amplify(True),
    "teleop": teleop,
}


def write_all(directory) -> list[str]:
    """Write every preset to ``directory`` as a .scenario file."""
    from pathlib import Path

    from .scenario_io import SCENARIO_SUFFIX, save_scenario

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, factory in PRESETS.items():
        path = directory / f"{name}{SCENARIO_SUFFIX}"
        save_scenario(factory(), path)
        written.append(str(path))
    return written
