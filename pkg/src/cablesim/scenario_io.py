"""Scenario files: a strict YAML schema that round-trips losslessly.

Parsing rejects unknown keys at every level (typos fail loudly instead of
silently running a different experiment) and coerces numerics to float so
that parse -> serialize -> parse is the identity on scenario values.
"""

from __future__ import annotations

import yaml

from .actuator import ActuatorConfig
from .allocation import AllocationWeights
from .control import (
    Amplify,
    ControlMode,
    Hold,
    PosePidGains,
    Teleop,
    Trajectory,
)
from .core import (
    ModuleGeometry,
    PayloadModel,
    PlanarPose,
    Wrench,
    ZERO_WRENCH,
    planar_wrench,
)
from .errors import ScenarioFormatError
from .harness import NoiseConfig, OperatorModel, RateConfig, Scenario

SCENARIO_SUFFIX = ".scenario"


def _check_keys(data, allowed, required, path):
    if not isinstance(data, dict):
        raise ScenarioFormatError(f"{path}: expected a mapping, got "
                                  f"{type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ScenarioFormatError(f"{path}: unknown keys {unknown}")
    missing = sorted(set(required) - set(data))
    if missing:
        raise ScenarioFormatError(f"{path}: missing required keys {missing}")


def _float(data, key, path, default=None):
    if key not in data:
        if default is None:
            raise ScenarioFormatError(f"{path}: missing {key!r}")
        return float(default)
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioFormatError(f"{path}.{key}: expected a number, "
                                  f"got {value!r}")
    return float(value)


def _int(data, key, path, default=None):
    if key not in data:
        return int(default)
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioFormatError(f"{path}.{key}: expected an integer, "
                                  f"got {value!r}")
    return value


def _float_list(value, length, path):
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ScenarioFormatError(f"{path}: expected a list of {length} "
                                  f"numbers, got {value!r}")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioFormatError(f"{path}[{i}]: expected a number, "
                                      f"got {v!r}")
        out.append(float(v))
    return tuple(out)


def _pose(data, path) -> PlanarPose:
    _check_keys(data, {"x", "z", "theta"}, {"x", "z"}, path)
    return PlanarPose(_float(data, "x", path), _float(data, "z", path),
                      _float(data, "theta", path, 0.0))


def _wrench(data, path) -> Wrench:
    _check_keys(data, {"fx", "fz", "my"}, set(), path)
    return planar_wrench(_float(data, "fx", path, 0.0),
                         _float(data, "fz", path, 0.0),
                         _float(data, "my", path, 0.0))


def _waypoints(value, path):
    if not isinstance(value, list) or not value:
        raise ScenarioFormatError(f"{path}: expected a non-empty list")
    out = []
    for i, entry in enumerate(value):
        p = f"{path}[{i}]"
        _check_keys(entry, {"t", "pose"}, {"t", "pose"}, p)
        out.append((_float(entry, "t", p), _pose(entry["pose"], f"{p}.pose")))
    return tuple(out)


def _profile(value, path):
    if value is None:
        return ()
    if not isinstance(value, list):
        raise ScenarioFormatError(f"{path}: expected a list")
    out = []
    for i, entry in enumerate(value):
        p = f"{path}[{i}]"
        _check_keys(entry, {"t", "wrench"}, {"t", "wrench"}, p)
        out.append((_float(entry, "t", p),
                    _wrench(entry["wrench"], f"{p}.wrench")))
    return tuple(out)


def _mode(data, path) -> ControlMode:
    _check_keys(data, {"type", "target", "waypoints", "gain",
                       "initial_command"}, {"type"}, path)
    kind = data["type"]
    if kind == "hold":
        _check_keys(data, {"type", "target"}, {"type"}, path)
        target = data.get("target")
        return Hold(_pose(target, f"{path}.target") if target else None)
    if kind == "trajectory":
        _check_keys(data, {"type", "waypoints"}, {"type", "waypoints"}, path)
        return Trajectory(_waypoints(data["waypoints"], f"{path}.waypoints"))
    if kind == "teleop":
        _check_keys(data, {"type", "initial_command"}, {"type"}, path)
        command = data.get("initial_command")
        return Teleop(_wrench(command, f"{path}.initial_command")
                      if command else ZERO_WRENCH)
    if kind == "amplify":
        _check_keys(data, {"type", "gain"}, {"type"}, path)
        return Amplify(gain=_float(data, "gain", path, 0.0))
    raise ScenarioFormatError(f"{path}.type: unknown mode {kind!r} (expected "
                              "hold, trajectory, teleop, or amplify)")


def _modules(value, path):
    if not isinstance(value, list) or not value:
        raise ScenarioFormatError(f"{path}: expected a non-empty list")
    out = []
    for i, entry in enumerate(value):
        p = f"{path}[{i}]"
        _check_keys(entry, {"anchor", "attachment", "t_min", "t_max"},
                    {"anchor"}, p)
        out.append(ModuleGeometry(
            anchor=_float_list(entry["anchor"], 2, f"{p}.anchor"),
            attachment=_float_list(entry.get("attachment", (0.0, 0.0)), 2,
                                   f"{p}.attachment"),
            t_min=_float(entry, "t_min", p, 30.0),
            t_max=_float(entry, "t_max", p, 300.0)))
    return tuple(out)


def _actuator(data, path) -> ActuatorConfig:
    if data is None:
        return ActuatorConfig()
    allowed = {"ideal", "kp", "ki", "kd", "k_ff", "stiction_band", "viscous",
               "reflected_inertia", "t_min", "t_max", "max_rate", "v_stick"}
    _check_keys(data, allowed, set(), path)
    ideal = data.get("ideal", False)
    if not isinstance(ideal, bool):
        raise ScenarioFormatError(f"{path}.ideal: expected a boolean")
    if ideal:
        extra = sorted(set(data) - {"ideal", "t_max"})
        if extra:
            raise ScenarioFormatError(
                f"{path}: ideal actuators accept only t_max, got {extra}")
        return ActuatorConfig.ideal(t_max=_float(data, "t_max", path, 300.0))
    defaults = ActuatorConfig()
    kwargs = {name: _float(data, name, path, getattr(defaults, name))
              for name in allowed - {"ideal"}}
    return ActuatorConfig(**kwargs)


def _is_ideal(config: ActuatorConfig) -> bool:
    return config == ActuatorConfig.ideal(t_max=config.t_max)


_ROOT_KEYS = {"name", "description", "seed", "duration", "payload",
              "initial_pose", "modules", "mode", "weights", "gains",
              "actuator", "wrench_profile", "command_profile", "operator",
              "noise", "rates"}
_ROOT_REQUIRED = {"modules", "payload", "initial_pose", "mode", "duration"}


def scenario_from_dict(data: dict, source: str = "scenario") -> Scenario:
    """Validate a parsed mapping and build the Scenario it describes."""
    _check_keys(data, _ROOT_KEYS, _ROOT_REQUIRED, source)
    try:
        return _build_scenario(data, source)
    except ScenarioFormatError:
        raise
    except ValueError as err:
        raise ScenarioFormatError(f"{source}: {err}") from err


def _build_scenario(data: dict, source: str) -> Scenario:
    payload_data = data["payload"]
    _check_keys(payload_data, {"mass", "inertia_yy", "gravity"},
                {"mass", "inertia_yy"}, f"{source}.payload")
    payload = PayloadModel(
        mass=_float(payload_data, "mass", f"{source}.payload"),
        inertia_yy=_float(payload_data, "inertia_yy", f"{source}.payload"),
        gravity=_float(payload_data, "gravity", f"{source}.payload", 9.81))

    weights_data = data.get("weights") or {}
    _check_keys(weights_data, {"w_cart", "w_t"}, set(), f"{source}.weights")
    defaults = AllocationWeights()
    weights = AllocationWeights(
        w_cart=_float_list(weights_data.get("w_cart", defaults.w_cart), 6,
                           f"{source}.weights.w_cart"),
        w_t=_float(weights_data, "w_t", f"{source}.weights", defaults.w_t))

    gains_data = data.get("gains") or {}
    _check_keys(gains_data, {"kp", "ki", "kd", "integrator_limit",
                             "derivative_cutoff_hz"}, set(), f"{source}.gains")
    gd = PosePidGains()
    gains = PosePidGains(
        kp=_float_list(gains_data.get("kp", gd.kp), 3, f"{source}.gains.kp"),
        ki=_float_list(gains_data.get("ki", gd.ki), 3, f"{source}.gains.ki"),
        kd=_float_list(gains_data.get("kd", gd.kd), 3, f"{source}.gains.kd"),
        integrator_limit=_float_list(
            gains_data.get("integrator_limit", gd.integrator_limit), 3,
            f"{source}.gains.integrator_limit"),
        derivative_cutoff_hz=_float(gains_data, "derivative_cutoff_hz",
                                    f"{source}.gains",
                                    gd.derivative_cutoff_hz))

    operator = None
    if data.get("operator") is not None:
        op = data["operator"]
        _check_keys(op, {"stiffness", "damping", "max_force", "waypoints"},
                    {"waypoints"}, f"{source}.operator")
        od = f"{source}.operator"
        operator = OperatorModel(
            reference=Trajectory(_waypoints(op["waypoints"],
                                            f"{od}.waypoints")),
            stiffness=_float(op, "stiffness", od, 400.0),
            damping=_float(op, "damping", od, 80.0),
            max_force=_float(op, "max_force", od, 120.0))

    noise_data = data.get("noise") or {}
    _check_keys(noise_data, {"sigma_pos", "sigma_theta"}, set(),
                f"{source}.noise")
    noise = NoiseConfig(
        sigma_pos=_float(noise_data, "sigma_pos", f"{source}.noise", 0.0),
        sigma_theta=_float(noise_data, "sigma_theta", f"{source}.noise", 0.0))

    rates_data = data.get("rates") or {}
    _check_keys(rates_data, {"inner_hz", "qp_hz", "pose_hz"}, set(),
                f"{source}.rates")
    rates_path = f"{source}.rates"
    rates = RateConfig(inner_hz=_int(rates_data, "inner_hz", rates_path, 1000),
                       qp_hz=_int(rates_data, "qp_hz", rates_path, 500),
                       pose_hz=_int(rates_data, "pose_hz", rates_path, 200))

    name = data.get("name", "")
    description = data.get("description", "")
    if not isinstance(name, str) or not isinstance(description, str):
        raise ScenarioFormatError(f"{source}: name/description must be text")

    return Scenario(
        modules=_modules(data["modules"], f"{source}.modules"),
        payload=payload,
        initial_pose=_pose(data["initial_pose"], f"{source}.initial_pose"),
        mode=_mode(data["mode"], f"{source}.mode"),
        weights=weights,
        gains=gains,
        actuator=_actuator(data.get("actuator"), f"{source}.actuator"),
        wrench_profile=_profile(data.get("wrench_profile"),
                                f"{source}.wrench_profile"),
        command_profile=_profile(data.get("command_profile"),
                                 f"{source}.command_profile"),
        operator=operator,
        noise=noise,
        rates=rates,
        duration=_float(data, "duration", source),
        seed=_int(data, "seed", source, 0),
        name=name,
        description=description,
    )


def _pose_dict(pose: PlanarPose) -> dict:
    return {"x": float(pose.x), "z": float(pose.z),
            "theta": float(pose.theta)}


def _wrench_dict(w: Wrench) -> dict:
    return {"fx": float(w.fx), "fz": float(w.fz), "my": float(w.my)}


def _waypoint_list(waypoints) -> list:
    return [{"t": float(t), "pose": _pose_dict(p)} for t, p in waypoints]


def _profile_list(profile) -> list:
    return [{"t": float(t), "wrench": _wrench_dict(w)} for t, w in profile]


def _mode_dict(mode: ControlMode) -> dict:
    if isinstance(mode, Hold):
        out = {"type": "hold"}
        if mode.target is not None:
            out["target"] = _pose_dict(mode.target)
        return out
    if isinstance(mode, Trajectory):
        return {"type": "trajectory",
                "waypoints": _waypoint_list(mode.waypoints)}
    if isinstance(mode, Teleop):
        return {"type": "teleop",
                "initial_command": _wrench_dict(mode.initial_command)}
    if isinstance(mode, Amplify):
        return {"type": "amplify", "gain": float(mode.gain)}
    raise TypeError(f"unsupported mode {mode!r}")  # pragma: no cover


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serializable mapping; every defaulted field is written explicitly."""
    actuator = scenario.actuator
    if _is_ideal(actuator):
        actuator_dict = {"ideal": True, "t_max": float(actuator.t_max)}
    else:
        actuator_dict = {
            name: float(getattr(actuator, name))
            for name in ("kp", "ki", "kd", "k_ff", "stiction_band", "viscous",
                         "reflected_inertia", "t_min", "t_max", "max_rate",
                         "v_stick")}
        actuator_dict = {"ideal": False, **actuator_dict}

    def floats(values):
        return [float(v) for v in values]

    out = {
        "name": scenario.name,
        "description": scenario.description,
        "seed": int(scenario.seed),
        "duration": float(scenario.duration),
        "payload": {"mass": float(scenario.payload.mass),
                    "inertia_yy": float(scenario.payload.inertia_yy),
                    "gravity": float(scenario.payload.gravity)},
        "initial_pose": _pose_dict(scenario.initial_pose),
        "modules": [{"anchor": floats(m.anchor),
                     "attachment": floats(m.attachment),
                     "t_min": float(m.t_min), "t_max": float(m.t_max)}
                    for m in scenario.modules],
        "mode": _mode_dict(scenario.mode),
        "weights": {"w_cart": floats(scenario.weights.w_cart),
                    "w_t": float(scenario.weights.w_t)},
        "gains": {"kp": floats(scenario.gains.kp),
                  "ki": floats(scenario.gains.ki),
                  "kd": floats(scenario.gains.kd),
                  "integrator_limit": floats(scenario.gains.integrator_limit),
                  "derivative_cutoff_hz":
                      float(scenario.gains.derivative_cutoff_hz)},
        "actuator": actuator_dict,
        "wrench_profile": _profile_list(scenario.wrench_profile),
        "command_profile": _profile_list(scenario.command_profile),
        "noise": {"sigma_pos": float(scenario.noise.sigma_pos),
                  "sigma_theta": float(scenario.noise.sigma_theta)},
        "rates": {"inner_hz": int(scenario.rates.inner_hz),
                  "qp_hz": int(scenario.rates.qp_hz),
                  "pose_hz": int(scenario.rates.pose_hz)},
    }
    if scenario.operator is not None:
        op = scenario.operator
        out["operator"] = {
            "stiffness": float(op.stiffness), "damping": float(op.damping),
            "max_force": float(op.max_force),
            "waypoints": _waypoint_list(op.reference.waypoints)}
    return out


def loads_scenario(text: str, source: str = "scenario") -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ScenarioFormatError(f"{source}: invalid YAML: {err}") from err
    if data is None:
        raise ScenarioFormatError(f"{source}: empty document")
    return scenario_from_dict(data, source)


def dumps_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(scenario), sort_keys=False,
                          default_flow_style=None, width=100)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return loads_scenario(fh.read(), source=str(path))


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_scenario(scenario))


def apply_override(data: dict, dotted_key: str, value_text: str) -> None:
    """Set one value in a scenario mapping via ``a.b.c=value`` notation.

    Numeric list indices address list entries (``modules.0.t_max``). The
    value is parsed as YAML, so ``true``, ``2.5`` and quoted strings all
    work. Unknown paths raise ScenarioFormatError.
    """
    parts = dotted_key.split(".")
    node = data
    for i, part in enumerate(parts[:-1]):
        where = ".".join(parts[:i + 1])
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError):
                raise ScenarioFormatError(
                    f"override {dotted_key!r}: no list entry {where!r}")
        elif isinstance(node, dict):
            if part not in node or node[part] is None:
                # Materialize optional sections (e.g. noise) on demand.
                if part in _ROOT_KEYS and node is data:
                    node[part] = {}
                else:
                    raise ScenarioFormatError(
                        f"override {dotted_key!r}: no such key {where!r}")
            node = node[part]
        else:
            raise ScenarioFormatError(
                f"override {dotted_key!r}: {where!r} is not a container")
    leaf = parts[-1]
    try:
        value = yaml.safe_load(value_text)
    except yaml.YAMLError as err:
        raise ScenarioFormatError(
            f"override {dotted_key!r}: bad value {value_text!r}: {err}")
    if isinstance(node, list):
        try:
            node[int(leaf)] = value
        except (ValueError, IndexError):
            raise ScenarioFormatError(
                f"override {dotted_key!r}: no list entry {dotted_key!r}")
    elif isinstance(node, dict):
        node[leaf] = value
    else:
        raise ScenarioFormatError(
            f"override {dotted_key!r}: cannot assign into "
            f"{type(node).__name__}")
