"""Deterministic multi-rate simulation: a 1 kHz base tick drives the
actuators and payload dynamics, a 500 Hz loop re-solves the tension QP,
and a 200 Hz loop refreshes pose feedback and the desired wrench.

Loop phasing is integer-exact: a loop with rate r fires on tick k when
k*r >= fires*inner_hz, so every loop fires on tick 0 and drifts never
accumulate. All randomness flows from one seeded generator (pose noise),
making runs byte-identically replayable.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .actuator import ActuatorConfig, ActuatorState, step_actuator
from .allocation import AllocationWeights, formulate, solve_box_qp
from .control import (
    Amplify,
    ControlMode,
    Hold,
    PosePidGains,
    PosePidState,
    Teleop,
    Trajectory,
    WrenchLowPass,
    amplify,
    estimate_external_wrench,
    gravity_compensation,
    pose_pid,
)
from .core import (
    ModuleGeometry,
    PayloadModel,
    PlanarPose,
    PlanarTwist,
    TensionVector,
    Wrench,
    ZERO_WRENCH,
    planar_wrench,
)
from .dynamics import DynamicsState, step_dynamics
from .errors import (
    IncomparableRunsError,
    NonConvergenceError,
    SimulationDivergedError,
)
from .kinematics import WrenchJacobian, estimate_pose_from_lengths


@dataclass(frozen=True)
class RateConfig:
    """Loop rates in Hz; the inner rate is the base tick."""

    inner_hz: int = 1000
    qp_hz: int = 500
    pose_hz: int = 200

    def __post_init__(self):
        if not (self.inner_hz >= self.qp_hz >= self.pose_hz > 0):
            raise ValueError("rates must satisfy inner >= qp >= pose > 0")


@dataclass(frozen=True)
class NoiseConfig:
    """Additive Gaussian noise on the fed-back pose, applied at the pose
    rate from the scenario-seeded generator."""

    sigma_pos: float = 0.0
    sigma_theta: float = 0.0

    def __post_init__(self):
        if self.sigma_pos < 0 or self.sigma_theta < 0:
            raise ValueError("noise sigmas must be nonnegative")

    @property
    def enabled(self) -> bool:
        return self.sigma_pos > 0 or self.sigma_theta > 0


@dataclass(frozen=True)
class OperatorModel:
    """Scripted human: a spring-damper between the payload and a moving
    grasp reference, saturated at a maximum pull."""

    reference: Trajectory
    stiffness: float = 400.0   # N/m
    damping: float = 80.0      # N*s/m
    max_force: float = 120.0   # N magnitude clamp

    def __post_init__(self):
        if self.stiffness < 0 or self.damping < 0 or self.max_force <= 0:
            raise ValueError("operator parameters must be positive")

    def force(self, t: float, pose: PlanarPose, twist: PlanarTwist,
              dt: float) -> tuple[float, float]:
        ref = self.reference.reference(t)
        prev = self.reference.reference(t - dt)
        vref_x = (ref.x - prev.x) / dt
        vref_z = (ref.z - prev.z) / dt
        fx = self.stiffness * (ref.x - pose.x) + self.damping * (vref_x - twist.vx)
        fz = self.stiffness * (ref.z - pose.z) + self.damping * (vref_z - twist.vz)
        mag = math.hypot(fx, fz)
        if mag > self.max_force:
            scale = self.max_force / mag
            fx, fz = fx * scale, fz * scale
        return fx, fz


def _timed_wrenches(profile) -> tuple[tuple[float, Wrench], ...]:
    entries = tuple((float(t), w) for t, w in profile)
    times = [t for t, _ in entries]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("wrench profile timestamps must strictly increase")
    return entries


def wrench_at(profile: tuple[tuple[float, Wrench], ...], t: float) -> Wrench:
    """Zero-order hold: the latest entry at or before t (zero before any)."""
    current = ZERO_WRENCH
    for start, w in profile:
        if t >= start:
            current = w
        else:
            break
    return current


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one run."""

    modules: tuple[ModuleGeometry, ...]
    payload: PayloadModel
    initial_pose: PlanarPose
    mode: ControlMode = field(default_factory=Hold)
    weights: AllocationWeights = field(default_factory=AllocationWeights)
    gains: PosePidGains = field(default_factory=PosePidGains)
    actuator: ActuatorConfig = field(default_factory=ActuatorConfig)
    wrench_profile: tuple[tuple[float, Wrench], ...] = ()
    command_profile: tuple[tuple[float, Wrench], ...] = ()
    operator: OperatorModel | None = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    rates: RateConfig = field(default_factory=RateConfig)
    duration: float = 10.0
    seed: int = 0
    name: str = ""
    description: str = ""

    def __post_init__(self):
        mods = tuple(self.modules)
        if not mods:
            raise ValueError("at least one module is required")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.payload.attachments and \
                len(self.payload.attachments) != len(mods):
            raise ValueError("payload.attachments must match module count")
        object.__setattr__(self, "modules", mods)
        object.__setattr__(self, "wrench_profile",
                           _timed_wrenches(self.wrench_profile))
        object.__setattr__(self, "command_profile",
                           _timed_wrenches(self.command_profile))

    @property
    def n_modules(self) -> int:
        return len(self.modules)

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration * self.rates.inner_hz))


_BASE_COLUMNS = ("time", "pose_x", "pose_z", "pose_theta",
                 "fed_x", "fed_z", "fed_theta",
                 "wdes_fx", "wdes_fz", "wdes_my")
_TAIL_COLUMNS = ("wext_fx", "wext_fz", "wext_my",
                 "res_fx", "res_fz", "res_my")
_TIMING_COLUMNS = ("solve_time", "iterations")


class RunLog:
    """Per-base-tick record of one scenario run.

    Serializes to CSV with 9-significant-digit floats. solve_time is wall
    clock and therefore varies run to run; pass include_timing=False for
    byte-identical comparisons (iterations, which are deterministic, stay).
    """

    def __init__(self, scenario: Scenario):
        n, m = scenario.n_ticks, scenario.n_modules
        self.scenario = scenario
        self.n_ticks = n
        self.n_modules = m
        self.qp_invocations = 0
        self.pose_invocations = 0
        self.time = np.zeros(n)
        self.pose = np.zeros((n, 3))
        self.fed_pose = np.zeros((n, 3))
        self.w_des = np.zeros((n, 3))
        self.commanded = np.zeros((n, m))
        self.applied = np.zeros((n, m))
        self.w_ext = np.zeros((n, 3))
        self.residual = np.zeros((n, 3))
        self.solve_time = np.zeros(n)
        self.iterations = np.zeros(n, dtype=int)

    def column_names(self, include_timing: bool = True) -> list[str]:
        cols = list(_BASE_COLUMNS)
        cols += [f"cmd_{i}" for i in range(self.n_modules)]
        cols += [f"app_{i}" for i in range(self.n_modules)]
        cols += list(_TAIL_COLUMNS)
        if include_timing:
            cols += list(_TIMING_COLUMNS)
        else:
            cols += ["iterations"]
        return cols

    def to_csv(self, path_or_buffer=None, include_timing: bool = True) -> str | None:
        buffer = io.StringIO()
        buffer.write(",".join(self.column_names(include_timing)) + "\n")
        for k in range(self.n_ticks):
            row = [self.time[k], *self.pose[k], *self.fed_pose[k],
                   *self.w_des[k], *self.commanded[k], *self.applied[k],
                   *self.w_ext[k], *self.residual[k]]
            cells = [f"{v:.9g}" for v in row]
            if include_timing:
                cells.append(f"{self.solve_time[k]:.9g}")
            cells.append(str(int(self.iterations[k])))
            buffer.write(",".join(cells) + "\n")
        text = buffer.getvalue()
        if path_or_buffer is None:
            return text
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
            return None
        with open(path_or_buffer, "w") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, text: str, scenario: Scenario) -> "RunLog":
        """Rebuild a log from its CSV serialization (9-digit precision)."""
        lines = text.strip().split("\n")
        header = lines[0].split(",")
        data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",",
                          ndmin=2)
        if data.shape[0] != scenario.n_ticks:
            raise ValueError(
                f"log has {data.shape[0]} rows, scenario expects "
                f"{scenario.n_ticks}")
        log = cls(scenario)
        col = {name: i for i, name in enumerate(header)}
        log.time = data[:, col["time"]]
        log.pose = data[:, [col["pose_x"], col["pose_z"], col["pose_theta"]]]
        log.fed_pose = data[:, [col["fed_x"], col["fed_z"], col["fed_theta"]]]
        log.w_des = data[:, [col["wdes_fx"], col["wdes_fz"], col["wdes_my"]]]
        m = scenario.n_modules
        log.commanded = data[:, [col[f"cmd_{i}"] for i in range(m)]]
        log.applied = data[:, [col[f"app_{i}"] for i in range(m)]]
        log.w_ext = data[:, [col["wext_fx"], col["wext_fz"], col["wext_my"]]]
        log.residual = data[:, [col["res_fx"], col["res_fz"], col["res_my"]]]
        if "solve_time" in col:
            log.solve_time = data[:, col["solve_time"]]
        log.iterations = data[:, col["iterations"]].astype(int)
        return log

    def speeds(self) -> np.ndarray:
        """|payload velocity| per tick, recovered exactly from the pose
        deltas of the semi-implicit integrator."""
        dt = 1.0 / self.scenario.rates.inner_hz
        deltas = np.diff(self.pose[:, :2], axis=0, prepend=self.pose[:1, :2])
        deltas[0] = self.pose[0, :2] - (self.scenario.initial_pose.x,
                                        self.scenario.initial_pose.z)
        return np.linalg.norm(deltas, axis=1) / dt

    def reference_trace(self) -> np.ndarray | None:
        """(n, 2) reference positions for Hold/Trajectory modes, else None."""
        mode = self.scenario.mode
        if isinstance(mode, Hold):
            target = mode.target or self.scenario.initial_pose
            return np.tile((target.x, target.z), (self.n_ticks, 1))
        if isinstance(mode, Trajectory):
            out = np.empty((self.n_ticks, 2))
            for k in range(self.n_ticks):
                ref = mode.reference(self.time[k])
                out[k] = (ref.x, ref.z)
            return out
        return None


@dataclass(frozen=True)
class MetricsReport:
    """Aggregates the quantities the experiments compare."""

    mean_tension_per_module: tuple[float, ...]
    max_tension_per_module: tuple[float, ...]
    mean_tension: float
    max_tension: float
    max_tracking_error: float | None
    mean_tracking_error: float | None
    operator_force_mean: float
    operator_force_max: float
    operator_ratio_mean: float
    operator_ratio_max: float
    solve_time_mean: float
    solve_time_p99: float
    iterations_mean: float
    stick_slip_intervals: int

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in self.__dict__.items()}

    def to_text(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, list):
                value = " ".join(f"{v:.6g}" for v in value)
            elif isinstance(value, float):
                value = f"{value:.6g}"
            lines.append(f"{key}: {value}")
        return "\n".join(lines) + "\n"


def compute_metrics(log: RunLog, payload: PayloadModel | None = None) -> MetricsReport:
    if log.n_ticks == 0:
        raise ValueError("empty log")
    payload = payload or log.scenario.payload
    applied = log.applied
    ref = log.reference_trace()
    if ref is None:
        max_err = mean_err = None
        stick_slip = 0
    else:
        err = np.linalg.norm(log.pose[:, :2] - ref, axis=1)
        max_err = float(err.max())
        mean_err = float(err.mean())
        stick_slip = _count_stick_slip(log.speeds(), err)

    op_mag = np.linalg.norm(log.w_ext[:, :2], axis=1)
    weight = payload.weight
    return MetricsReport(
        mean_tension_per_module=tuple(applied.mean(axis=0)),
        max_tension_per_module=tuple(applied.max(axis=0)),
        mean_tension=float(applied.mean()),
        max_tension=float(applied.max()),
        max_tracking_error=max_err,
        mean_tracking_error=mean_err,
        operator_force_mean=float(op_mag.mean()),
        operator_force_max=float(op_mag.max()),
        operator_ratio_mean=float(op_mag.mean() / weight),
        operator_ratio_max=float(op_mag.max() / weight),
        solve_time_mean=float(log.solve_time.mean()),
        solve_time_p99=float(np.percentile(log.solve_time, 99)),
        iterations_mean=float(log.iterations.mean()),
        stick_slip_intervals=stick_slip,
    )


def _count_stick_slip(speeds: np.ndarray, err: np.ndarray,
                      v_stick: float = 1e-3, min_ticks: int = 3) -> int:
    """Maximal runs of >= min_ticks ticks where the payload is slower than
    v_stick while the tracking error is growing."""
    growing = np.empty_like(err, dtype=bool)
    growing[1:] = err[1:] > err[:-1] + 1e-12
    growing[0] = False
    active = (speeds < v_stick) & growing
    count = 0
    run = 0
    for flag in active:
        if flag:
            run += 1
        else:
            if run >= min_ticks:
                count += 1
            run = 0
    if run >= min_ticks:
        count += 1
    return count


@dataclass(frozen=True)
class ScalingReport:
    """Tension comparison between a small and a large module-count run."""

    avg_ratio: float
    max_ratio: float
    mean_tension_small: float
    mean_tension_large: float
    max_tension_small: float
    max_tension_large: float
    per_module_mean_small: tuple[float, ...]
    per_module_mean_large: tuple[float, ...]

    def to_text(self) -> str:
        lines = [f"avg_ratio: {self.avg_ratio:.6g}",
                 f"max_ratio: {self.max_ratio:.6g}",
                 f"mean_tension_small: {self.mean_tension_small:.6g}",
                 f"mean_tension_large: {self.mean_tension_large:.6g}",
                 f"max_tension_small: {self.max_tension_small:.6g}",
                 f"max_tension_large: {self.max_tension_large:.6g}",
                 "per_module_mean_small: "
                 + " ".join(f"{v:.6g}" for v in self.per_module_mean_small),
                 "per_module_mean_large: "
                 + " ".join(f"{v:.6g}" for v in self.per_module_mean_large)]
        return "\n".join(lines) + "\n"


def _trajectory_signature(scenario: Scenario):
    mode = scenario.mode
    if isinstance(mode, Trajectory):
        return ("trajectory",
                tuple((t, p.x, p.z, p.theta) for t, p in mode.waypoints),
                scenario.duration)
    if isinstance(mode, Hold):
        target = mode.target or scenario.initial_pose
        return ("hold", (target.x, target.z, target.theta), scenario.duration)
    return (type(mode).__name__.lower(), scenario.duration)


def compare_scaling(log_small: RunLog, log_large: RunLog) -> ScalingReport:
    """Tension ratios large/small for matched trajectories."""
    sig_a = _trajectory_signature(log_small.scenario)
    sig_b = _trajectory_signature(log_large.scenario)
    if sig_a != sig_b:
        raise IncomparableRunsError(
            f"runs follow different references: {sig_a[0]} vs {sig_b[0]} "
            "(waypoints/duration must match)")
    if log_small.scenario.payload.mass != log_large.scenario.payload.mass:
        raise IncomparableRunsError("runs carry different payload masses")
    m_small = compute_metrics(log_small)
    m_large = compute_metrics(log_large)
    return ScalingReport(
        avg_ratio=m_large.mean_tension / m_small.mean_tension,
        max_ratio=m_large.max_tension / m_small.max_tension,
        mean_tension_small=m_small.mean_tension,
        mean_tension_large=m_large.mean_tension,
        max_tension_small=m_small.max_tension,
        max_tension_large=m_large.max_tension,
        per_module_mean_small=m_small.mean_tension_per_module,
        per_module_mean_large=m_large.mean_tension_per_module,
    )


class SimEngine:
    """Owns one run: scheduler state, controller state, actuators, plant.

    The engine is single-threaded; the bridge injects commands through
    ``inject_command`` and they take effect at the next tick boundary. The
    applied command timeline is recorded so sessions can be replayed
    byte-identically.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.dt = 1.0 / scenario.rates.inner_hz
        self.rng = np.random.default_rng(scenario.seed)
        self.state = DynamicsState(scenario.initial_pose,
                                   PlanarTwist(0.0, 0.0, 0.0), 0.0)
        self.tick = 0
        self.paused = False
        self.log = RunLog(scenario)
        self.mode: ControlMode = scenario.mode
        self.hold_target: PlanarPose = (
            scenario.mode.target if isinstance(scenario.mode, Hold)
            and scenario.mode.target is not None else scenario.initial_pose)

        n = scenario.n_modules
        self.anchors = np.array([m.anchor for m in scenario.modules])
        self.attachments = np.array([m.attachment for m in scenario.modules])
        self.lower = np.array([m.t_min for m in scenario.modules])
        self.upper = np.array([m.t_max for m in scenario.modules])
        self.actuators = [ActuatorState.at_rest(0.0) for _ in range(n)]
        self.commanded = TensionVector(tuple(self.lower))
        self.warm_start: TensionVector | None = None
        self.residual = ZERO_WRENCH
        self.last_solve_time = 0.0
        self.last_iterations = 0

        self.pid_state = PosePidState()
        self.w_des = gravity_compensation(scenario.payload)
        self.fed_pose = scenario.initial_pose
        self.estimator = WrenchLowPass(cutoff_hz=10.0)
        self._pose_fires = 0
        self._qp_fires = 0
        self._fk_warned = False

        # Bridge-injected external wrench: value, hold deadline, decay deadline.
        self._bridge_wrench = (0.0, 0.0, 0.0)
        self._bridge_hold_until = -1.0
        self._bridge_decay_until = -1.0
        self._pending: list = []
        self.command_log: list[tuple[int, dict]] = []

    # -- command handling ----------------------------------------------

    def inject_command(self, command: dict):
        """Queue a bridge/CLI command; applied at the next tick boundary."""
        self._pending.append(command)

    def _apply_command(self, cmd: dict):
        kind = cmd.get("kind")
        if kind == "apply_wrench":
            t = self.state.time
            self._bridge_wrench = (cmd["fx"], cmd["fz"], cmd.get("my", 0.0))
            self._bridge_hold_until = t + cmd.get("hold_ms", 0.0) / 1000.0
            self._bridge_decay_until = self._bridge_hold_until + 0.1
        elif kind == "set_target":
            self.mode = Hold(PlanarPose(cmd["x"], cmd["z"],
                                        cmd.get("theta", 0.0)))
            self.hold_target = self.mode.target
            self.pid_state = PosePidState()
        elif kind == "set_mode":
            name = cmd["mode"]
            if name == "hold":
                self.mode = Hold(self.state.pose)
                self.hold_target = self.state.pose
                self.pid_state = PosePidState()
            elif name == "amplify":
                self.mode = Amplify(gain=float(cmd.get("gain", 0.0)))
            elif name == "teleop":
                self.mode = Teleop()
            else:
                raise ValueError(f"unknown mode {name!r}")
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        else:
            raise ValueError(f"unknown command kind {kind!r}")
        self.command_log.append((self.tick, dict(cmd)))

    def _bridge_wrench_at(self, t: float) -> tuple[float, float, float]:
        if t <= self._bridge_hold_until:
            return self._bridge_wrench
        if t < self._bridge_decay_until:
            s = (self._bridge_decay_until - t) / 0.1
            fx, fz, my = self._bridge_wrench
            return (fx * s, fz * s, my * s)
        return (0.0, 0.0, 0.0)

    # -- geometry ---------------------------------------------------------

    def _geometry(self, x: float, z: float, theta: float):
        """units (n,2), world arms (n,2), lengths (n,) at the given pose."""
        c, s = math.cos(theta), math.sin(theta)
        ax, az = self.attachments[:, 0], self.attachments[:, 1]
        wx = x + c * ax - s * az
        wz = z + s * ax + c * az
        dx = self.anchors[:, 0] - wx
        dz = self.anchors[:, 1] - wz
        lengths = np.hypot(dx, dz)
        units = np.stack([dx / lengths, dz / lengths], axis=1)
        arms = np.stack([wx - x, wz - z], axis=1)
        return units, arms, lengths

    def _jacobian_matrix(self, units, arms) -> np.ndarray:
        n = units.shape[0]
        j = np.zeros((6, n))
        j[0] = units[:, 0]
        j[2] = units[:, 1]
        j[4] = arms[:, 0] * units[:, 1] - arms[:, 1] * units[:, 0]
        return j

    # -- loop bodies -------------------------------------------------------

    def _sample_fed_pose(self) -> PlanarPose:
        units, arms, lengths = self._geometry(self.state.pose.x,
                                              self.state.pose.z,
                                              self.state.pose.theta)
        if self.scenario.n_modules >= 2:
            est = estimate_pose_from_lengths(
                [lengths[0], lengths[1]],
                [tuple(self.anchors[0]), tuple(self.anchors[1])])
            if self.scenario.n_modules > 2 and not self._fk_warned:
                eu, ea, el = self._geometry(est.x, est.z, 0.0)
                if np.max(np.abs(el[2:] - lengths[2:])) > 1e-3:
                    warnings.warn(
                        "redundant cable lengths disagree with the two-cable "
                        "pose estimate by more than 1 mm; feedback is biased",
                        stacklevel=2)
                    self._fk_warned = True
            x, z, theta = est.x, est.z, 0.0
        else:
            pose = self.state.pose
            x, z, theta = pose.x, pose.z, pose.theta
        noise = self.scenario.noise
        if noise.enabled:
            dx, dz, dth = self.rng.normal(
                0.0, (noise.sigma_pos, noise.sigma_pos, noise.sigma_theta))
            x, z, theta = x + dx, z + dz, theta + dth
        return PlanarPose(x, z, theta)

    def _update_w_des(self, t: float):
        payload = self.scenario.payload
        mode = self.mode
        if isinstance(mode, (Hold, Trajectory)):
            target = mode.reference(t) if isinstance(mode, Trajectory) \
                else self.hold_target
            feedback, self.pid_state = pose_pid(
                target, self.fed_pose, self.scenario.gains,
                self.pid_state, 1.0 / self.scenario.rates.pose_hz)
            self.w_des = gravity_compensation(payload) + feedback
        elif isinstance(mode, Amplify):
            self.w_des = amplify(self.estimator.value, mode.gain, payload)
        elif isinstance(mode, Teleop):
            if self.scenario.command_profile:
                command = wrench_at(self.scenario.command_profile, t)
            else:
                command = mode.initial_command
            self.w_des = gravity_compensation(payload) + command
        else:  # pragma: no cover - mode union is closed
            raise TypeError(f"unsupported mode {mode!r}")

    def _solve_allocation(self):
        units, arms, _ = self._geometry(self.fed_pose.x, self.fed_pose.z,
                                        self.fed_pose.theta)
        jac = WrenchJacobian(self._jacobian_matrix(units, arms))
        qp = formulate(jac, self.w_des, self.scenario.weights,
                       self.lower, self.upper)
        try:
            result = solve_box_qp(qp, warm_start=self.warm_start)
        except NonConvergenceError as err:
            raise NonConvergenceError(
                f"tick {self.tick}: {err}", best=err.best,
                iterations=err.iterations) from err
        self.commanded = result.tensions
        self.warm_start = result.tensions
        achieved = jac.apply(result.tensions)
        self.residual = self.w_des - Wrench(*achieved)
        self.last_solve_time = result.solve_time
        self.last_iterations = result.iterations

    def step(self):
        """Advance one base tick (no-op while paused)."""
        if self.paused:
            if self._pending:
                for cmd in self._pending:
                    self._apply_command(cmd)
                self._pending.clear()
            return
        if self.tick >= self.scenario.n_ticks:
            return
        scenario = self.scenario
        rates = scenario.rates
        k = self.tick
        t = self.state.time
        dt = self.dt

        for cmd in self._pending:
            self._apply_command(cmd)
        self._pending.clear()

        if k * rates.pose_hz >= self._pose_fires * rates.inner_hz:
            self._pose_fires += 1
            self.log.pose_invocations += 1
            self.fed_pose = self._sample_fed_pose()
            self._update_w_des(t)
        if k * rates.qp_hz >= self._qp_fires * rates.inner_hz:
            self._qp_fires += 1
            self.log.qp_invocations += 1
            self._solve_allocation()

        # Physical external wrench this tick.
        w_ext = wrench_at(scenario.wrench_profile, t)
        if scenario.operator is not None:
            fx, fz = scenario.operator.force(t, self.state.pose,
                                             self.state.twist, dt)
            w_ext = w_ext + planar_wrench(fx, fz, 0.0)
        bx, bz, bmy = self._bridge_wrench_at(t)
        if bx or bz or bmy:
            w_ext = w_ext + planar_wrench(bx, bz, bmy)

        # Actuators react to the commanded tensions at the true geometry.
        units, arms, _ = self._geometry(self.state.pose.x, self.state.pose.z,
                                        self.state.pose.theta)
        twist = self.state.twist
        vatt_x = twist.vx - twist.omega * arms[:, 1]
        vatt_z = twist.vz + twist.omega * arms[:, 0]
        winding = units[:, 0] * vatt_x + units[:, 1] * vatt_z
        applied = np.empty(scenario.n_modules)
        for i in range(scenario.n_modules):
            self.actuators[i], applied[i] = step_actuator(
                self.actuators[i], scenario.actuator, self.commanded[i],
                self.actuators[i].applied_tension, winding[i], dt)

        j = self._jacobian_matrix(units, arms)
        cable = j @ applied
        payload = scenario.payload
        net = Wrench(cable[0] + w_ext.fx,
                     cable[1] + w_ext.fy,
                     cable[2] - payload.mass * payload.gravity + w_ext.fz,
                     cable[3] + w_ext.mx,
                     cable[4] + w_ext.my,
                     cable[5] + w_ext.mz)
        try:
            new_state = step_dynamics(self.state, net, payload, dt)
        except SimulationDivergedError as err:
            raise SimulationDivergedError(str(err), last_state=err.last_state,
                                          tick=self.tick) from err

        accel = ((new_state.twist.vx - twist.vx) / dt,
                 (new_state.twist.vz - twist.vz) / dt,
                 (new_state.twist.omega - twist.omega) / dt)
        raw = planar_wrench(
            payload.mass * accel[0] - cable[0],
            payload.mass * accel[1] + payload.mass * payload.gravity - cable[2],
            payload.inertia_yy * accel[2] - cable[4])
        self.estimator.update(raw, dt)

        self.state = new_state
        log = self.log
        log.time[k] = new_state.time
        log.pose[k] = (new_state.pose.x, new_state.pose.z,
                       new_state.pose.theta)
        log.fed_pose[k] = (self.fed_pose.x, self.fed_pose.z,
                           self.fed_pose.theta)
        log.w_des[k] = self.w_des.planar()
        log.commanded[k] = list(self.commanded)
        log.applied[k] = applied
        log.w_ext[k] = w_ext.planar()
        log.residual[k] = self.residual.planar()
        log.solve_time[k] = self.last_solve_time
        log.iterations[k] = self.last_iterations
        self.tick += 1

    @property
    def done(self) -> bool:
        return self.tick >= self.scenario.n_ticks

    def snapshot(self) -> dict:
        """Wire-format state snapshot for the teleop bridge."""
        pose = self.state.pose
        twist = self.state.twist
        units, arms, _ = self._geometry(pose.x, pose.z, pose.theta)
        world_attach = arms + np.array([[pose.x, pose.z]])
        est = self.estimator.value
        return {
            "time": self.state.time,
            "tick": self.tick,
            "paused": self.paused,
            "done": self.done,
            "pose": {"x": pose.x, "z": pose.z, "theta": pose.theta},
            "twist": {"vx": twist.vx, "vz": twist.vz, "omega": twist.omega},
            "modules": [
                {"anchor": [float(a) for a in self.anchors[i]],
                 "attachment": [float(v) for v in world_attach[i]],
                 "commanded": float(self.commanded[i]),
                 "applied": float(self.actuators[i].applied_tension)}
                for i in range(self.scenario.n_modules)],
            "w_des": dict(zip(("fx", "fz", "my"), self.w_des.planar())),
            "w_ext_estimate": dict(zip(("fx", "fz", "my"), est.planar())),
            "mode": type(self.mode).__name__.lower(),
        }


def run_scenario(scenario: Scenario) -> RunLog:
    """Execute a scenario start to finish; returns the per-tick log."""
    engine = SimEngine(scenario)
    while not engine.done:
        engine.step()
    return engine.log


def replay_commands(scenario: Scenario,
                    timeline: list[tuple[int, dict]]) -> RunLog:
    """Re-run a session applying recorded commands at their original ticks."""
    engine = SimEngine(scenario)
    by_tick: dict[int, list[dict]] = {}
    for tick, cmd in timeline:
        by_tick.setdefault(tick, []).append(cmd)
    while not engine.done:
        for cmd in by_tick.get(engine.tick, ()):
            engine.inject_command(cmd)
        engine.step()
    return engine.log
