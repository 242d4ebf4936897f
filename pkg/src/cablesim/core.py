"""Shared domain types and unit conventions.

Everything is SI (N, m, kg, s, rad). The working plane is x-z with z up;
the out-of-plane moment component is ``my``, positive counterclockwise when
viewed with x to the right and z up, matching the sign of ``theta``.
All types are immutable values and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

GRAVITY = 9.81  # m/s^2, default magnitude, acting along -z


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Wrench:
    """Generalized force on the payload: forces in N, moments in N*m."""

    fx: float = 0.0
    fy: float = 0.0
    fz: float = 0.0
    mx: float = 0.0
    my: float = 0.0
    mz: float = 0.0

    def __post_init__(self):
        _require_finite("Wrench component", self.fx, self.fy, self.fz,
                        self.mx, self.my, self.mz)

    def __add__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.fx + other.fx, self.fy + other.fy,
                      self.fz + other.fz, self.mx + other.mx,
                      self.my + other.my, self.mz + other.mz)

    def __sub__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.fx - other.fx, self.fy - other.fy,
                      self.fz - other.fz, self.mx - other.mx,
                      self.my - other.my, self.mz - other.mz)

    def scaled(self, factor: float) -> "Wrench":
        return Wrench(self.fx * factor, self.fy * factor, self.fz * factor,
                      self.mx * factor, self.my * factor, self.mz * factor)

    def planar(self) -> tuple[float, float, float]:
        """The in-plane components (fx, fz, my)."""
        return (self.fx, self.fz, self.my)

    def as_tuple(self) -> tuple[float, ...]:
        return (self.fx, self.fy, self.fz, self.mx, self.my, self.mz)


ZERO_WRENCH = Wrench()


def planar_wrench(fx: float, fz: float, my: float = 0.0) -> Wrench:
    """Embed an in-plane force/moment triple into the 6-component wrench.

    The out-of-plane components (fy, mx, mz) are zero.
    """
    _require_finite("planar_wrench argument", fx, fz, my)
    return Wrench(fx=fx, fz=fz, my=my)


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class PlanarPose:
    """Payload pose in the vertical working plane.

    theta rotates the body counterclockwise (x toward z) and is stored
    wrapped to (-pi, pi].
    """

    x: float
    z: float
    theta: float = 0.0

    def __post_init__(self):
        _require_finite("PlanarPose component", self.x, self.z, self.theta)
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def body_to_world(self, px: float, pz: float) -> tuple[float, float]:
        """Map a body-frame point to world coordinates at this pose."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (self.x + c * px - s * pz, self.z + s * px + c * pz)


@dataclass(frozen=True)
class PlanarTwist:
    vx: float = 0.0
    vz: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        _require_finite("PlanarTwist component", self.vx, self.vz, self.omega)


@dataclass(frozen=True)
class ModuleGeometry:
    """One cable module: where its cable leaves the winch and where it
    connects to the payload, plus the admissible tension range."""

    anchor: tuple[float, float]       # world frame (x, z), m
    attachment: tuple[float, float]   # payload body frame (x, z), m
    t_min: float = 30.0               # pretension floor keeping cables taut, N
    t_max: float = 300.0              # winch rating ceiling, N

    def __post_init__(self):
        _require_finite("ModuleGeometry anchor", *self.anchor)
        _require_finite("ModuleGeometry attachment", *self.attachment)
        _require_finite("ModuleGeometry bounds", self.t_min, self.t_max)
        object.__setattr__(self, "anchor", (float(self.anchor[0]), float(self.anchor[1])))
        object.__setattr__(self, "attachment",
                           (float(self.attachment[0]), float(self.attachment[1])))
        if not 0.0 <= self.t_min < self.t_max:
            raise ValueError(
                f"tension bounds must satisfy 0 <= t_min < t_max, "
                f"got [{self.t_min}, {self.t_max}]")


@dataclass(frozen=True)
class PayloadModel:
    """Rigid payload properties for gravity compensation and dynamics."""

    mass: float                                  # kg
    inertia_yy: float                            # kg*m^2 about the plane normal
    attachments: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    gravity: float = GRAVITY                     # magnitude, m/s^2, along -z

    def __post_init__(self):
        _require_finite("PayloadModel mass", self.mass)
        _require_finite("PayloadModel inertia", self.inertia_yy)
        _require_finite("PayloadModel gravity", self.gravity)
        if self.mass <= 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.inertia_yy <= 0.0:
            raise ValueError(f"inertia_yy must be positive, got {self.inertia_yy}")
        object.__setattr__(
            self, "attachments",
            tuple((float(a[0]), float(a[1])) for a in self.attachments))

    @property
    def weight(self) -> float:
        """Gravitational force magnitude m*g in N."""
        return self.mass * self.gravity


@dataclass(frozen=True)
class TensionVector:
    """Ordered cable tension magnitudes, one per module."""

    t: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.t)
        _require_finite("TensionVector element", *values)
        for i, v in enumerate(values):
            if v < 0.0:
                raise ValueError(
                    f"cable {i} tension is negative ({v}); cables cannot push")
        object.__setattr__(self, "t", values)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> float:
        return self.t[i]

    def __iter__(self):
        return iter(self.t)
