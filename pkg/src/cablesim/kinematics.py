"""Cable geometry: unit vectors, moment arms, the tension-to-wrench map,
and planar pose recovery from cable lengths.

Sign convention: the out-of-plane moment of a planar force (ux, uz) acting
at a world-frame arm (rx, rz) from the center of mass is

    my = rx * uz - rz * ux

which is positive counterclockwise (same sense as theta). A cable pulling
+x attached above the center of mass therefore produces a negative my, the
clockwise turn a free-body diagram predicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModuleGeometry, PayloadModel, PlanarPose
from .errors import DegenerateGeometryError, NoSolutionError

MIN_CABLE_LENGTH = 1e-6  # m, below this the direction is undefined


@dataclass(frozen=True)
class CableState:
    """Geometry of one cable at a given payload pose (world frame)."""

    unit_vector: tuple[float, float]  # from attachment toward anchor, |u| = 1
    moment_arm: tuple[float, float]   # attachment relative to COM, world frame
    length: float                     # m

    @property
    def moment_per_newton(self) -> float:
        """my produced by unit tension along this cable."""
        rx, rz = self.moment_arm
        ux, uz = self.unit_vector
        return rx * uz - rz * ux


@dataclass(frozen=True)
class WrenchJacobian:
    """Map from cable tension magnitudes to the net payload wrench.

    Column i is the 6-component wrench of unit tension in cable i, rows
    ordered (fx, fy, fz, mx, my, mz). Planar cables leave fy, mx, mz zero.
    """

    matrix: np.ndarray  # shape (6, n), read-only

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != 6 or m.shape[1] < 1:
            raise ValueError(f"Jacobian must be 6 x n with n >= 1, got {m.shape}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n_cables(self) -> int:
        return self.matrix.shape[1]

    def apply(self, tensions) -> np.ndarray:
        """Net wrench J @ T as a length-6 array."""
        return self.matrix @ np.asarray(list(tensions), dtype=float)


def compute_cable_states(pose: PlanarPose, payload: PayloadModel,
                         modules: list[ModuleGeometry]) -> list[CableState]:
    """Unit vectors, moment arms and lengths for every cable at ``pose``.

    Attachment points are taken from the module geometry (body frame),
    rotated by theta and translated to the world frame.
    """
    if not modules:
        raise ValueError("at least one module is required")
    states = []
    for i, mod in enumerate(modules):
        ax, az = mod.attachment
        wx, wz = pose.body_to_world(ax, az)
        dx = mod.anchor[0] - wx
        dz = mod.anchor[1] - wz
        length = math.hypot(dx, dz)
        if length < MIN_CABLE_LENGTH:
            raise DegenerateGeometryError(
                f"cable {i}: anchor {mod.anchor} coincides with attachment "
                f"({wx:.6f}, {wz:.6f}) at pose ({pose.x}, {pose.z}, {pose.theta})")
        states.append(CableState(
            unit_vector=(dx / length, dz / length),
            moment_arm=(wx - pose.x, wz - pose.z),
            length=length,
        ))
    return states


def build_jacobian(cables: list[CableState]) -> WrenchJacobian:
    """Assemble the 6 x n tension-to-wrench map from per-cable geometry."""
    if not cables:
        raise ValueError("at least one cable is required")
    m = np.zeros((6, len(cables)))
    for i, cable in enumerate(cables):
        ux, uz = cable.unit_vector
        m[0, i] = ux
        m[2, i] = uz
        m[4, i] = cable.moment_per_newton
    return WrenchJacobian(m)


def cable_lengths(pose: PlanarPose, payload: PayloadModel,
                  modules: list[ModuleGeometry]) -> list[float]:
    return [c.length for c in compute_cable_states(pose, payload, modules)]


def estimate_pose_from_lengths(lengths, anchors) -> PlanarPose:
    """Planar forward kinematics for a point payload on two cables.

    Intersects the two circles centered on the anchors and returns the
    solution below the anchor line (the payload hangs). Exactly tangent
    circles are accepted; inconsistent lengths raise NoSolutionError.
    theta is reported as 0 (not observable from two lengths).
    """
    if len(lengths) != 2 or len(anchors) != 2:
        raise ValueError("exactly two lengths and two anchors are required")
    l1, l2 = float(lengths[0]), float(lengths[1])
    (x1, z1), (x2, z2) = anchors
    dx, dz = x2 - x1, z2 - z1
    d = math.hypot(dx, dz)
    if d < MIN_CABLE_LENGTH:
        raise ValueError("anchor points coincide; baseline undefined")
    if l1 <= 0.0 or l2 <= 0.0:
        raise NoSolutionError(f"cable lengths must be positive, got {l1}, {l2}")

    # Circle intersection: a = distance along the baseline from anchor 1.
    a = (l1 * l1 - l2 * l2 + d * d) / (2.0 * d)
    h_sq = l1 * l1 - a * a
    tol = 1e-9 * max(1.0, l1 * l1, l2 * l2, d * d)
    if h_sq < -tol:
        raise NoSolutionError(
            f"no intersection: lengths ({l1}, {l2}) inconsistent with anchor "
            f"separation {d}")
    h = math.sqrt(max(h_sq, 0.0))

    ex, ez = dx / d, dz / d           # unit vector along the baseline
    px, pz = -ez, ex                  # unit normal to the baseline
    bx, bz = x1 + a * ex, z1 + a * ez
    c1 = (bx + h * px, bz + h * pz)
    c2 = (bx - h * px, bz - h * pz)
    below = c1 if c1[1] <= c2[1] else c2
    return PlanarPose(below[0], below[1], 0.0)
