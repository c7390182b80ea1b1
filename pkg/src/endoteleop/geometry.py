"""Minimal 3D pose math: unit quaternions, frame composition, circular arcs.

Quaternions are (w, x, y, z) tuples. A pose is a position 3-tuple in mm plus
an orientation quaternion mapping local axes into the parent frame. The local
convention throughout the simulator: +z is "along the shaft", so a straight
segment of length L contributes a local offset (0, 0, L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)

# Below this bend (radians) an arc is treated as straight, with the first-order
# chord offset L*beta/2 to keep the tip position continuous at beta -> 0.
_SMALL_BEND_RAD = 1e-9


def quat_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_normalize(q: Quat) -> Quat:
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_about_y(angle_rad: float) -> Quat:
    h = 0.5 * angle_rad
    return (math.cos(h), 0.0, math.sin(h), 0.0)


def quat_about_z(angle_rad: float) -> Quat:
    h = 0.5 * angle_rad
    return (math.cos(h), 0.0, 0.0, math.sin(h))


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    """Rotate vector v by unit quaternion q."""
    w, x, y, z = q
    vx, vy, vz = v
    # t = 2 * (q_vec x v)
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    # v' = v + w*t + q_vec x t
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


@dataclass(frozen=True)
class TipPose:
    """Position (mm) and orientation of a tool or scope tip in the world frame.

    orientation is a unit quaternion (w, x, y, z); local +z is the forward
    axis of the segment ending at this pose.
    """

    position: Vec3
    orientation: Quat

    def compose(self, offset: Vec3, rotation: Quat) -> "TipPose":
        """Apply a local-frame offset then a local-frame rotation."""
        px, py, pz = self.position
        ox, oy, oz = quat_rotate(self.orientation, offset)
        return TipPose(
            (px + ox, py + oy, pz + oz),
            quat_normalize(quat_mul(self.orientation, rotation)),
        )

    def local_z_axis(self) -> Vec3:
        return quat_rotate(self.orientation, (0.0, 0.0, 1.0))


IDENTITY_POSE = TipPose((0.0, 0.0, 0.0), IDENTITY_QUAT)


def arc_chord(bend_rad: float, length_mm: float) -> tuple[float, float]:
    """Chord of a planar constant-curvature arc.

    The arc starts at the origin tangent to +z and bends toward +x by
    bend_rad over arc length length_mm. Returns (x, z) of the end point:
    x = L*(1-cos b)/b, z = L*sin(b)/b, with the straight-line limit at b=0.
    """
    b = bend_rad
    if abs(b) < _SMALL_BEND_RAD:
        return (0.5 * length_mm * b, length_mm)
    return (
        length_mm * (2.0 * math.sin(0.5 * b) ** 2) / b,
        length_mm * math.sin(b) / b,
    )


def arc_transform(bend_rad: float, azimuth_rad: float, length_mm: float) -> tuple[Vec3, Quat]:
    """Offset and rotation contributed by one constant-curvature segment.

    The bend plane is rotated about the local +z axis by azimuth_rad
    (azimuth 0 bends toward +x, pi/2 toward +y). The returned rotation maps
    the segment's base frame to its end frame; there is no net roll about
    the segment axis (torsion-free arc).
    """
    cx, cz = arc_chord(bend_rad, length_mm)
    ca, sa = math.cos(azimuth_rad), math.sin(azimuth_rad)
    offset = (cx * ca, cx * sa, cz)
    rot = quat_mul(
        quat_about_z(azimuth_rad),
        quat_mul(quat_about_y(bend_rad), quat_about_z(-azimuth_rad)),
    )
    return offset, quat_normalize(rot)


def vec_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vec_dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vec_norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def vec_dist(a: Vec3, b: Vec3) -> float:
    return vec_norm(vec_sub(a, b))
