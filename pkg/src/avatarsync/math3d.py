"""Small 3D math kernel: vectors, unit quaternions and TRS transforms.

Pure-Python value types. Everything here is immutable and allocation-light
because the IK solver and the experiment call these in tight loops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, o: Vec3) -> Vec3:
        return Vec3(self.x + o.x, self.y + o.y, self.z + o.z)

    def __sub__(self, o: Vec3) -> Vec3:
        return Vec3(self.x - o.x, self.y - o.y, self.z - o.z)

    def __neg__(self) -> Vec3:
        return Vec3(-self.x, -self.y, -self.z)

    def __mul__(self, k: float) -> Vec3:
        return Vec3(self.x * k, self.y * k, self.z * k)

    __rmul__ = __mul__

    def hadamard(self, o: Vec3) -> Vec3:
        return Vec3(self.x * o.x, self.y * o.y, self.z * o.z)

    def dot(self, o: Vec3) -> float:
        return self.x * o.x + self.y * o.y + self.z * o.z

    def cross(self, o: Vec3) -> Vec3:
        return Vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> Vec3:
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero-length vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def distance(self, o: Vec3) -> float:
        return (self - o).norm()

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z]


ONES = Vec3(1.0, 1.0, 1.0)
ZERO = Vec3()


@dataclass(frozen=True, slots=True)
class Quat:
    """Rotation quaternion stored as (w, x, y, z).

    Constructors and operations return normalized values; build a raw one
    directly only when you know it is already unit length.
    """

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @staticmethod
    def identity() -> Quat:
        return Quat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle: float) -> Quat:
        a = axis.normalized()
        s = math.sin(angle / 2.0)
        return Quat(math.cos(angle / 2.0), a.x * s, a.y * s, a.z * s).normalized()

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> Quat:
        n = self.norm()
        if n == 0.0:
            raise ValueError("zero quaternion has no rotation")
        return Quat(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> Quat:
        return Quat(self.w, -self.x, -self.y, -self.z)

    inverse = conjugate  # unit quaternions only

    def __mul__(self, o: Quat) -> Quat:
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = o.w, o.x, o.y, o.z
        return Quat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ).normalized()

    def rotate(self, v: Vec3) -> Vec3:
        # v' = v + 2w(u x v) + 2 u x (u x v), u = vector part
        ux, uy, uz, w = self.x, self.y, self.z, self.w
        tx = 2.0 * (uy * v.z - uz * v.y)
        ty = 2.0 * (uz * v.x - ux * v.z)
        tz = 2.0 * (ux * v.y - uy * v.x)
        return Vec3(
            v.x + w * tx + (uy * tz - uz * ty),
            v.y + w * ty + (uz * tx - ux * tz),
            v.z + w * tz + (ux * ty - uy * tx),
        )

    def dot(self, o: Quat) -> float:
        return self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z

    def angle(self) -> float:
        """Rotation angle in [0, pi]."""
        return 2.0 * math.acos(min(1.0, abs(self.w)))

    def angle_to(self, o: Quat) -> float:
        """Angular distance in [0, pi] between two orientations."""
        return 2.0 * math.acos(min(1.0, abs(self.dot(o))))

    def slerp(self, o: Quat, t: float) -> Quat:
        d = self.dot(o)
        if d < 0.0:
            o = Quat(-o.w, -o.x, -o.y, -o.z)
            d = -d
        if d > 0.9995:
            return Quat(
                self.w + t * (o.w - self.w),
                self.x + t * (o.x - self.x),
                self.y + t * (o.y - self.y),
                self.z + t * (o.z - self.z),
            ).normalized()
        theta = math.acos(d)
        s = math.sin(theta)
        a = math.sin((1.0 - t) * theta) / s
        b = math.sin(t * theta) / s
        return Quat(
            a * self.w + b * o.w,
            a * self.x + b * o.x,
            a * self.y + b * o.y,
            a * self.z + b * o.z,
        ).normalized()

    def to_euler_zxy(self) -> tuple[float, float, float]:
        """Intrinsic Z-X-Y Euler angles (radians), R = Rz * Rx * Ry. Debug output only."""
        w, x, y, z = self.w, self.x, self.y, self.z
        # rotation matrix entries needed for ZXY
        r21 = 2.0 * (y * z + w * x)
        r20 = 2.0 * (x * z - w * y)
        r22 = 1.0 - 2.0 * (x * x + y * y)
        r01 = 2.0 * (x * y - w * z)
        r11 = 1.0 - 2.0 * (x * x + z * z)
        ex = math.asin(max(-1.0, min(1.0, r21)))
        ey = math.atan2(-r20, r22)
        ez = math.atan2(-r01, r11)
        return ez, ex, ey

    def is_unit(self, tol: float = 1e-6) -> bool:
        return abs(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z - 1.0) <= tol

    def as_list(self) -> list[float]:
        return [self.w, self.x, self.y, self.z]


@dataclass(frozen=True, slots=True)
class Transform:
    """Scale, then rotate, then translate.

    Non-uniform scale under a rotated child is composed component-wise, so
    shear is dropped; composition is only exactly associative for uniform
    scales.
    """

    position: Vec3 = ZERO
    rotation: Quat = Quat()
    scale: Vec3 = ONES

    def __post_init__(self):
        if not (self.scale.x > 0 and self.scale.y > 0 and self.scale.z > 0):
            raise ValueError(f"scale must be strictly positive, got {self.scale}")

    @staticmethod
    def identity() -> Transform:
        return Transform()

    @staticmethod
    def translate(x: float, y: float, z: float) -> Transform:
        return Transform(position=Vec3(x, y, z))

    def apply(self, p: Vec3) -> Vec3:
        return self.position + self.rotation.rotate(self.scale.hadamard(p))

    def with_rotation(self, q: Quat) -> Transform:
        return Transform(self.position, q, self.scale)


def compose(parent: Transform, child: Transform) -> Transform:
    """Express `child` (given in `parent`'s space) in the space `parent` lives in."""
    return Transform(
        position=parent.apply(child.position),
        rotation=parent.rotation * child.rotation,
        scale=parent.scale.hadamard(child.scale),
    )


def rotation_between(src: Vec3, dst: Vec3) -> Quat:
    """Minimal-arc rotation taking direction `src` onto direction `dst`.

    Antiparallel inputs rotate 180 degrees about ``src x +X`` (or ``src x +Y``
    when `src` lies along X).
    """
    if src.norm() == 0.0 or dst.norm() == 0.0:
        raise ValueError("rotation_between needs nonzero vectors")
    a = src.normalized()
    b = dst.normalized()
    d = a.dot(b)
    if d >= 1.0 - 1e-15:
        return Quat.identity()
    if d <= -1.0 + 1e-12:
        axis = a.cross(Vec3(1.0, 0.0, 0.0))
        if axis.norm() < 1e-6:
            axis = a.cross(Vec3(0.0, 1.0, 0.0))
        axis = axis.normalized()
        return Quat(0.0, axis.x, axis.y, axis.z)
    c = a.cross(b)
    # half-angle construction: q = (1 + d, a x b), normalized
    return Quat(1.0 + d, c.x, c.y, c.z).normalized()
