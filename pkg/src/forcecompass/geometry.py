"""Vector, rotation and wrench types shared across the pipeline.

All frames in this package are world-aligned with a fixed orientation;
the only configurable rotation is the sensor-to-device mapping applied
by the rendering pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from ._kernels import rot_apply, wrap_angle

__all__ = [
    "Force3",
    "Torque3",
    "Force2",
    "Rotation3",
    "Wrench",
    "wrap_angle",
]

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class Force3:
    """A 3D force vector in newtons. Components must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ConfigError(f"non-finite force components: {self}")

    def magnitude(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @classmethod
    def zero(cls) -> "Force3":
        return cls(0.0, 0.0, 0.0)


# Torques share the vector representation (newton-metres instead of newtons).
Torque3 = Force3


@dataclass(frozen=True)
class Force2:
    """A planar force in the device's feedback plane."""

    fx: float
    fy: float

    def __post_init__(self):
        if not (math.isfinite(self.fx) and math.isfinite(self.fy)):
            raise ConfigError(f"non-finite planar force: {self}")

    def magnitude(self) -> float:
        return math.sqrt(self.fx * self.fx + self.fy * self.fy)


@dataclass(frozen=True)
class Rotation3:
    """A proper rotation matrix, stored row-major.

    Validated at construction: R^T R = I and det R = +1, both to 1e-9.
    """

    m: tuple[float, float, float, float, float, float, float, float, float]

    def __post_init__(self):
        m = tuple(float(v) for v in self.m)
        if len(m) != 9:
            raise ConfigError(f"rotation needs 9 row-major entries, got {len(m)}")
        if not all(math.isfinite(v) for v in m):
            raise ConfigError("non-finite rotation entries")
        object.__setattr__(self, "m", m)
        # rows of R
        rows = [m[0:3], m[3:6], m[6:9]]
        for i in range(3):
            for j in range(3):
                dot = sum(rows[i][k] * rows[j][k] for k in range(3))
                want = 1.0 if i == j else 0.0
                if abs(dot - want) > _ORTHO_TOL:
                    raise ConfigError(
                        f"rotation not orthonormal: row{i}.row{j} = {dot!r}"
                    )
        det = (
            m[0] * (m[4] * m[8] - m[5] * m[7])
            - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
        )
        if abs(det - 1.0) > _ORTHO_TOL:
            raise ConfigError(f"rotation determinant {det!r} != +1")

    @classmethod
    def identity(cls) -> "Rotation3":
        return cls((1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0))

    @classmethod
    def from_rows(cls, r0, r1, r2) -> "Rotation3":
        return cls(tuple(r0) + tuple(r1) + tuple(r2))

    @classmethod
    def about_z(cls, angle: float) -> "Rotation3":
        c, s = math.cos(angle), math.sin(angle)
        return cls((c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))

    def apply(self, v: Force3) -> Force3:
        x, y, z = rot_apply(self.m, v.x, v.y, v.z)
        return Force3(x, y, z)


@dataclass(frozen=True)
class Wrench:
    """Six-axis force/torque reading at the wrist sensor frame."""

    force: Force3
    torque: Torque3

    @classmethod
    def zero(cls) -> "Wrench":
        return cls(Force3.zero(), Force3.zero())
