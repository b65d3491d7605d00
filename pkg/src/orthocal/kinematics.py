"""Offset-aware kinematics of the simplified Orthoglide model.

Three rods of length ``L`` join the TCP to joint centres that slide along the
mutually orthogonal x, y and z axes. Leg ``i`` satisfies

    (p_i - eta_i)**2 + p_j**2 + p_k**2 = L**2,   eta_i = rho_i + drho_i

where ``rho`` is the encoder reading and ``drho`` the encoder offset.
All lengths are millimetres, all angles radians. Vectors are plain
``numpy`` arrays of shape ``(3,)`` ordered (x, y, z).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularAxis, Unassemblable, Unreachable

# radicands in [-REACH_TOL * L**2, 0) are treated as 0
REACH_TOL = 1e-9

AXIS_NAMES = ("x", "y", "z")


class LegId(enum.IntEnum):
    X = 0
    Y = 1
    Z = 2

    @property
    def label(self) -> str:
        return AXIS_NAMES[self]

    @classmethod
    def parse(cls, name: str) -> "LegId":
        try:
            return cls(AXIS_NAMES.index(name.strip().lower()))
        except ValueError:
            raise ValueError(f"unknown axis/leg {name!r}, expected one of x, y, z") from None

    def others(self) -> tuple["LegId", "LegId"]:
        """The two transverse axes, in x, y, z order."""
        return tuple(LegId(i) for i in range(3) if i != self)


def vec3(x, y=None, z=None) -> np.ndarray:
    """Build a finite length-3 float vector from three scalars or a sequence."""
    if y is None and z is None:
        v = np.asarray(x, dtype=float).reshape(-1)
    else:
        v = np.array([x, y, z], dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v}")
    return v


@dataclass(frozen=True)
class Geometry:
    """Manipulator instance: leg length and the two test-posture angles.

    ``alpha_min == alpha_max`` is accepted here; such a geometry cannot be
    calibrated and is rejected when the identification system is built.
    """

    L: float
    alpha_max: float
    alpha_min: float

    def __post_init__(self):
        for name in ("L", "alpha_max", "alpha_min"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.L <= 0:
            raise ValueError(f"leg length must be positive, got {self.L}")
        half_pi = math.pi / 2
        if not (-half_pi < self.alpha_min <= self.alpha_max < half_pi):
            raise ValueError(
                "need -pi/2 < alpha_min <= alpha_max < pi/2, got "
                f"alpha_min={self.alpha_min}, alpha_max={self.alpha_max}"
            )
        if self.alpha_max <= 0:
            raise ValueError(f"alpha_max must be positive, got {self.alpha_max}")


@dataclass(frozen=True)
class JointOffsets:
    """Encoder zero offsets (mm) of the x, y and z actuators."""

    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.dx, self.dy, self.dz)):
            raise ValueError("joint offsets must be finite")

    @classmethod
    def from_array(cls, a) -> "JointOffsets":
        a = vec3(a)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz], dtype=float)

    def check(self, g: Geometry) -> None:
        if max(abs(self.dx), abs(self.dy), abs(self.dz)) >= g.L:
            raise ValueError(f"offsets {self} are not small compared to L={g.L}")

    def __sub__(self, other: "JointOffsets") -> "JointOffsets":
        return JointOffsets.from_array(self.as_array() - other.as_array())


ZERO_OFFSETS = JointOffsets()


@dataclass(frozen=True)
class ConfigurationIndices:
    """Inverse-kinematics branch signs. Only (+1, +1, +1) is supported."""

    sx: int = 1
    sy: int = 1
    sz: int = 1

    def __post_init__(self):
        signs = (self.sx, self.sy, self.sz)
        if any(s not in (1, -1) for s in signs):
            raise ValueError(f"configuration indices must be +1 or -1, got {signs}")
        if signs != (1, 1, 1):
            raise NotImplementedError(f"assembly mode {signs} is not supported, only (1, 1, 1)")

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz], dtype=float)


@dataclass(frozen=True)
class Posture:
    """TCP position ``p`` paired with the encoder readings ``rho``."""

    p: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", vec3(self.p))
        object.__setattr__(self, "rho", vec3(self.rho))
        self.p.flags.writeable = False
        self.rho.flags.writeable = False


def actuated(rho, off: JointOffsets) -> np.ndarray:
    """Offset-corrected actuator positions ``eta = rho + drho``."""
    return vec3(rho) + off.as_array()


def constraint_residuals(p, rho, off: JointOffsets, g: Geometry) -> np.ndarray:
    """Left-hand side of each leg's sphere equation minus ``L**2`` (mm^2)."""
    p = vec3(p)
    eta = actuated(rho, off)
    sq = p**2
    total = sq.sum()
    return (p - eta) ** 2 + (total - sq) - g.L**2


def _radicands(p: np.ndarray, g: Geometry) -> np.ndarray:
    sq = p**2
    return g.L**2 - (sq.sum() - sq)


def inverse_kinematics(
    p, off: JointOffsets, g: Geometry, config: ConfigurationIndices = ConfigurationIndices()
) -> np.ndarray:
    """Encoder readings that place the TCP at ``p``."""
    p = vec3(p)
    rad = _radicands(p, g)
    for axis in range(3):
        if rad[axis] < 0:
            if rad[axis] >= -REACH_TOL * g.L**2:
                rad[axis] = 0.0
            else:
                raise Unreachable(AXIS_NAMES[axis], float(rad[axis]))
    return p + config.as_array() * np.sqrt(rad) - off.as_array()


def dk_quadratic(rho, off: JointOffsets, g: Geometry) -> tuple[float, float, float]:
    """Coefficients (A, B, C) of the quadratic in the auxiliary variable ``t``.

    Substituting ``p_i = eta_i/2 + t/eta_i`` into any leg equation gives
    ``A t^2 + B t + C = 0`` with ``A = sum 1/eta_i^2``, ``B = 1`` and
    ``C = sum eta_i^2/4 - L^2``.
    """
    eta = actuated(rho, off)
    for axis in range(3):
        if eta[axis] == 0.0:
            raise SingularAxis(AXIS_NAMES[axis])
    A = float(np.sum(1.0 / eta**2))
    C = float(np.sum(eta**2) / 4.0 - g.L**2)
    return A, 1.0, C


def dk_roots(rho, off: JointOffsets, g: Geometry) -> tuple[float, float]:
    """Both roots ``(t_minus, t_plus)``; ``t_minus`` is the working-mode branch."""
    A, B, C = dk_quadratic(rho, off, g)
    disc = B * B - 4.0 * A * C
    if disc < 0:
        raise Unassemblable(disc)
    sq = math.sqrt(disc)
    t_minus = (-B - sq) / (2.0 * A)
    # product of roots is C/A; avoids cancellation in -B + sq
    t_plus = C / (A * t_minus) if t_minus != 0.0 else (-B + sq) / (2.0 * A)
    return t_minus, t_plus


def tcp_from_t(rho, off: JointOffsets, t: float) -> np.ndarray:
    eta = actuated(rho, off)
    return eta / 2.0 + t / eta


def direct_kinematics(rho, off: JointOffsets, g: Geometry) -> np.ndarray:
    """TCP position for encoder readings ``rho`` under offsets ``off``."""
    t, _ = dk_roots(rho, off, g)
    return tcp_from_t(rho, off, t)


def posture_from_tcp(p, off: JointOffsets, g: Geometry) -> Posture:
    return Posture(vec3(p), inverse_kinematics(p, off, g))


def posture_from_joints(rho, off: JointOffsets, g: Geometry) -> Posture:
    return Posture(direct_kinematics(rho, off, g), vec3(rho))


def joint_center(leg: LegId, posture: Posture, off: JointOffsets) -> np.ndarray:
    """Centre of the leg's prismatic joint: ``eta_leg`` on its own axis."""
    c = np.zeros(3)
    c[leg] = posture.rho[leg] + off.as_array()[leg]
    return c


def leg_segment(leg: LegId, posture: Posture, off: JointOffsets) -> tuple[np.ndarray, np.ndarray]:
    """(TCP, joint centre) endpoints of the rod modelling ``leg``."""
    return posture.p.copy(), joint_center(leg, posture, off)


def in_working_mode(p, off: JointOffsets, g: Geometry) -> bool:
    """True when ``direct_kinematics`` maps ``inverse_kinematics(p)`` back to ``p``.

    The selected root lies below the vertex of the quadratic, i.e.
    ``2*A*t + 1 < 0``. With all actuated coordinates positive this is the
    same as a positive inverse-Jacobian determinant.
    """
    p = vec3(p)
    eta = actuated(inverse_kinematics(p, off, g), off)
    if np.any(eta == 0.0):
        return False
    A = float(np.sum(1.0 / eta**2))
    t = float(eta[0] * p[0] - eta[0] ** 2 / 2.0)
    return 2.0 * A * t + 1.0 < 0.0
