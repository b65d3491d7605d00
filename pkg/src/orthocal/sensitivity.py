"""Differential kinematics and the first-order leg-deviation model.

Results for the Y and Z legs follow from the X-leg expressions by relabelling
the axes; every function below is written for a generic leg index ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularPosture
from .kinematics import AXIS_NAMES, Geometry, JointOffsets, LegId, Posture, vec3

ZERO, MAX, MIN = "zero", "max", "min"


@dataclass(frozen=True)
class PostureTag:
    """Test posture: mechanical zero, or max/min displacement along one leg."""

    kind: str
    leg: LegId | None = None

    def __post_init__(self):
        if self.kind not in (ZERO, MAX, MIN):
            raise ValueError(f"unknown posture kind {self.kind!r}")
        if (self.kind == ZERO) != (self.leg is None):
            raise ValueError("zero posture takes no leg; max/min postures need one")
        if self.leg is not None:
            object.__setattr__(self, "leg", LegId(self.leg))

    @classmethod
    def zero(cls) -> "PostureTag":
        return cls(ZERO)

    @classmethod
    def max(cls, leg: LegId) -> "PostureTag":
        return cls(MAX, leg)

    @classmethod
    def min(cls, leg: LegId) -> "PostureTag":
        return cls(MIN, leg)

    def alpha(self, g: Geometry) -> float:
        if self.kind == MAX:
            return g.alpha_max
        if self.kind == MIN:
            return g.alpha_min
        return 0.0

    def __str__(self) -> str:
        return self.kind if self.leg is None else f"{self.kind}({self.leg.label})"


@dataclass(frozen=True)
class DeviationCoeffs:
    b: float
    c: float


def nominal_posture(tag: PostureTag, g: Geometry) -> Posture:
    """Offset-free (p, rho) of a test posture.

    Displacement along leg ``k`` by angle ``alpha``: ``p_k = L sin(alpha)``,
    ``rho_k = L + L sin(alpha)``, ``rho_j = L cos(alpha)`` for the other axes.
    The zero posture is the ``alpha = 0`` case of the same formula.
    """
    a = tag.alpha(g)
    s, c = math.sin(a), math.cos(a)
    p = np.zeros(3)
    rho = np.full(3, g.L * c)
    if tag.leg is not None:
        p[tag.leg] = g.L * s
        rho[tag.leg] = g.L + g.L * s
    else:
        rho[:] = g.L
    return Posture(p, rho)


def inverse_jacobian(p, eta) -> np.ndarray:
    """d(eta)/d(p): unit diagonal, entry (i, j) equal to ``p_j / (p_i - eta_i)``.

    ``eta`` must be the offset-corrected actuated coordinate ``rho + drho``.
    """
    p, eta = vec3(p), vec3(eta)
    m = np.eye(3)
    for i in range(3):
        den = p[i] - eta[i]
        if den == 0.0:
            raise SingularPosture(AXIS_NAMES[i])
        for j in range(3):
            if j != i:
                m[i, j] = p[j] / den
    return m


def jacobian(p, eta) -> np.ndarray:
    """d(p)/d(eta), the matrix inverse of :func:`inverse_jacobian`."""
    m = inverse_jacobian(p, eta)
    try:
        return np.linalg.inv(m)
    except np.linalg.LinAlgError:
        raise SingularPosture("xyz") from None


def tcp_displacement(tag: PostureTag, g: Geometry, off: JointOffsets) -> np.ndarray:
    """First-order TCP deviation caused by ``off`` at a test posture."""
    d = off.as_array()
    if tag.leg is None:
        return d.copy()
    k = tag.leg
    t = math.tan(tag.alpha(g))
    out = d + t * d[k]
    out[k] = d[k]
    return out


def deviation_coeffs(alpha: float) -> DeviationCoeffs:
    s = math.sin(alpha)
    return DeviationCoeffs(b=s, c=(0.5 + s) * math.tan(alpha))


def predicted_leg_deviation(
    leg: LegId, tag: PostureTag, off: JointOffsets, g: Geometry
) -> tuple[float, float]:
    """Linearised gauge difference (posture minus zero) on the two transverse axes.

    For transverse axis ``j`` of leg ``k``: ``c * drho_k + b * drho_j``.
    """
    leg = LegId(leg)
    if tag.leg != leg or tag.kind == ZERO:
        raise ValueError(f"leg deviation is defined for max/min postures of leg {leg.label}, got {tag}")
    co = deviation_coeffs(tag.alpha(g))
    d = off.as_array()
    j1, j2 = leg.others()
    return (co.c * d[leg] + co.b * d[j1], co.c * d[leg] + co.b * d[j2])
