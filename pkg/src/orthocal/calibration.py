"""Linear identification of the joint offsets from leg-parallelism deviations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateGeometry, EmptyInput, FormMismatch
from .kinematics import Geometry, JointOffsets
from .measurement import DeviationSet, Form, deviation_keys
from .sensitivity import deviation_coeffs

# reciprocal condition of A^T A below which the system counts as rank deficient
RCOND_MIN = 1e-12

SIGMA_DEFINITION = "sigma_hat = |residuals|_2 / sqrt(m - 3)"


@dataclass(frozen=True)
class DesignMatrix:
    matrix: np.ndarray
    form: Form

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class CalibrationResult:
    offsets: JointOffsets
    residuals: np.ndarray
    sigma_hat: float
    rms_before: float
    rms_predicted: float
    dof: int
    form: Form
    condition_number: float
    design: np.ndarray


def build_design_matrix(g: Geometry, form: Form = Form.REDUCED6) -> DesignMatrix:
    """Rows in deviation order; leg entry carries ``c``, transverse entry ``b``."""
    form = Form(form)
    if g.alpha_max == g.alpha_min:
        raise DegenerateGeometry("max and min test postures coincide (alpha_max == alpha_min)")
    hi, lo = deviation_coeffs(g.alpha_max), deviation_coeffs(g.alpha_min)
    rows = []
    for leg, axis, sign in deviation_keys(form):
        if sign == "+":
            b, c = hi.b, hi.c
        elif sign == "-":
            b, c = lo.b, lo.c
        else:
            b, c = hi.b - lo.b, hi.c - lo.c
        row = np.zeros(3)
        row[leg] = c
        row[axis] = b
        rows.append(row)
    A = np.array(rows)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] == 0.0 or (sv[-1] / sv[0]) ** 2 < RCOND_MIN:
        raise DegenerateGeometry(f"identification matrix is rank deficient for {g}")
    return DesignMatrix(A, form)


def rms(values) -> float:
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise EmptyInput("rms of an empty list")
    return float(np.sqrt(np.mean(v**2)))


def solve_normal_equations(A: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Least-squares solution through a Cholesky factorisation of A^T A."""
    try:
        factor = scipy.linalg.cho_factor(A.T @ A)
    except np.linalg.LinAlgError:
        raise DegenerateGeometry("normal matrix is not positive definite") from None
    return scipy.linalg.cho_solve(factor, A.T @ d)


def identify_offsets(d: DeviationSet, g: Geometry) -> CalibrationResult:
    dm = build_design_matrix(g, d.form)
    A = dm.matrix
    x = solve_normal_equations(A, d.values)
    r = d.values - A @ x
    dof = dm.m - 3
    return CalibrationResult(
        offsets=JointOffsets.from_array(x),
        residuals=r,
        sigma_hat=float(np.linalg.norm(r) / math.sqrt(dof)),
        rms_before=rms(d.values),
        rms_predicted=rms(r),
        dof=dof,
        form=d.form,
        condition_number=float(np.linalg.cond(A.T @ A)),
        design=A,
    )


def predict_improvement(d: DeviationSet, r: CalibrationResult) -> DeviationSet:
    """Model-predicted deviations once the identified offsets are compensated."""
    if d.form is not r.form:
        raise FormMismatch(f"deviations are {d.form.value}, calibration was {r.form.value}")
    return DeviationSet(d.values - r.design @ r.offsets.as_array(), d.form)


@dataclass(frozen=True)
class ValidationReport:
    labels: list[str]
    measured: np.ndarray
    predicted: np.ndarray
    errors: np.ndarray
    rms_measured: float
    rms_predicted: float
    rms_before: float | None
    rms_ratio: float | None

    @property
    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.errors)))


def validate(measured: DeviationSet, predicted: DeviationSet, rms_before: float | None = None) -> ValidationReport:
    """Compare a post-calibration session against the model prediction.

    ``rms_ratio`` is ``rms_before / rms_measured``, the achieved reduction
    factor, when the pre-calibration r.m.s. is supplied.
    """
    if measured.form is not predicted.form:
        raise FormMismatch(f"measured deviations are {measured.form.value}, predicted are {predicted.form.value}")
    rm = rms(measured.values)
    ratio = None
    if rms_before is not None:
        ratio = rms_before / rm if rm > 0 else math.inf
    return ValidationReport(
        labels=measured.labels,
        measured=measured.values,
        predicted=predicted.values,
        errors=measured.values - predicted.values,
        rms_measured=rm,
        rms_predicted=rms(predicted.values),
        rms_before=rms_before,
        rms_ratio=ratio,
    )
