"""Calibration and validation reports: structured (JSON) and plain text."""
from __future__ import annotations

import json

import numpy as np

from .calibration import SIGMA_DEFINITION, CalibrationResult, ValidationReport
from .errors import SchemaError
from .kinematics import Geometry
from .measurement import DeviationSet, Form, geometry_from_dict

REPORT_SCHEMA_VERSION = 1


def calibration_report(g: Geometry, d: DeviationSet, r: CalibrationResult, predicted: DeviationSet) -> dict:
    o = r.offsets
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "calibration",
        "units": "mm",
        "geometry": {"L_mm": g.L, "alpha_max_rad": g.alpha_max, "alpha_min_rad": g.alpha_min},
        "form": r.form.value,
        "offsets_mm": {"dx": o.dx, "dy": o.dy, "dz": o.dz},
        "compensation": "identified offsets add to encoder readings (eta = rho + drho); "
        "command rho - drho to reach the nominal actuator position",
        "sigma_hat_mm": r.sigma_hat,
        "sigma_definition": SIGMA_DEFINITION,
        "dof": r.dof,
        "rms_before_mm": r.rms_before,
        "rms_predicted_mm": r.rms_predicted,
        "condition_number": r.condition_number,
        "deviations_mm": d.as_dict(),
        "residuals_mm": dict(zip(d.labels, map(float, r.residuals))),
        "predicted_mm": predicted.as_dict(),
    }


def calibration_text(rep: dict) -> str:
    o = rep["offsets_mm"]
    lines = [
        f"Joint-offset calibration ({rep['form']}, {len(rep['deviations_mm'])} equations, dof {rep['dof']})",
        f"  geometry: L={rep['geometry']['L_mm']} mm, alpha_max={rep['geometry']['alpha_max_rad']:.6g} rad, "
        f"alpha_min={rep['geometry']['alpha_min_rad']:.6g} rad",
        f"  offsets [mm]: dx={o['dx']:+.4f}  dy={o['dy']:+.4f}  dz={o['dz']:+.4f}",
        f"  sigma_hat: {rep['sigma_hat_mm']:.4f} mm  ({rep['sigma_definition']})",
        f"  r.m.s. before: {rep['rms_before_mm']:.2f} mm, predicted after: {rep['rms_predicted_mm']:.2f} mm",
        f"  cond(A^T A): {rep['condition_number']:.3g}",
        "  deviation      measured   predicted",
    ]
    for k, v in rep["deviations_mm"].items():
        lines.append(f"  {k:<12} {v:+10.4f} {rep['predicted_mm'][k]:+11.4f}")
    return "\n".join(lines) + "\n"


def load_calibration_report(text: str) -> tuple[Geometry, DeviationSet, float]:
    """Geometry, predicted deviations and pre-calibration r.m.s. from a report."""
    try:
        rep = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e.msg}", line=e.lineno) from None
    if not isinstance(rep, dict) or rep.get("kind") != "calibration":
        raise SchemaError("not a calibration report", field="kind")
    if rep.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise SchemaError(f"unsupported report schema {rep.get('schema_version')!r}", field="schema_version")
    try:
        form = Form(rep["form"])
        g = geometry_from_dict(rep["geometry"])
        pred = rep["predicted_mm"]
        probe = DeviationSet(np.zeros(12 if form is Form.FULL12 else 6), form)
        values = [float(pred[k]) for k in probe.labels]
        rms_before = float(rep["rms_before_mm"])
    except KeyError as e:
        raise SchemaError("missing report entry", field=str(e.args[0])) from None
    except (TypeError, ValueError) as e:
        raise SchemaError(f"malformed report ({e})") from None
    return g, DeviationSet(values, form), rms_before


def validation_report(v: ValidationReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "validation",
        "units": "mm",
        "entries": [
            {"label": k, "measured_mm": float(m), "predicted_mm": float(p), "error_mm": float(e)}
            for k, m, p, e in zip(v.labels, v.measured, v.predicted, v.errors)
        ],
        "max_abs_error_mm": v.max_abs_error,
        "rms_measured_mm": v.rms_measured,
        "rms_predicted_mm": v.rms_predicted,
        "rms_before_mm": v.rms_before,
        "rms_ratio": v.rms_ratio,
    }


def validation_text(v: ValidationReport) -> str:
    lines = ["  deviation      measured   predicted       error"]
    for k, m, p, e in zip(v.labels, v.measured, v.predicted, v.errors):
        lines.append(f"  {k:<12} {m:+10.4f} {p:+11.4f} {e:+11.4f}")
    lines.append(f"  r.m.s. measured: {v.rms_measured:.2f} mm, predicted: {v.rms_predicted:.2f} mm")
    if v.rms_ratio is not None:
        lines.append(f"  r.m.s. before: {v.rms_before:.2f} mm, ratio before/after: {v.rms_ratio:.2f}")
    return "\n".join(lines) + "\n"
