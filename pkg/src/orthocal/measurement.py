"""Comparator-gauge sessions: simulation, averaging into deviations, file I/O.

A gauge on leg ``k`` touches the leg at a station fixed in the base frame
and reads the leg's coordinate along one transverse axis ``j``. Each gauge is
read at the zero, max(k) and min(k) postures. Deviations are posture-minus-zero
(full form, 12 values) or max-minus-min (reduced form, 6 values).
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IncompleteSession, SchemaError, UnitError
from .kinematics import (
    Geometry,
    JointOffsets,
    LegId,
    joint_center,
    posture_from_joints,
)
from .sensitivity import MAX, MIN, ZERO, PostureTag, nominal_posture

X, Y, Z = LegId.X, LegId.Y, LegId.Z

FORMAT_VERSION = 1
CSV_COLUMNS = ["leg", "axis", "posture", "repeat", "value_mm"]


class Form(str, enum.Enum):
    FULL12 = "full12"
    REDUCED6 = "reduced6"


# (leg, axis) pairs of each row block of the identification system
ROW_BLOCKS = (
    ((Y, X), (X, Y)),
    ((Z, Y), (Y, Z)),
    ((Z, X), (X, Z)),
)

# column order of the published deviation table: dx_y, dx_z, dy_x, dy_z, dz_x, dz_y
TABLE_COLUMNS = ((Y, X), (Z, X), (X, Y), (Z, Y), (X, Z), (Y, Z))


def deviation_keys(form: Form) -> list[tuple[LegId, LegId, str]]:
    """Row keys ``(leg, axis, sign)``; sign is '+', '-' or '' (reduced form)."""
    form = Form(form)
    keys = []
    for block in ROW_BLOCKS:
        if form is Form.FULL12:
            for sign in "+-":
                keys.extend((leg, axis, sign) for leg, axis in block)
        else:
            keys.extend((leg, axis, "") for leg, axis in block)
    return keys


def deviation_label(key: tuple[LegId, LegId, str]) -> str:
    leg, axis, sign = key
    return f"d{axis.label}_{leg.label}{sign}"


@dataclass(frozen=True)
class DeviationSet:
    """Deviation vector (mm) in identification-row order."""

    values: np.ndarray
    form: Form

    def __post_init__(self):
        form = Form(self.form)
        object.__setattr__(self, "form", form)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        n = 12 if form is Form.FULL12 else 6
        if v.shape != (n,):
            raise ValueError(f"{form.value} deviation set needs {n} values, got {v.size}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def labels(self) -> list[str]:
        return [deviation_label(k) for k in deviation_keys(self.form)]

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.labels, self.values)}

    def reduced(self) -> "DeviationSet":
        """Max-minus-min form of a full deviation set."""
        if self.form is Form.REDUCED6:
            return self
        v = self.values.reshape(3, 2, 2)
        return DeviationSet((v[:, 0, :] - v[:, 1, :]).reshape(-1), Form.REDUCED6)


def deviations_from_table(columns, form: Form = Form.REDUCED6) -> DeviationSet:
    """Map six values in published column order onto row order.

    Only the reduced form has a six-column table layout.
    """
    if Form(form) is not Form.REDUCED6:
        raise ValueError("table columns carry one value per gauge; use the reduced form")
    cols = np.asarray(columns, dtype=float).reshape(-1)
    if cols.size != 6:
        raise ValueError(f"expected 6 table columns, got {cols.size}")
    by_key = dict(zip(TABLE_COLUMNS, cols))
    return DeviationSet([by_key[(leg, axis)] for leg, axis, _ in deviation_keys(Form.REDUCED6)], Form.REDUCED6)


def deviations_to_table(d: DeviationSet) -> np.ndarray:
    d = d.reduced()
    by_key = {(leg, axis): v for (leg, axis, _), v in zip(deviation_keys(Form.REDUCED6), d.values)}
    return np.array([by_key[k] for k in TABLE_COLUMNS])


@dataclass(frozen=True)
class GaugeReading:
    leg: LegId
    axis: LegId
    posture: PostureTag
    repeat: int
    value: float

    def __post_init__(self):
        object.__setattr__(self, "leg", LegId(self.leg))
        object.__setattr__(self, "axis", LegId(self.axis))
        if self.axis == self.leg:
            raise ValueError(f"gauge axis must be transverse to the {self.leg.label}-leg")
        if self.posture.leg is not None and self.posture.leg != self.leg:
            raise ValueError(f"posture {self.posture} does not belong to the {self.leg.label}-leg")
        if self.repeat < 1:
            raise ValueError("repeat ordinal starts at 1")
        if not math.isfinite(self.value):
            raise ValueError("gauge value must be finite")


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 0.01
    resolution: float = 0.01
    seed: int | None = None

    def __post_init__(self):
        if self.sigma < 0 or not math.isfinite(self.sigma):
            raise ValueError("noise sigma must be a non-negative number")
        if self.resolution < 0 or not math.isfinite(self.resolution):
            raise ValueError("gauge resolution must be a non-negative number")


@dataclass
class MeasurementSession:
    geometry: Geometry
    readings: list[GaugeReading]
    noise_model: NoiseModel | None = None
    provenance: str = "ingested"
    gauge_signs: dict[tuple[LegId, LegId], int] = field(default_factory=dict)

    def sign(self, leg: LegId, axis: LegId) -> int:
        return self.gauge_signs.get((LegId(leg), LegId(axis)), 1)

    def __eq__(self, other):
        if not isinstance(other, MeasurementSession):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.readings == other.readings
            and self.noise_model == other.noise_model
            and self.provenance == other.provenance
            and {k: v for k, v in self.gauge_signs.items() if v != 1}
            == {k: v for k, v in other.gauge_signs.items() if v != 1}
        )


def gauge_station(leg: LegId, g: Geometry, off: JointOffsets) -> float:
    """Longitudinal station of a gauge: midpoint of the leg at the zero posture."""
    rho0 = nominal_posture(PostureTag.zero(), g).rho
    pose = posture_from_joints(rho0, off, g)
    return 0.5 * (pose.p[leg] + joint_center(leg, pose, off)[leg])


def exact_leg_offset(leg: LegId, axis: LegId, tag: PostureTag, station: float, g: Geometry, off: JointOffsets) -> float:
    """Transverse coordinate of the leg centreline at a fixed station.

    The machine is commanded to the nominal encoder values of ``tag``; the
    real actuators sit at ``rho + off``.
    """
    pose = posture_from_joints(nominal_posture(tag, g).rho, off, g)
    p = pose.p
    c = joint_center(leg, pose, off)
    u = (station - p[leg]) / (c[leg] - p[leg])
    return float(p[axis] + u * (c[axis] - p[axis]))


def _tags(leg: LegId) -> tuple[PostureTag, PostureTag, PostureTag]:
    return PostureTag.zero(), PostureTag.max(leg), PostureTag.min(leg)


def exact_deviations(g: Geometry, off: JointOffsets, form: Form = Form.FULL12) -> DeviationSet:
    """Noiseless deviations of the exact nonlinear model."""
    vals = {}
    for leg in LegId:
        s = gauge_station(leg, g, off)
        for axis in leg.others():
            z, hi, lo = (exact_leg_offset(leg, axis, t, s, g, off) for t in _tags(leg))
            vals[(leg, axis, "+")] = hi - z
            vals[(leg, axis, "-")] = lo - z
            vals[(leg, axis, "")] = hi - lo
    return DeviationSet([vals[k] for k in deviation_keys(form)], form)


def quantize(values, resolution: float):
    if not resolution:
        return values
    return np.round(np.asarray(values) / resolution) * resolution


def simulate_session(
    g: Geometry,
    true_off: JointOffsets,
    repeats: int = 3,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
    gauge_signs: dict[tuple[LegId, LegId], int] | None = None,
) -> MeasurementSession:
    """Virtual run of the gauge protocol on a machine with offsets ``true_off``.

    Readings are absolute transverse leg coordinates at each gauge station.
    A gauge mounted with sign -1 reports the negated coordinate; the sign is
    recorded in the session so that deviations come out in base-frame sense.
    """
    signs = dict(gauge_signs or {})
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    true_off.check(g)
    if noise is not None and rng is None:
        rng = np.random.default_rng(noise.seed)
    readings = []
    for leg in LegId:
        station = gauge_station(leg, g, true_off)
        for axis in leg.others():
            for tag in _tags(leg):
                exact = signs.get((leg, axis), 1) * exact_leg_offset(leg, axis, tag, station, g, true_off)
                vals = np.full(repeats, exact)
                if noise is not None:
                    if noise.sigma:
                        vals = vals + rng.normal(0.0, noise.sigma, repeats)
                    vals = quantize(vals, noise.resolution)
                readings.extend(GaugeReading(leg, axis, tag, r + 1, float(v)) for r, v in enumerate(vals))
    return MeasurementSession(g, readings, noise_model=noise, provenance="simulated", gauge_signs=signs)


def session_from_deviations(d: DeviationSet, g: Geometry) -> MeasurementSession:
    """Single-repeat session whose differences reproduce ``d`` exactly.

    Zero-posture readings are 0; the reduced form also puts min readings at 0.
    """
    vals = dict(zip(deviation_keys(d.form), d.values))
    readings = []
    for leg in LegId:
        for axis in leg.others():
            if d.form is Form.FULL12:
                hi, lo = vals[(leg, axis, "+")], vals[(leg, axis, "-")]
            else:
                hi, lo = vals[(leg, axis, "")], 0.0
            for tag, v in zip(_tags(leg), (0.0, hi, lo)):
                readings.append(GaugeReading(leg, axis, tag, 1, float(v)))
    return MeasurementSession(g, readings, provenance="ingested")


def session_to_deviations(s: MeasurementSession, form: Form = Form.REDUCED6) -> DeviationSet:
    """Average repeats per gauge and posture, then difference the postures."""
    form = Form(form)
    groups: dict[tuple, list[float]] = defaultdict(list)
    for r in s.readings:
        groups[(r.leg, r.axis, r.posture.kind)].append(r.value)
    missing = []
    uneven = []
    means = {}
    for leg in LegId:
        for axis in leg.others():
            counts = []
            for kind in (ZERO, MAX, MIN):
                vals = groups.get((leg, axis, kind))
                if not vals:
                    missing.append((leg.label, axis.label, kind))
                    continue
                counts.append(len(vals))
                means[(leg, axis, kind)] = s.sign(leg, axis) * float(np.mean(vals))
            if len(set(counts)) > 1:
                uneven.append(f"{leg.label}/{axis.label} repeat counts {counts}")
    if missing or uneven:
        raise IncompleteSession(missing, "; ".join(uneven))
    out = []
    for leg, axis, sign in deviation_keys(form):
        z, hi, lo = (means[(leg, axis, k)] for k in (ZERO, MAX, MIN))
        out.append({"+": hi - z, "-": lo - z, "": hi - lo}[sign])
    return DeviationSet(out, form)


# --- file formats -----------------------------------------------------------

def _geometry_dict(g: Geometry) -> dict:
    return {"L_mm": g.L, "alpha_max_rad": g.alpha_max, "alpha_min_rad": g.alpha_min}


def geometry_from_dict(d: dict, *, line: int | None = None) -> Geometry:
    try:
        vals = [float(d[k]) for k in ("L_mm", "alpha_max_rad", "alpha_min_rad")]
    except KeyError as e:
        raise SchemaError("missing geometry entry", line=line, field=e.args[0]) from None
    except (TypeError, ValueError) as e:
        raise SchemaError(f"geometry values must be numbers ({e})", line=line, field="geometry") from None
    try:
        return Geometry(*vals)
    except ValueError as e:
        raise SchemaError(str(e), line=line, field="geometry") from None


def _signs_dict(s: MeasurementSession) -> dict[str, int]:
    return {f"{leg.label}{axis.label}": int(v) for (leg, axis), v in sorted(s.gauge_signs.items())}


def parse_gauge_signs(d: dict, line: int | None = None) -> dict:
    out = {}
    for key, v in d.items():
        if len(key) != 2:
            raise SchemaError(f"gauge sign key {key!r} must be <leg><axis>, e.g. 'xy'", line=line, field="gauge_signs")
        try:
            leg, axis = LegId.parse(key[0]), LegId.parse(key[1])
        except ValueError as e:
            raise SchemaError(str(e), line=line, field="gauge_signs") from None
        if leg == axis or int(v) not in (1, -1) or float(v) != int(v):
            raise SchemaError(f"invalid gauge sign {key}={v}", line=line, field="gauge_signs")
        out[(leg, axis)] = int(v)
    return out


def _reading_from_fields(leg, axis, posture, repeat, value, *, line: int | None) -> GaugeReading:
    try:
        leg_id = LegId.parse(str(leg))
        axis_id = LegId.parse(str(axis))
    except ValueError as e:
        raise SchemaError(str(e), line=line, field="leg/axis") from None
    kind = str(posture).strip().lower()
    if kind not in (ZERO, MAX, MIN):
        raise SchemaError(f"posture must be zero, max or min, got {posture!r}", line=line, field="posture")
    try:
        rep = int(repeat)
        if isinstance(repeat, float) and repeat != rep:
            raise ValueError
    except (TypeError, ValueError):
        raise SchemaError(f"repeat must be an integer, got {repeat!r}", line=line, field="repeat") from None
    try:
        val = float(value)
    except (TypeError, ValueError):
        raise SchemaError(f"value must be a number, got {value!r}", line=line, field="value_mm") from None
    tag = PostureTag(kind, None if kind == ZERO else leg_id)
    try:
        return GaugeReading(leg_id, axis_id, tag, rep, val)
    except ValueError as e:
        raise SchemaError(str(e), line=line) from None


def _noise_dict(n: NoiseModel | None) -> dict | None:
    if n is None:
        return None
    return {"sigma_mm": n.sigma, "resolution_mm": n.resolution, "seed": n.seed}


def _noise_from_dict(d: dict | None, line: int | None = None) -> NoiseModel | None:
    if d is None:
        return None
    try:
        seed = d.get("seed")
        return NoiseModel(float(d["sigma_mm"]), float(d["resolution_mm"]), None if seed is None else int(seed))
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"bad noise model ({e})", line=line, field="noise_model") from None


def _check_units(units, line: int | None = None):
    if units is None:
        raise SchemaError("units field is required", line=line, field="units")
    if units != "mm":
        raise UnitError(f"units must be 'mm', got {units!r}", line=line, field="units")


def session_to_json(s: MeasurementSession) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "units": "mm",
        "provenance": s.provenance,
        "geometry": _geometry_dict(s.geometry),
        "noise_model": _noise_dict(s.noise_model),
        "gauge_signs": _signs_dict(s),
        "readings": [
            {
                "leg": r.leg.label,
                "axis": r.axis.label,
                "posture": r.posture.kind,
                "repeat": r.repeat,
                "value_mm": r.value,
            }
            for r in s.readings
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def session_from_json(text: str) -> MeasurementSession:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e.msg}", line=e.lineno) from None
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    _check_units(doc.get("units"))
    if not isinstance(doc.get("geometry"), dict):
        raise SchemaError("geometry object is required", field="geometry")
    g = geometry_from_dict(doc["geometry"])
    rows = doc.get("readings")
    if not isinstance(rows, list):
        raise SchemaError("readings must be a list", field="readings")
    readings = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise SchemaError(f"reading #{i} must be an object", field="readings")
        missing = [c for c in CSV_COLUMNS if c not in row]
        if missing:
            raise SchemaError(f"reading #{i} lacks {missing}", field=missing[0])
        readings.append(_reading_from_fields(*(row[c] for c in CSV_COLUMNS), line=None))
    signs = parse_gauge_signs(doc.get("gauge_signs") or {})
    return MeasurementSession(
        g,
        readings,
        noise_model=_noise_from_dict(doc.get("noise_model")),
        provenance=str(doc.get("provenance", "ingested")),
        gauge_signs=signs,
    )


def session_to_csv(s: MeasurementSession) -> str:
    buf = io.StringIO()
    meta = {"format_version": FORMAT_VERSION, "units": "mm", "provenance": s.provenance}
    meta.update({k: repr(v) for k, v in _geometry_dict(s.geometry).items()})
    if s.noise_model is not None:
        meta.update({f"noise_{k}": repr(v) for k, v in _noise_dict(s.noise_model).items()})
    for key, v in _signs_dict(s).items():
        meta[f"gauge_sign_{key}"] = v
    for k, v in meta.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in s.readings:
        w.writerow([r.leg.label, r.axis.label, r.posture.kind, r.repeat, repr(r.value)])
    return buf.getvalue()


def session_from_csv(text: str) -> MeasurementSession:
    lines = text.splitlines()
    meta: dict[str, tuple[str, int]] = {}
    i = 0
    while i < len(lines) and (lines[i].startswith("#") or not lines[i].strip()):
        body = lines[i].lstrip("#").strip()
        if body:
            if "=" not in body:
                raise SchemaError(f"header line must be '# key=value', got {lines[i]!r}", line=i + 1)
            k, v = body.split("=", 1)
            meta[k.strip()] = (v.strip(), i + 1)
        i += 1
    if i >= len(lines):
        raise SchemaError("missing column header", line=i + 1)
    header = [c.strip() for c in next(csv.reader([lines[i]]))]
    if header != CSV_COLUMNS:
        raise SchemaError(f"column header must be {','.join(CSV_COLUMNS)}, got {lines[i]!r}", line=i + 1)
    header_line = i + 1

    units = meta.get("units")
    _check_units(units[0] if units else None, line=units[1] if units else 1)
    geo = {}
    for k in ("L_mm", "alpha_max_rad", "alpha_min_rad"):
        if k not in meta:
            raise SchemaError("missing geometry header", line=1, field=k)
        geo[k] = meta[k][0]
    g = geometry_from_dict(geo, line=meta["L_mm"][1])
    noise = None
    if "noise_sigma_mm" in meta:
        seed = meta.get("noise_seed", ("None", 0))[0]
        noise = _noise_from_dict(
            {
                "sigma_mm": meta["noise_sigma_mm"][0],
                "resolution_mm": meta.get("noise_resolution_mm", ("0", 0))[0],
                "seed": None if seed == "None" else seed,
            },
            line=meta["noise_sigma_mm"][1],
        )
    signs = {}
    for k, (v, ln) in meta.items():
        if k.startswith("gauge_sign_"):
            try:
                signs.update(parse_gauge_signs({k[len("gauge_sign_"):]: int(v)}, line=ln))
            except ValueError:
                raise SchemaError(f"gauge sign must be +1 or -1, got {v!r}", line=ln, field=k) from None

    readings = []
    for n, row in enumerate(csv.reader(lines[header_line:]), start=header_line + 1):
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != len(CSV_COLUMNS):
            raise SchemaError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}", line=n)
        readings.append(_reading_from_fields(*(c.strip() for c in row), line=n))
    prov = meta.get("provenance", ("ingested", 0))[0]
    return MeasurementSession(g, readings, noise_model=noise, provenance=prov, gauge_signs=signs)


def write_session(s: MeasurementSession, path) -> None:
    path = Path(path)
    text = session_to_json(s) if path.suffix.lower() == ".json" else session_to_csv(s)
    path.write_text(text)


def parse_session(path) -> MeasurementSession:
    """Read a session file; ``.json`` selects the object form, anything else CSV."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return session_from_json(text)
    return session_from_csv(text)
