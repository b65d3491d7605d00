"""Command-line front end: simulate, calibrate, validate.

    orthocal simulate --geometry geom.json --offsets 0.2 -0.1 0.3 --out s.csv
    orthocal calibrate s.csv --form reduced6 --out report.json
    orthocal validate report.json post.csv

Every failure prints one line ``<ErrorClass>: <message>`` to stderr and exits
with a code from EXIT_CODES.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import calibration as cal
from . import measurement as meas
from . import report
from .errors import (
    DegenerateGeometry,
    FormMismatch,
    IncompleteSession,
    KinematicsError,
    SchemaError,
)
from .kinematics import Geometry, JointOffsets

EXIT_OK, EXIT_CONFIG, EXIT_SCHEMA, EXIT_INCOMPLETE, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4, 5, 6


class ConfigError(Exception):
    pass


# first match wins, so subclasses come before their bases
EXIT_CODES = (
    (ConfigError, EXIT_CONFIG),
    (KinematicsError, EXIT_CONFIG),
    (SchemaError, EXIT_SCHEMA),
    (FormMismatch, EXIT_SCHEMA),
    (IncompleteSession, EXIT_INCOMPLETE),
    (DegenerateGeometry, EXIT_DEGENERATE),
    (OSError, EXIT_IO),
)


@dataclass
class RunConfig:
    geometry: Geometry
    form: meas.Form = meas.Form.REDUCED6
    noise: meas.NoiseModel | None = None
    repeats: int = 3
    gauge_signs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        if self.noise is not None and self.noise.sigma > 0 and self.noise.seed is None:
            raise ConfigError("a seed is required when noise is enabled")


def load_config(path, args: argparse.Namespace) -> RunConfig:
    """Geometry file plus optional run settings; command-line flags win."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg}, line {e.lineno})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    geo = doc.get("geometry", doc)
    try:
        g = meas.geometry_from_dict(geo)
    except SchemaError as e:
        raise ConfigError(f"{path}: {e}") from None

    form = getattr(args, "form", None) or doc.get("form", meas.Form.REDUCED6.value)
    repeats = getattr(args, "repeats", None)
    if repeats is None:
        repeats = doc.get("repeats", 3)
    noise_doc = dict(doc.get("noise") or {})
    for flag, key in (("sigma", "sigma_mm"), ("resolution", "resolution_mm"), ("seed", "seed")):
        val = getattr(args, flag, None)
        if val is not None:
            noise_doc[key] = val
    try:
        noise = None
        if noise_doc.get("sigma_mm") or noise_doc.get("resolution_mm"):
            seed = noise_doc.get("seed")
            noise = meas.NoiseModel(
                float(noise_doc.get("sigma_mm", 0.0)),
                float(noise_doc.get("resolution_mm", 0.0)),
                None if seed is None else int(seed),
            )
        signs = meas.parse_gauge_signs(doc.get("gauge_signs") or {})
        return RunConfig(g, meas.Form(form), noise, int(repeats), signs)
    except (ValueError, TypeError, SchemaError) as e:
        raise ConfigError(f"{path}: {e}") from None


def cmd_simulate(args) -> int:
    cfg = load_config(args.geometry, args)
    try:
        off = JointOffsets(*args.offsets)
        off.check(cfg.geometry)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    s = meas.simulate_session(cfg.geometry, off, cfg.repeats, cfg.noise, gauge_signs=cfg.gauge_signs)
    meas.write_session(s, args.out)
    exact = meas.exact_deviations(cfg.geometry, off, cfg.form)
    print(f"wrote {len(s.readings)} readings to {args.out}")
    print(f"noiseless {cfg.form.value} deviations [mm]:")
    for k, v in exact.as_dict().items():
        print(f"  {k:<12} {v:+.6f}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    s = meas.parse_session(args.session)
    d = meas.session_to_deviations(s, args.form)
    r = cal.identify_offsets(d, s.geometry)
    pred = cal.predict_improvement(d, r)
    rep = report.calibration_report(s.geometry, d, r, pred)
    if args.out:
        Path(args.out).write_text(json.dumps(rep, indent=2) + "\n")
    sys.stdout.write(report.calibration_text(rep))
    return EXIT_OK


def cmd_validate(args) -> int:
    g, predicted, rms_before = report.load_calibration_report(Path(args.report).read_text())
    s = meas.parse_session(args.session)
    measured = meas.session_to_deviations(s, predicted.form)
    v = cal.validate(measured, predicted, rms_before)
    if args.out:
        Path(args.out).write_text(json.dumps(report.validation_report(v), indent=2) + "\n")
    sys.stdout.write(report.validation_text(v))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_CONFIG, f"ConfigError: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="orthocal", description="Joint-offset calibration from leg-parallelism gauge readings.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    forms = [f.value for f in meas.Form]

    p = sub.add_parser("simulate", help="simulate a gauge session on a machine with given offsets")
    p.add_argument("--geometry", required=True, help="JSON file with L_mm, alpha_max_rad, alpha_min_rad")
    p.add_argument("--offsets", nargs=3, type=float, default=(0.0, 0.0, 0.0), metavar=("DX", "DY", "DZ"))
    p.add_argument("--form", choices=forms, default=None, help="form of the echoed deviations")
    p.add_argument("--repeats", type=int, default=None, help="repeats per posture (default 3)")
    p.add_argument("--sigma", type=float, default=None, help="gauge noise sigma, mm")
    p.add_argument("--resolution", type=float, default=None, help="gauge resolution, mm")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="session file (.csv or .json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="identify joint offsets from a session file")
    p.add_argument("session")
    p.add_argument("--form", choices=forms, default=meas.Form.REDUCED6.value)
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("validate", help="compare a post-calibration session with a report's prediction")
    p.add_argument("report")
    p.add_argument("session")
    p.add_argument("--out", help="JSON comparison path")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:
        for cls, code in EXIT_CODES:
            if isinstance(e, cls):
                msg = " ".join(str(e).split())
                print(f"{type(e).__name__}: {msg}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
