"""Serialization of gait libraries, seeds and comparison tables.

Libraries and seeds are JSON (schema-versioned, human-diffable); the
method-comparison study emits CSV plus two-column plot-data text files so
results can be plotted with any tool. Floats are serialized with Python's
shortest round-trip repr, so write-then-read is lossless.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .continuation import CurvePoint, GaitLibrary
from .indirect import IndirectDecision
from .reconstruct import PassiveGait

LIBRARY_SCHEMA = "gaitforge/1"
SEED_SCHEMA = "gaitforge/seed/1"


class LibraryFormatError(Exception):
    """Raised when a library or seed file cannot be parsed."""


def _tolist(x):
    return np.asarray(x, dtype=float).tolist()


def library_to_dict(lib: GaitLibrary, metadata: dict,
                    costs=None, classifications=None) -> dict:
    """Flatten a GaitLibrary into the schema-versioned document. `costs`
    and `classifications` are optional per-point sequences."""
    n_pts = len(lib.points)
    costs = costs if costs is not None else [None] * n_pts
    classifications = classifications if classifications is not None \
        else [None] * n_pts
    meta = dict(metadata)
    meta.setdefault("schema_notes", "sigma values in model units "
                                    "(angles in radians)")
    meta["artifact_version"] = __version__
    meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    meta.update({k: v for k, v in lib.metadata.items()})
    points = []
    for pt, cost, cls in zip(lib.points, costs, classifications):
        points.append({
            "sigma": float(pt.sigma),
            "chi": _tolist(pt.chi),
            "tangent": _tolist(pt.tangent),
            "residual_norm": float(pt.residual_norm),
            "step_size": float(pt.step_accepted_at),
            "turning_point": bool(pt.turning_point),
            "cost": None if cost is None else float(cost),
            "classification": cls,
        })
    return {"schema": LIBRARY_SCHEMA, "metadata": meta, "points": points}


def dict_to_library(doc: dict) -> GaitLibrary:
    if doc.get("schema") != LIBRARY_SCHEMA:
        raise LibraryFormatError(
            f"unsupported schema {doc.get('schema')!r}, "
            f"expected {LIBRARY_SCHEMA!r}")
    pts = []
    for rec in doc["points"]:
        nu = np.concatenate([np.asarray(rec["chi"], float),
                             [float(rec["sigma"])]])
        pts.append(CurvePoint(
            nu=nu, tangent=np.asarray(rec["tangent"], float),
            residual_norm=float(rec["residual_norm"]),
            step_accepted_at=float(rec["step_size"]),
            turning_point=bool(rec["turning_point"])))
    return GaitLibrary(points=pts, metadata=dict(doc["metadata"]))


def write_library(path, lib: GaitLibrary, metadata: dict, costs=None,
                  classifications=None) -> None:
    doc = library_to_dict(lib, metadata, costs, classifications)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_library(path) -> tuple:
    """Returns (GaitLibrary, full document)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise LibraryFormatError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    return dict_to_library(doc), doc


def seed_to_dict(model: str, passive: PassiveGait, chi: IndirectDecision,
                 diagnostics: dict | None = None) -> dict:
    diag = {}
    for k, v in (diagnostics or {}).items():
        diag[k] = _tolist(v) if isinstance(v, np.ndarray) else v
    return {
        "schema": SEED_SCHEMA,
        "model": model,
        "passive": {
            "T_star": float(passive.T_star),
            "x0_star": _tolist(passive.x0_star),
            "sigma": _tolist(passive.sigma),
            "free_index": int(passive.free_index),
            "branch_tag": passive.branch_tag,
            "residual_norm": float(passive.residual_norm),
        },
        "decision": {
            "T": float(chi.T), "x0": _tolist(chi.x0), "p0": _tolist(chi.p0),
            "q": float(chi.q), "u0": _tolist(chi.u0),
            "lam": _tolist(chi.lam),
        },
        "sigma": _tolist(passive.sigma),
        "diagnostics": diag,
        "artifact_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def write_seed(path, model: str, passive: PassiveGait, chi: IndirectDecision,
               diagnostics: dict | None = None) -> None:
    Path(path).write_text(
        json.dumps(seed_to_dict(model, passive, chi, diagnostics), indent=1)
        + "\n")


def read_seed(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise LibraryFormatError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if doc.get("schema") != SEED_SCHEMA:
        raise LibraryFormatError(
            f"unsupported schema {doc.get('schema')!r}, "
            f"expected {SEED_SCHEMA!r}")
    return doc


def seed_decision(doc: dict) -> tuple:
    """(IndirectDecision, sigma) from a seed document."""
    d = doc["decision"]
    chi = IndirectDecision(T=d["T"], x0=d["x0"], p0=d["p0"], q=d["q"],
                           u0=d["u0"], lam=d["lam"])
    return chi, np.asarray(doc["sigma"], dtype=float)


@dataclass
class CompareRow:
    basis: str
    n_xi: int
    cond_number: float | None
    cost: float | None
    rel_cost_error_vs_indirect: float | None
    classification: str | None
    wall_time_ms: float | None
    error: str = ""


def write_compare_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["basis", "n_xi", "cond_number", "cost",
                    "rel_cost_error_vs_indirect", "classification",
                    "wall_time_ms"])
        for r in rows:
            w.writerow([
                r.basis, r.n_xi,
                "" if r.cond_number is None else repr(r.cond_number),
                "" if r.cost is None else repr(r.cost),
                "" if r.rel_cost_error_vs_indirect is None
                else repr(r.rel_cost_error_vs_indirect),
                r.classification or "",
                "" if r.wall_time_ms is None else f"{r.wall_time_ms:.3f}",
            ])


def write_plot_data(path, x, y, header: str | None = None) -> None:
    """Two-column whitespace-separated text, one (x, y) pair per line."""
    lines = [] if header is None else [f"# {header}"]
    for xi, yi in zip(np.asarray(x, float), np.asarray(y, float)):
        lines.append(f"{float(xi)!r}\t{float(yi)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_plot_data(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        rows.append([float(parts[0]), float(parts[1])])
    return np.asarray(rows)
