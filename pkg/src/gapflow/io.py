"""CSV and JSON file formats.

Arrivals CSV
    ``time_s`` (decimal seconds) and an optional integer ``lane`` column.
    Without ``lane`` the file is one merged, disorderly stream.
Gaps CSV
    A single ``gap_s`` column.
Model JSON
    ``{"schema_version": 1, "kind": "gap_model", "family", "L",
    "components": [{"family", "params": {...}}], "provenance"}``.

Floats are written with ``repr`` so every file round-trips exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .distributions import Family, make_headway_model
from .errors import DataError
from .estimation import FitReport
from .simulation import ArrivalTimeline
from .superposition import SuperposedGapModel

__all__ = [
    "read_arrivals",
    "write_arrivals",
    "read_gaps",
    "write_gaps",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "save_json",
    "load_json",
]

SCHEMA_VERSION = 1


def _rows(path, required):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: file is empty")
        header = [h.strip() for h in header]
        for col in required:
            if col not in header:
                raise DataError(f"{path}: missing column {col!r} in header {header}")
        idx = {h: i for i, h in enumerate(header)}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, {h: row[i].strip() for h, i in idx.items()}


def _float(value, path, lineno, col):
    try:
        out = float(value)
    except ValueError:
        raise DataError(f"{path}:{lineno}: {col}={value!r} is not a number") from None
    if not np.isfinite(out):
        raise DataError(f"{path}:{lineno}: {col} must be finite")
    return out


def read_arrivals(path, sort: bool = False) -> ArrivalTimeline:
    """Read crossing times into a timeline.

    With ``sort=True`` times are sorted within each lane instead of raising
    on out-of-order rows.
    """
    lanes: dict = {}
    has_lane = None
    for lineno, row in _rows(path, ["time_s"]):
        if has_lane is None:
            has_lane = "lane" in row
        t = _float(row["time_s"], path, lineno, "time_s")
        if has_lane:
            try:
                lane = int(row["lane"])
            except ValueError:
                raise DataError(f"{path}:{lineno}: lane={row['lane']!r} is not an integer") from None
        else:
            lane = None
        lanes.setdefault(lane, []).append(t)
    if not lanes:
        raise DataError(f"{path}: no arrivals")
    if sort:
        lanes = {k: sorted(v) for k, v in lanes.items()}
    if not has_lane:
        return ArrivalTimeline.from_merged(lanes[None])
    return ArrivalTimeline(dict(sorted(lanes.items())))


def write_arrivals(timeline: ArrivalTimeline, path) -> None:
    """Write arrivals in time order (ties broken by lane)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if timeline.merged:
            w.writerow(["time_s"])
            for t in timeline.merged_times():
                w.writerow([repr(float(t))])
            return
        w.writerow(["time_s", "lane"])
        rows = [(float(t), lane) for lane, ts in timeline.lanes.items() for t in ts]
        rows.sort()
        for t, lane in rows:
            w.writerow([repr(t), lane])


def read_gaps(path) -> np.ndarray:
    out = []
    for lineno, row in _rows(path, ["gap_s"]):
        g = _float(row["gap_s"], path, lineno, "gap_s")
        if g < 0:
            raise DataError(f"{path}:{lineno}: negative gap {g}")
        out.append(g)
    if not out:
        raise DataError(f"{path}: no gaps")
    return np.array(out)


def write_gaps(gaps, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gap_s"])
        for g in np.asarray(gaps, dtype=float).ravel():
            w.writerow([repr(float(g))])


def model_to_dict(model: SuperposedGapModel, provenance: dict | None = None) -> dict:
    families = {c.family for c in model.components}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "gap_model",
        "family": families.pop().value if len(families) == 1 else "mixed",
        "L": model.L,
        "components": [{"family": c.family.value, "params": c.as_dict()} for c in model.components],
    }
    if provenance:
        doc["provenance"] = provenance
    return doc


def model_from_dict(doc: dict) -> SuperposedGapModel:
    if doc.get("schema_version") != SCHEMA_VERSION or doc.get("kind") != "gap_model":
        raise DataError("not a version 1 gap_model document")
    comps = doc.get("components")
    if not comps:
        raise DataError("gap model has no components")
    try:
        models = [make_headway_model(Family.parse(c["family"]), c["params"]) for c in comps]
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed component entry: {exc}") from None
    if "L" in doc and int(doc["L"]) != len(models):
        raise DataError(f"L={doc['L']} does not match {len(models)} components")
    return SuperposedGapModel(models)


def save_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def save_model(model: SuperposedGapModel, path, provenance: dict | None = None) -> None:
    save_json(model_to_dict(model, provenance), path)


def load_model(path) -> SuperposedGapModel:
    doc = load_json(path)
    # a fit output file embeds the chosen model
    if doc.get("kind") in ("fit", "headway_fit") and "model" in doc:
        doc = doc["model"]
    elif doc.get("kind") == "fit_report":
        return FitReport.from_dict(doc).model
    return model_from_dict(doc)
