"""Deterministic JSON and CSV writers."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

OUTPUT_DIR_ENV = "RYDCLUSTER_OUTPUT_DIR"
CSV_FLOAT_FORMAT = "%.17e"


def to_jsonable(obj):
    """Convert numpy values, complex numbers and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def payload_text(payload) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)


def document(payload, command: str, config: dict, timestamp: bool = True) -> dict:
    """Wrap a payload with a metadata header; only the header may carry a timestamp."""
    meta = {"command": command, "config": config, "version": __version__}
    if timestamp:
        meta["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return {"meta": meta, "payload": to_jsonable(payload)}


def comparable(doc: dict) -> str:
    """Text of a document with the timestamp removed, for byte comparison."""
    meta = {k: v for k, v in doc["meta"].items() if k != "created"}
    return payload_text({"meta": meta, "payload": doc["payload"]})


def write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(payload_text(doc) + "\n", encoding="utf-8")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([CSV_FLOAT_FORMAT % float(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows), encoding="utf-8")


def default_output_dir() -> Path | None:
    value = os.environ.get(OUTPUT_DIR_ENV)
    return Path(value) if value else None
