"""JSON / CSV serialization of command results."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from importlib import resources
from pathlib import Path

from . import __version__

CSV_COLUMNS = {
    "ncal": ["n", "ncal", "root", "m", "n_weighted", "chi"],
    "roots": ["n", "ncal", "root", "m", "n_weighted", "chi"],
    "weighted": ["n", "m_intersecting", "m_disjoint", "n_weighted", "distortion_max", "chi"],
    "distortion": ["n", "sum_min", "sum_max", "C", "chi"],
    "coboundary": ["n", "spread"],
    "appendix-a": ["n", "ncal", "lower", "upper", "R_tilde_lower", "R_tilde_upper"],
    "scan": ["n", "positives", "samples", "fraction", "ci_low", "ci_high", "threshold"],
}


def _clean(value):
    """Make a structure JSON-safe: tuples to lists, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def envelope(command: str, config: dict, results: dict, marginal: bool = False) -> dict:
    return {
        "tool": "partcap",
        "version": __version__,
        "command": command,
        "config": _clean(config),
        "results": _clean(results),
        "marginal": bool(marginal),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_json(report: dict, path: str | Path) -> None:
    Path(path).write_text(dumps(report))


def csv_text(command: str, rows: list[dict]) -> str:
    columns = CSV_COLUMNS[command]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _clean(row.get(k)) for k in columns})
    return buf.getvalue()


def write_csv(command: str, rows: list[dict], path: str | Path) -> None:
    Path(path).write_text(csv_text(command, rows))


def schema() -> dict:
    return json.loads(resources.files("partcap").joinpath("schemas/report.schema.json").read_text())


def records_as_dicts(records) -> list[dict]:
    return [asdict(r) for r in records]
