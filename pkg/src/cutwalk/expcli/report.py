"""Summary reports and their CSV / JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class EmitError(OSError):
    """Report could not be written."""


@dataclass
class SummaryReport:
    experiment: dict
    results: dict
    comparisons: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    wall_clock: float | None = None
    # (suffix, header, rows) written next to the main output
    series: list[tuple[str, tuple[str, ...], list]] = field(default_factory=list, repr=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "experiment": self.experiment,
            "results": self.results,
            "comparisons": self.comparisons,
            "provenance": self.provenance,
        }
        if include_timing:
            out["wall_clock_seconds"] = self.wall_clock
        return out


def comparison(name: str, lhs_name: str, lhs: float, op: str, rhs_name: str, rhs: float,
               margin: float = 0.0) -> dict:
    """``lhs op rhs - margin`` (for >=) or ``lhs op rhs + margin`` (for <=)."""
    if op == ">=":
        holds = lhs >= rhs - margin
    elif op == "<=":
        holds = lhs <= rhs + margin
    elif op == ">":
        holds = lhs > rhs - margin
    else:
        raise ValueError(f"unsupported operator {op}")
    return {"name": name, "lhs_name": lhs_name, "lhs": lhs, "op": op, "rhs_name": rhs_name,
            "rhs": rhs, "margin": margin, "holds": bool(holds)}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def flatten(obj, prefix: str = "") -> dict:
    """Nested dicts and lists to dotted column names; list items get their index."""
    out: dict = {}
    if isinstance(obj, dict):
        items = obj.items()
    elif isinstance(obj, list):
        items = ((str(i), v) for i, v in enumerate(obj))
    else:
        return {prefix: obj}
    for k, v in items:
        key = f"{prefix}.{k}" if prefix else str(k)
        if isinstance(v, (dict, list)) and v:
            out.update(flatten(v, key))
        elif isinstance(v, (dict, list)):
            out[key] = ""
        else:
            out[key] = v
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_json(report: SummaryReport, include_timing: bool = False) -> str:
    return json.dumps(_clean(report.to_dict(include_timing)), sort_keys=True, indent=2) + "\n"


def render_csv(report: SummaryReport, include_timing: bool = False) -> str:
    flat = flatten(_clean(report.to_dict(include_timing)))
    cols = sorted(flat)
    buf = io.StringIO()
    writer = csv.writer(buf)  # RFC 4180: CRLF rows, minimal quoting
    writer.writerow(cols)
    writer.writerow([_fmt(flat[c]) for c in cols])
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit(report: SummaryReport, path: str | Path, fmt: str, include_timing: bool = False) -> list[Path]:
    """Write the report and any two-column series; returns the paths written."""
    path = Path(path)
    if fmt == "json":
        text = render_json(report, include_timing)
    elif fmt == "csv":
        text = render_csv(report, include_timing)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    _write(path, text)
    written = [path]
    for suffix, header, rows in report.series:
        side = path.with_name(f"{path.stem}.{suffix}.csv")
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(_clean(v)) for v in row])
        _write(side, buf.getvalue())
        written.append(side)
    return written
