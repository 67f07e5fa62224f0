"""Verification records and their deterministic text serialisation.

Documents are JSON with sorted keys and floats written with 17 significant
digits, so identical inputs give identical bytes and every double survives a
round trip.  Sweeps are tabulated as CSV with a fixed header.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
PASS_SLACK = 1e-9


@dataclass
class VerificationReport:
    name: str
    instance: dict
    lhs: float | None = None
    rhs: float | None = None
    r_star: float | None = None
    constant_value: float | None = None
    diagnostics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def ratio(self) -> float | None:
        if self.lhs is None or self.rhs is None:
            return None
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    @property
    def inequality_holds(self) -> bool | None:
        if self.lhs is None or self.rhs is None:
            return None
        return self.lhs <= self.rhs * (1.0 + PASS_SLACK)

    @property
    def passed(self) -> bool:
        ok = all(bool(v) for v in self.checks.values())
        holds = self.inequality_holds
        return ok and (holds is None or holds)

    def to_document(self, with_runtime: bool = False) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": "verification_report",
            "name": self.name,
            "instance": self.instance,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "r_star": self.r_star,
            "constant_value": self.constant_value,
            "diagnostics": self.diagnostics,
            "checks": self.checks,
            "pass": self.passed,
        }
        if with_runtime:
            doc["runtime"] = self.runtime
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> VerificationReport:
        return cls(
            name=doc["name"], instance=doc["instance"], lhs=doc["lhs"], rhs=doc["rhs"],
            r_star=doc["r_star"], constant_value=doc["constant_value"],
            diagnostics=doc["diagnostics"], checks=doc["checks"], runtime=doc.get("runtime", 0.0),
        )


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return format(x, ".17g")


def _emit(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, key in enumerate(sorted(obj)):
            out.append(f"{pad}{json.dumps(str(key))}: ")
            _emit(obj[key], indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in items):
            out.append("[")
            for i, v in enumerate(items):
                if i:
                    out.append(", ")
                _emit(v, indent, level + 1, out)
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(items):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "]")
    elif hasattr(obj, "to_document"):
        _emit(obj.to_document(), indent, level, out)
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_document(obj, indent: int = 2) -> str:
    out: list[str] = []
    _emit(obj, indent, 0, out)
    return "".join(out) + "\n"


def loads_document(text: str):
    return json.loads(text)


CSV_COLUMNS = ["index", "name", "instance", "lhs", "rhs", "ratio", "r_star", "constant_value", "pass"]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, dict):
        return dumps_document(v, indent=0).replace("\n", "")
    return str(v)


def dumps_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, rep in enumerate(reports):
        doc = rep.to_document()
        writer.writerow([str(i)] + [_cell(doc[c]) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def write_report(report, path, fmt: str = "document") -> None:
    """Write one report (or a list of reports) as a document or as CSV rows."""
    if fmt == "csv":
        reports = report if isinstance(report, (list, tuple)) else [report]
        text = dumps_csv(reports)
    elif fmt == "document":
        text = dumps_document(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    Path(path).write_text(text)


def read_report(path):
    return loads_document(Path(path).read_text())
