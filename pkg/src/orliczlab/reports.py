"""Check reports and their CSV / JSON / text renderings.

A report is a list of rows, one per verified inequality or computed value,
plus a free-form summary.  Rows carry both sides of the check in log2 form and
the margin, so every failure comes with its witness.  Emission is
deterministic: fixed column order, repr-formatted floats, '\n' newlines.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

CSV_COLUMNS = [
    "check",
    "idx1",
    "idx2",
    "idx3",
    "lhs_log2",
    "rhs_log2",
    "margin_log2",
    "passed",
    "note",
]


@dataclass
class CheckRow:
    check: str
    indices: tuple = ()
    lhs_log2: float | None = None
    rhs_log2: float | None = None
    margin_log2: float | None = None
    passed: bool = True
    note: str = ""

    def as_record(self) -> dict[str, object]:
        idx = list(self.indices) + [None] * (3 - len(self.indices))
        return {
            "check": self.check,
            "idx1": idx[0],
            "idx2": idx[1],
            "idx3": idx[2],
            "lhs_log2": self.lhs_log2,
            "rhs_log2": self.rhs_log2,
            "margin_log2": self.margin_log2,
            "passed": self.passed,
            "note": self.note,
        }


@dataclass
class Report:
    name: str
    rows: list[CheckRow] = field(default_factory=list)
    summary: dict[str, object] = field(default_factory=dict)

    @property
    def failures(self) -> list[CheckRow]:
        return [r for r in self.rows if not r.passed]

    @property
    def passed_all(self) -> bool:
        return not self.failures


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in report.rows:
        rec = row.as_record()
        cells = []
        for col in CSV_COLUMNS:
            text = _cell(rec[col])
            if "," in text or '"' in text:
                text = '"' + text.replace('"', '""') + '"'
            cells.append(text)
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def _jsonable(value: object) -> object:
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if hasattr(value, "render"):
        return value.render()  # LogReal and friends
    return value


def render_json(report: Report) -> str:
    payload = {
        "name": report.name,
        "summary": _jsonable(report.summary),
        "rows": [_jsonable(r.as_record()) for r in report.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_text(report: Report) -> str:
    lines = [f"report: {report.name}"]
    for key in sorted(report.summary, key=str):
        value = str(report.summary[key])
        if "\n" in value:
            lines.append(f"  {key} =")
            lines.extend("    " + part for part in value.splitlines())
        else:
            lines.append(f"  {key} = {value}")
    n_fail = len(report.failures)
    lines.append(f"  rows: {len(report.rows)}, failures: {n_fail}")
    by_check: dict[str, int] = {}
    for row in report.rows:
        by_check[row.check] = by_check.get(row.check, 0) + 1
    for check in sorted(by_check):
        fails = sum(1 for r in report.rows if r.check == check and not r.passed)
        status = "ok" if fails == 0 else f"{fails} FAILED"
        lines.append(f"  [{check}] {by_check[check]} checks: {status}")
    for row in report.failures[:50]:
        lines.append(
            f"  FAIL [{row.check}] at {row.indices}: "
            f"lhs_log2={row.lhs_log2} rhs_log2={row.rhs_log2} {row.note}"
        )
    return "\n".join(lines) + "\n"


_RENDERERS = {"csv": render_csv, "json": render_json, "text": render_text}

FORMATS = tuple(_RENDERERS)


def emit_report(report: Report, fmt: str, path: str | Path | None = None) -> str:
    """Render a report and optionally write it; returns the rendered text."""
    if fmt not in _RENDERERS:
        raise ValueError(f"unsupported format {fmt!r}; choose from {FORMATS}")
    text = _RENDERERS[fmt](report)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text
