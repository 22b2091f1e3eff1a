"""CSV emission: one row per run, stable column order."""
from __future__ import annotations

import csv
import io

from .metrics import SimMetrics

KEY_COLUMNS = ["benchmark", "n", "threads", "policy", "mode", "seed"]
COLUMNS = KEY_COLUMNS + SimMetrics.field_names()


def report_row(result, policy: str, seed: int) -> dict:
    spec = result.spec
    row = {"benchmark": spec.bench, "n": spec.size, "threads": spec.threads,
           "policy": str(policy), "mode": spec.mode if spec.bench != "triad" else "none", "seed": seed}
    row.update(result.metrics.as_row())
    return row


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(rows) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("a report needs at least one completed run")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(r[c]) for c in COLUMNS])
    return buf.getvalue()


def write_report(rows, path) -> None:
    text = emit_report(rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_report(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
