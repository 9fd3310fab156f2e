"""JSON-lines and CSV serialisation of experiment reports."""
from __future__ import annotations

import csv
import io
import json
from typing import Iterable, List

from .experiments import CLASSES, ExperimentReport

CSV_COLUMNS = ("experiment", "d", "nu", "sigma", "E0", "class", "ci_lo", "ci_hi", "seed")


def dumps_report(report: ExperimentReport, include_timing: bool = False) -> str:
    # allow_nan=False: every float in a report must be finite
    return json.dumps(report.to_json(include_timing), sort_keys=True, allow_nan=False)


def write_jsonl(reports: Iterable[ExperimentReport], fh, include_timing: bool = False) -> None:
    for r in reports:
        fh.write(dumps_report(r, include_timing) + "\n")


def read_jsonl(fh) -> List[ExperimentReport]:
    return [ExperimentReport.from_json(json.loads(line)) for line in fh if line.strip()]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_rows(report: ExperimentReport) -> List[dict]:
    """Flatten a report into rows keyed by :data:`CSV_COLUMNS`."""
    i, o = report.inputs, report.outputs
    base = {
        "experiment": report.kind,
        "d": i.get("d"),
        "nu": i.get("nu"),
        "sigma": i.get("sigma", i.get("gamma")),
        "E0": o.get("E0", o.get("extrapolated")),
        "class": o.get("class"),
        "ci_lo": None,
        "ci_hi": None,
        "seed": i.get("seed", i.get("master_seed")),
    }
    if report.kind == "mc_summary":
        rows = []
        for c in CLASSES:
            lo, hi = o["ci95"][c]
            rows.append({**base, "E0": None, "class": c, "ci_lo": lo, "ci_hi": hi})
        return rows
    return [base]


def write_csv(reports: Iterable[ExperimentReport], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        for row in csv_rows(r):
            writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])


def csv_text(reports: Iterable[ExperimentReport]) -> str:
    buf = io.StringIO()
    write_csv(reports, buf)
    return buf.getvalue()
