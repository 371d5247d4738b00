"""Serialisation of reports and tables: JSON and CSV alongside rendered
figures.

Schemas (versioned):

* report JSON: ``{"schema": "nslab-report-1", ...EstimateReport.as_dict()}``
* report CSV: header row then one line per report row; columns are ``t``,
  ``lhs``, ``rhs``, ``margin`` followed by any extra row keys in sorted
  order.
* norm table CSV: columns ``t``, ``l2``, ``grad1_l2``, ``linf``, then any
  ``l<r>`` columns in sorted order.
* fuzz report JSON: ``{"schema": "nslab-fuzz-1", "seed", "draws",
  "worst_margin", "violations"}``
* manifest JSON: ``{"schema": "nslab-manifest-1", ...}`` with the config
  echo, its content hash, and every constant used with its source label.

No output embeds a timestamp, so identical configs yield identical bytes.
"""

from __future__ import annotations

import csv
import json
import os

from .monitors import EstimateReport
from .plotting import norms_figure, report_figure

__all__ = [
    "write_report",
    "write_norm_table",
    "write_fuzz_report",
    "write_manifest",
]


def _json_dump(payload: dict, path: str):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def write_report(report: EstimateReport, out_dir: str, formats=("json", "csv", "png")):
    """Write one report in the requested formats; returns the file paths."""
    reports_dir = os.path.join(out_dir, "reports")
    os.makedirs(reports_dir, exist_ok=True)
    paths = []
    if "json" in formats:
        path = os.path.join(reports_dir, f"{report.name}.json")
        _json_dump({"schema": "nslab-report-1", **report.as_dict()}, path)
        paths.append(path)
    if "csv" in formats:
        path = os.path.join(reports_dir, f"{report.name}.csv")
        base_cols = ["t", "lhs", "rhs", "margin"]
        extra = sorted({k for row in report.rows for k in row} - set(base_cols))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(base_cols + extra)
            for row in report.rows:
                writer.writerow(
                    [row.get(c, "") for c in base_cols] + [row.get(c, "") for c in extra]
                )
        paths.append(path)
    if "png" in formats:
        figures_dir = os.path.join(out_dir, "figures")
        os.makedirs(figures_dir, exist_ok=True)
        paths.append(report_figure(report, os.path.join(figures_dir, f"{report.name}.png")))
    return paths


def write_norm_table(rows: list, out_dir: str, formats=("csv", "png")):
    reports_dir = os.path.join(out_dir, "reports")
    os.makedirs(reports_dir, exist_ok=True)
    paths = []
    if "csv" in formats or "json" in formats:
        path = os.path.join(reports_dir, "norms.csv")
        base_cols = ["t", "l2", "grad1_l2", "linf"]
        extra = sorted({k for row in rows for k in row} - set(base_cols))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(base_cols + extra)
            for row in rows:
                writer.writerow(
                    [row.get(c, "") for c in base_cols] + [row.get(c, "") for c in extra]
                )
        paths.append(path)
    if "png" in formats:
        figures_dir = os.path.join(out_dir, "figures")
        os.makedirs(figures_dir, exist_ok=True)
        paths.append(norms_figure(rows, os.path.join(figures_dir, "norms.png")))
    return paths


def write_fuzz_report(report: dict, path: str):
    _json_dump({"schema": "nslab-fuzz-1", **report}, path)
    return path


def write_manifest(manifest: dict, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "manifest.json")
    _json_dump({"schema": "nslab-manifest-1", **manifest}, path)
    return path
