import csv
import json

import numpy as np

from nslab.monitors import EstimateReport
from nslab.reporting import (
    write_fuzz_report,
    write_manifest,
    write_norm_table,
    write_report,
)


def sample_report():
    rows = [
        {"t": 0.0, "lhs": 1.0, "rhs": 2.0, "margin": 1.0},
        {"t": 0.5, "lhs": 1.5, "rhs": 2.0, "margin": 0.5, "extra": 7.0},
    ]
    return EstimateReport(
        name="demo_monitor",
        rows=rows,
        tolerance=0.0,
        constants=[{"name": "c0", "value": 3.0, "provenance": "exact"}],
        info={"note": 1},
    )


def test_report_json_schema(tmp_path):
    paths = write_report(sample_report(), str(tmp_path), formats=("json",))
    payload = json.loads((tmp_path / "reports" / "demo_monitor.json").read_text())
    assert payload["schema"] == "nslab-report-1"
    assert payload["name"] == "demo_monitor"
    assert payload["passed"] is True
    assert payload["min_margin"] == 0.5
    assert payload["constants"][0]["provenance"] == "exact"
    assert len(paths) == 1


def test_report_csv_columns(tmp_path):
    write_report(sample_report(), str(tmp_path), formats=("csv",))
    with open(tmp_path / "reports" / "demo_monitor.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "lhs", "rhs", "margin", "extra"]
    assert rows[1][:4] == ["0.0", "1.0", "2.0", "1.0"]
    assert rows[2][4] == "7.0"


def test_report_figure_rendering(tmp_path):
    paths = write_report(sample_report(), str(tmp_path), formats=("png",))
    png = tmp_path / "figures" / "demo_monitor.png"
    assert png.exists() and png.stat().st_size > 0
    assert str(png) in paths
    # single-row reports render as bars
    single = EstimateReport(
        name="single",
        rows=[{"t": 1.0, "lhs": 2.0, "rhs": 5.0, "margin": 3.0}],
        tolerance=0.0,
    )
    write_report(single, str(tmp_path), formats=("png",))
    assert (tmp_path / "figures" / "single.png").stat().st_size > 0


def test_norm_table_columns(tmp_path):
    rows = [
        {"t": 0.0, "l2": 1.0, "grad1_l2": 2.0, "linf": 0.5, "l4": 1.2},
        {"t": 1.0, "l2": 0.9, "grad1_l2": 1.8, "linf": 0.45, "l4": 1.1},
    ]
    write_norm_table(rows, str(tmp_path), formats=("csv", "png"))
    with open(tmp_path / "reports" / "norms.csv", newline="") as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["t", "l2", "grad1_l2", "linf", "l4"]
    assert (tmp_path / "figures" / "norms.png").exists()


def test_fuzz_report_schema(tmp_path):
    path = tmp_path / "fuzz.json"
    write_fuzz_report(
        {"seed": 7, "draws": 100, "worst_margin": 0.25, "violations": 0}, str(path)
    )
    payload = json.loads(path.read_text())
    assert payload["schema"] == "nslab-fuzz-1"
    assert payload["seed"] == 7 and payload["violations"] == 0


def test_manifest_schema_and_sorted_keys(tmp_path):
    write_manifest({"b": 1, "a": {"z": 2, "y": np.float64(3.0)}}, str(tmp_path))
    raw = (tmp_path / "manifest.json").read_text()
    payload = json.loads(raw)
    assert payload["schema"] == "nslab-manifest-1"
    assert raw.index('"a"') < raw.index('"b"')
