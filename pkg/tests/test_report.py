import json
import math

import numpy as np
import pytest

from adveig import analysis as an
from adveig import report
from adveig.problem import preset


def test_dumps_is_sorted_and_exact():
    text = report.dumps({"b": [1.0, np.float64(0.1)], "a": {"z": True, "y": None}, "n": np.int64(3)})
    assert text.endswith("\n")
    data = json.loads(text)
    assert list(data) == ["a", "b", "n"]
    assert data["b"][1] == 0.1 and data["n"] == 3 and data["a"]["z"] is True


def test_non_finite_becomes_null():
    data = json.loads(report.dumps({"x": math.nan, "y": [math.inf, 1.0]}))
    assert data == {"x": None, "y": [None, 1.0]}


def test_string_escaping():
    s = 'a "quoted"\\ line\nnext\t'
    assert json.loads(report.dumps({"s": s}))["s"] == s


def test_float_round_trip():
    vals = list(np.random.default_rng(1).standard_normal(50) * 10.0 ** np.arange(-25, 25))
    assert json.loads(report.dumps(vals)) == vals


def test_empty_csv_has_header():
    assert report.csv_text(("A", "lambda"), []) == "A,lambda\n"


def test_sweep_report_files(tmp_path):
    rep = an.sweep(preset("P1").with_grid(65))
    j1 = report.write_report(rep, "json", tmp_path / "a.json")
    j2 = report.write_report(an.sweep(preset("P1").with_grid(65)), "json", tmp_path / "b.json")
    assert j1 == j2 == (tmp_path / "a.json").read_text()
    csv = report.write_report(rep, "csv", tmp_path / "s.csv").splitlines()
    assert csv[0] == ",".join(report.SWEEP_COLUMNS)
    assert len(csv) == 1 + len(rep.rows) == 5
    assert float(csv[1].split(",")[1]) == rep.rows[0].lam
    with pytest.raises(ValueError):
        report.write_report(rep, "xml", tmp_path / "s.xml")
    with pytest.raises(ValueError):
        report.write_report({"x": 1}, "csv", tmp_path / "x.csv")
