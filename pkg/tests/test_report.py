import json

import numpy as np
import pytest
from uncertainties import ufloat

from semigroup_analysis.report import (
    RESULTS_FILENAME,
    SUMMARY_FILENAME,
    Report,
    emit_plotdata,
    read_report,
    to_jsonable,
)

HEADER = {"graph": {"generator": "cycle", "parameters": {"N": 8}}, "seed": 0}


def test_to_jsonable():
    value = {
        "fit": ufloat(1.5, 0.25),
        "rows": np.array([[1, 2], [3, 4]]),
        "flag": np.bool_(True),
        "count": np.int64(3),
        "limit": float("inf"),
        7: (np.float64(0.5), None),
    }
    assert to_jsonable(value) == {
        "fit": {"value": 1.5, "error": 0.25},
        "rows": [[1, 2], [3, 4]],
        "flag": True,
        "count": 3,
        "limit": "inf",
        "7": [0.5, None],
    }
    json.dumps(to_jsonable(value))


class TestReport:
    def test_checks(self):
        report = Report(HEADER)
        report.add("growth_profile", {"r_max": 4}, {"c": 1.0})
        assert report.passed
        report.add("kernel_table", {}, {}, passed=True)
        report.add("chain_check", {}, {}, seed=3, passed=np.bool_(False))
        assert len(report.checks) == 2
        assert not report.passed
        assert report.records[2] == {
            "operation": "chain_check",
            "parameters": {},
            "seed": 3,
            "result": {},
            "passed": False,
        }
        assert "checks: 2, failures: 1" in report.summary()

    def test_witnesses_can_be_omitted(self):
        report = Report(HEADER, witnesses=False)
        report.add("cde_verify", {}, {"verdict": "violated", "witness": {"0": 1.0}})
        assert report.records[0]["result"] == {"verdict": "violated"}

    def test_unknown_table(self):
        with pytest.raises(KeyError):
            Report(HEADER).add_table("heat-map", [(1, 2, 3)])

    def test_write_and_read(self, tmp_path):
        report = Report(HEADER)
        report.add("growth_profile", {"r_max": 2}, {"volumes": np.array([6.0, 10.0])})
        report.add_table("volume-growth", [(1, 6.0, 6.0), (2, 10.0, 12.0)])
        filename = report.write(tmp_path)
        assert filename == tmp_path / RESULTS_FILENAME
        assert (tmp_path / SUMMARY_FILENAME).read_text().startswith("graph: cycle")

        lines = filename.read_text().splitlines()
        assert json.loads(lines[0]) == {"header": HEADER}
        assert len(lines) == 3

        copy = read_report(filename)
        assert copy.header == HEADER
        assert copy.records == report.records
        assert copy.tables == {"volume-growth": [(1.0, 6.0, 6.0), (2.0, 10.0, 12.0)]}

    def test_read_rejects_other_files(self, tmp_path):
        filename = tmp_path / "other.jsonl"
        filename.write_text('{"operation": "x"}\n')
        with pytest.raises(ValueError):
            read_report(filename)


class TestPlotData:
    def test_decay_table_drops_nonpositive_rows(self, tmp_path):
        report = Report(HEADER)
        rows = [(1.0, 0.5, 0.5), (2.0, 0.0, 0.25), (4.0, 0.125, float("nan"))]
        report.add_table("cue-decay", rows)
        filename = emit_plotdata(report, "cue-decay", tmp_path)
        assert filename.name == "cue-decay.csv"
        lines = filename.read_text().splitlines()
        assert lines == ["t,sup_p,fitted", "1,0.5,0.5", "4,0.125,nan"]

    def test_empty_table(self, tmp_path):
        report = Report(HEADER)
        report.add_table("due-decay", [(1, 0.0, 0.0)])
        with pytest.raises(ValueError):
            emit_plotdata(report, "due-decay", tmp_path)
        with pytest.raises(ValueError):
            emit_plotdata(report, "beta-vs-eps", tmp_path)

    def test_unknown_table(self, tmp_path):
        with pytest.raises(KeyError):
            emit_plotdata(Report(HEADER), "heat-map", tmp_path)
