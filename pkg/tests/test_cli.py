import csv

import pytest

from semigroup_analysis import cli
from semigroup_analysis.cli import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, main
from semigroup_analysis.report import RESULTS_FILENAME, read_report

TWO_POINT = """
[graph]
generator = two_point

[curvature]
restarts = 4
"""

WINDOW = """
[graph]
generator = lattice_window
L = 4
d = 1

[kernels]
steps = 16
"""

WINDOW_CHAINS = """
[graph]
generator = lattice_window
L = 40
d = 1
alpha = 0.25

[chains]
chains = N=>UC
t_grid = 1, 2, 4
families = ball-indicators
budget = 40
"""


@pytest.fixture
def two_point_config(tmp_path):
    filename = tmp_path / "two_point.ini"
    filename.write_text(TWO_POINT)
    return filename


def results(directory):
    return (directory / RESULTS_FILENAME).read_bytes()


class TestSuite:
    def test_two_point_defaults(self, tmp_path, two_point_config, capsys):
        out = tmp_path / "out"
        assert main(["suite", "--config", str(two_point_config), "--out", str(out)]) == EXIT_OK
        report = read_report(out / RESULTS_FILENAME)
        operations = {record["operation"] for record in report.records}
        assert {
            "kernel_table",
            "growth_profile",
            "cde_verify",
            "functional_quotients",
            "beta_logfit",
            "faber_krahn_scan",
            "chain_check",
        } <= operations
        assert report.passed
        assert report.header["graph"] == {"generator": "two_point", "parameters": {}}
        assert "records written to" in capsys.readouterr().out

    def test_reruns_are_identical(self, tmp_path, two_point_config):
        out = tmp_path / "out"
        arguments = ["suite", "--config", str(two_point_config), "--out", str(out), "--seed", "7"]
        assert main(arguments) == EXIT_OK
        first = results(out)
        assert main(arguments) == EXIT_OK
        assert results(out) == first

    def test_cache_does_not_change_records(self, tmp_path, two_point_config):
        arguments = ["kernel", "--config", str(two_point_config)]
        assert main(arguments + ["--out", str(tmp_path / "plain"), "--cache", "off"]) == EXIT_OK
        cache = ["--cache", str(tmp_path / "cache")]
        assert main(arguments + ["--out", str(tmp_path / "cold")] + cache) == EXIT_OK
        assert main(arguments + ["--out", str(tmp_path / "warm")] + cache) == EXIT_OK
        assert list((tmp_path / "cache").glob("*.kernel"))

        records = [
            read_report(tmp_path / name / RESULTS_FILENAME).records
            for name in ("plain", "cold", "warm")
        ]
        assert records[0] == records[1] == records[2]

    def test_no_witness(self, tmp_path, two_point_config):
        out = tmp_path / "out"
        arguments = ["curvature", "--config", str(two_point_config), "--out", str(out)]
        assert main(arguments + ["--no-witness"]) == EXIT_OK
        record = read_report(out / RESULTS_FILENAME).records[0]
        assert record["operation"] == "cde_verify"
        assert "witness" not in record["result"]

    def test_failed_check(self, tmp_path, two_point_config, monkeypatch):
        monkeypatch.setattr(cli, "INVARIANT_TOLERANCE", -1.0)
        arguments = ["kernel", "--config", str(two_point_config), "--out", str(tmp_path)]
        assert main(arguments) == EXIT_CHECK_FAILED


class TestErrors:
    def test_guard_violation_names_the_analysis(self, tmp_path, capsys):
        filename = tmp_path / "window.ini"
        filename.write_text(WINDOW)
        arguments = ["kernel", "--config", str(filename), "--out", str(tmp_path / "out")]
        assert main(arguments) == EXIT_ERROR
        assert "[kernels]" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_chains_on_a_lattice_window(self, tmp_path, capsys):
        filename = tmp_path / "window.ini"
        filename.write_text(WINDOW_CHAINS)
        out = tmp_path / "out"
        assert main(["chains", "--config", str(filename), "--out", str(out)]) != EXIT_ERROR
        records = read_report(out / RESULTS_FILENAME).records
        assert [record["result"]["inputs"]["t_grid"] for record in records] == [[1.0, 2.0, 4.0]]

    def test_chain_horizon_is_checked_before_running(self, tmp_path, capsys):
        filename = tmp_path / "window.ini"
        filename.write_text(WINDOW_CHAINS)
        out = tmp_path / "out"
        arguments = ["chains", "--config", str(filename), "--out", str(out)]
        assert main(arguments + ["--set", "chains.chains=UC=>N"]) == EXIT_ERROR
        assert "[chains]" in capsys.readouterr().err
        assert not out.exists()

    def test_missing_config(self, capsys):
        assert main(["suite"]) == EXIT_ERROR
        assert "--config" in capsys.readouterr().err

    def test_bad_override(self, two_point_config, capsys):
        assert main(["suite", "--config", str(two_point_config), "--set", "seed=3"]) == EXIT_ERROR
        assert "SECTION.KEY=VALUE" in capsys.readouterr().err

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            main(["heat"])


class TestGen:
    def test_graph_description(self, tmp_path, capsys):
        assert main(["gen", "--graph", "torus:N=4,d=2", "--out", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "total volume: 64" in out
        assert "fingerprint:" in out
        assert (tmp_path / "torus.edges").exists()

    def test_unknown_generator(self, capsys):
        assert main(["gen", "--graph", "hypercube:d=3"]) == EXIT_ERROR
        assert "Unknown generator" in capsys.readouterr().err


class TestPlotData:
    def test_tables_from_results(self, tmp_path, two_point_config, capsys):
        out = tmp_path / "out"
        assert main(["ineq", "--config", str(two_point_config), "--out", str(out)]) == EXIT_OK
        assert main(["plotdata", "beta-vs-eps", "--out", str(out)]) == EXIT_OK
        with open(out / "beta-vs-eps.csv") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["eps", "beta", "fitted"]
        assert len(rows) == 8

    def test_missing_table(self, tmp_path, two_point_config, capsys):
        out = tmp_path / "out"
        assert main(["curvature", "--config", str(two_point_config), "--out", str(out)]) == EXIT_OK
        assert main(["plotdata", "cue-decay", "--out", str(out)]) == EXIT_ERROR
        assert "cue-decay" in capsys.readouterr().err
