import numpy as np
import pytest

from semigroup_analysis.generators import lattice_window
from semigroup_analysis.graph import GuardError
from semigroup_analysis.measurements.curvature import (
    BracketError,
    cde_verify,
    dimension_scan,
)
from semigroup_analysis.measurements.gradient_forms import cde_residual


class TestCDEVerify:
    def test_lattice_line_at_known_dimension(self, window_1d):
        report = cde_verify(window_1d, window_1d.origin(), n=4.53, K=0.0)
        assert report.verdict == "no-violation-found"
        assert report.residual >= -1e-8

    def test_large_curvature_is_violated(self, window_1d):
        x = window_1d.origin()
        report = cde_verify(window_1d, x, n=4.53, K=100.0, restarts=5)
        assert report.violated
        assert sorted(report.witness) == sorted(window_1d.vertex((i,)) for i in range(-2, 3))
        assert all(value > 0 for value in report.witness.values())
        f = report.witness_function(window_1d)
        assert cde_residual(window_1d, f, x, 4.53, 100.0) == pytest.approx(report.residual)
        assert report.witness[x] == 1.0

    def test_deterministic_given_seed(self, window_1d):
        x = window_1d.origin()
        first = cde_verify(window_1d, x, n=2.0, K=1.0, restarts=4, seed=11)
        second = cde_verify(window_1d, x, n=2.0, K=1.0, restarts=4, seed=11)
        assert first.residual == second.residual
        assert first.witness == second.witness

    def test_guard(self, window_1d):
        with pytest.raises(GuardError):
            cde_verify(window_1d, window_1d.vertex((3,)), n=4.53, K=0.0)

    def test_needs_a_restart(self, window_1d):
        with pytest.raises(ValueError):
            cde_verify(window_1d, window_1d.origin(), n=4.53, K=0.0, restarts=0)

    @pytest.mark.slow
    @pytest.mark.parametrize("d", [1, 2])
    def test_lattice_windows_with_many_restarts(self, d):
        graph = lattice_window(4, d)
        report = cde_verify(graph, graph.origin(), n=4.53 * d, K=0.0, restarts=200)
        assert not report.violated


class TestDimensionScan:
    def test_brackets_the_dimension(self, window_1d):
        scan = dimension_scan(
            window_1d, window_1d.origin(), 0.0, (0.5, 4.53), resolution=0.25, restarts=10
        )
        assert not scan.collapsed
        assert 0.5 <= scan.n_lo < scan.n_hi <= 4.53
        assert scan.n_hi - scan.n_lo <= 0.25
        assert scan.evaluations > 2

    def test_violated_upper_end(self, window_1d):
        with pytest.raises(BracketError, match="n_hi"):
            dimension_scan(window_1d, window_1d.origin(), 100.0, (1.0, 2.0), restarts=4)

    def test_collapses_without_lower_violation(self, window_1d):
        with pytest.warns(UserWarning, match="collapses"):
            scan = dimension_scan(window_1d, window_1d.origin(), 0.0, (100.0, 200.0), restarts=4)
        assert scan.collapsed
        assert scan.n_lo == scan.n_hi == 100.0
        assert scan.evaluations == 1

    @pytest.mark.parametrize("n_range", [(2.0, 1.0), (0.0, 1.0), (-1.0, 3.0)])
    def test_invalid_range(self, window_1d, n_range):
        with pytest.raises(BracketError):
            dimension_scan(window_1d, window_1d.origin(), 0.0, n_range)


def test_witness_values_are_finite(window_2d):
    report = cde_verify(window_2d, window_2d.origin(), n=1.0, K=0.0, restarts=3, seed=5)
    assert len(report.witness) == 13
    assert np.isfinite(list(report.witness.values())).all()


class TestTwoPoint:
    def test_slack_regime(self, k2):
        assert not cde_verify(k2, 0, n=1000.0, K=-10.0).violated

    def test_small_dimension_on_the_line(self, window_1d):
        report = cde_verify(window_1d, window_1d.origin(), n=0.1, K=0.0)
        assert report.violated
        assert report.recompute(window_1d) < 0

    def test_very_negative_curvature_collapses(self, k2):
        with pytest.warns(UserWarning, match="collapses"):
            scan = dimension_scan(k2, 0, -100.0, (0.5, 5.0), restarts=4)
        assert scan.collapsed

    def test_scan_is_stable_across_seeds(self, k2):
        scans = [
            dimension_scan(k2, 0, 0.0, (0.1, 10.0), resolution=0.05, restarts=60, seed=seed)
            for seed in (1, 2)
        ]
        assert all(not scan.collapsed for scan in scans)
        assert 1.0 < scans[0].n_hi < 3.0
        assert scans[0].n_hi == pytest.approx(scans[1].n_hi, abs=0.1)
