import numpy as np
import pytest
from scipy.sparse import csr_matrix

from semigroup_analysis.generators import cycle, lattice_window, torus, two_point
from semigroup_analysis.generators.edge_list import explicit
from semigroup_analysis.graph import (
    GuardError,
    VertexSet,
    WeightedGraph,
    alpha_loop_transform,
    ball,
    ball_volume,
    bracket,
    check_delta_alpha,
    dimension_from_doubling,
    growth_profile,
    inner,
    norm,
    relative_fk_exponent,
)


class TestWeightedGraph:
    def test_measure_counts_loops_once(self):
        graph = explicit([(0, 1, 1.0), (1, 1, 2.0)])
        assert graph.measure.tolist() == [1.0, 3.0]
        assert graph.total_volume == 4.0
        assert graph.has_loops

    def test_rejects_asymmetric_weights(self):
        with pytest.raises(ValueError, match="symmetric"):
            WeightedGraph(csr_matrix(np.array([[0.0, 1.0], [2.0, 0.0]])))

    def test_rejects_negative_weights(self):
        with pytest.raises(ValueError, match="nonnegative"):
            WeightedGraph(np.array([[0.0, -1.0], [-1.0, 0.0]]))

    def test_rejects_isolated_vertices(self):
        with pytest.raises(ValueError, match="isolated"):
            WeightedGraph(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            WeightedGraph(np.ones((2, 3)))

    def test_measure_is_read_only(self, cycle8):
        with pytest.raises(ValueError):
            cycle8.measure[0] = 5.0

    def test_transition_rows_are_stochastic(self, make_random_graph, rng):
        graph = make_random_graph(rng, 12)
        assert np.asarray(graph.transition.sum(axis=1)).ravel() == pytest.approx(1.0)

    def test_disconnected_graph_is_flagged(self):
        graph = explicit([(0, 1, 1.0), (2, 3, 1.0)])
        assert not graph.connected

    def test_vertex_lookup_by_coordinate(self):
        graph = torus(4, 2)
        x = graph.vertex((1, 2))
        assert graph.labels[x] == (1, 2)
        with pytest.raises(KeyError):
            graph.vertex((7, 7))

    def test_origin_of_lattice_window(self):
        graph = lattice_window(3, 2)
        assert graph.labels[graph.origin()] == (0, 0)

    def test_fingerprint_identifies_weights(self):
        assert cycle(8).fingerprint() == cycle(8).fingerprint()
        assert cycle(8).fingerprint() != alpha_loop_transform(cycle(8), 0.25).fingerprint()


class TestNorms:
    def test_norms_against_the_measure(self, cycle8):
        f = np.zeros(8)
        f[0] = 3.0
        assert norm(cycle8, f, 1) == pytest.approx(6.0)
        assert norm(cycle8, f, 2) == pytest.approx(np.sqrt(18.0))
        assert norm(cycle8, f, np.inf) == 3.0

    def test_bracket_and_inner(self, cycle8):
        f = np.arange(8.0)
        assert bracket(cycle8, f) == pytest.approx(2 * f.sum())
        assert inner(cycle8, f, f) == pytest.approx(norm(cycle8, f) ** 2)


class TestBalls:
    def test_ball_on_cycle(self, cycle8):
        result, volume = ball_volume(cycle8, 0, 1)
        assert sorted(result) == [0, 1, 7]
        assert volume == 6.0
        assert ball_volume(cycle8, 0, 4)[1] == 16.0

    def test_balls_are_nested(self, window_2d):
        x = window_2d.origin()
        for r in range(3):
            assert ball(window_2d, x, r).issubset(ball(window_2d, x, r + 1))

    def test_negative_radius(self, cycle8):
        with pytest.raises(ValueError):
            ball(cycle8, 0, -1)

    def test_vertex_set_outside_graph(self, cycle8):
        with pytest.raises(KeyError):
            VertexSet(cycle8, [0, 9])


class TestDeltaAlpha:
    def test_lazy_cycle(self, lazy_cycle8):
        assert check_delta_alpha(lazy_cycle8, 0.25).passed
        result = check_delta_alpha(lazy_cycle8, 0.3)
        assert not result.passed
        assert result.ratio == pytest.approx(0.25)
        x, y = result.edge
        assert x != y

    def test_loops_only(self, lazy_cycle8, cycle8):
        assert check_delta_alpha(lazy_cycle8, 0.5, loops_only=True).passed
        assert not check_delta_alpha(cycle8, 0.1, loops_only=True).passed


class TestAlphaLoopTransform:
    def test_keeps_measure_and_sets_holding(self, cycle8):
        lazy = alpha_loop_transform(cycle8, 0.2)
        assert lazy.measure == pytest.approx(cycle8.measure)
        assert lazy.transition.diagonal() == pytest.approx(0.4)
        assert lazy.transition[0, 1] == pytest.approx(0.6 * cycle8.transition[0, 1])

    def test_lazy_two_point(self):
        lazy = alpha_loop_transform(two_point(), 0.25)
        assert lazy.transition.toarray() == pytest.approx(np.full((2, 2), 0.5))

    def test_rejects_graphs_with_loops(self, lazy_cycle8):
        with pytest.raises(ValueError, match="loops"):
            alpha_loop_transform(lazy_cycle8, 0.25)

    @pytest.mark.parametrize("alpha", [0.0, -0.1, 0.6])
    def test_rejects_alpha_out_of_range(self, cycle8, alpha):
        with pytest.raises(ValueError):
            alpha_loop_transform(cycle8, alpha)

    def test_warns_at_one_half(self, cycle8):
        with pytest.warns(UserWarning):
            lazy = alpha_loop_transform(cycle8, 0.5)
        assert not lazy.connected

    def test_keeps_boundary(self, window_1d):
        lazy = alpha_loop_transform(window_1d, 0.25)
        assert (lazy.boundary == window_1d.boundary).all()


class TestGrowthProfile:
    def test_cycle_is_one_dimensional(self):
        profile = growth_profile(cycle(64), 0, 10)
        # V(0, r) = 2(2r + 1) = 4(r + 1/2)
        assert profile.volumes.tolist() == [2 * (2 * r + 1) for r in range(1, 11)]
        assert profile.D_est.nominal_value == pytest.approx(1.0, abs=1e-6)
        assert profile.c == pytest.approx(4 + 2 / 10, rel=1e-5)
        assert profile.C_est == pytest.approx(21 / 11)

    def test_torus_is_two_dimensional(self):
        profile = growth_profile(torus(32, 2), 0, 8)
        assert profile.D_est.nominal_value == pytest.approx(2.0, abs=0.1)
        assert (profile.volumes >= profile.fitted_volumes() - 1e-9).all()

    def test_guard(self, window_1d):
        x = window_1d.origin()
        growth_profile(window_1d, x, 3)
        with pytest.raises(GuardError):
            growth_profile(window_1d, x, 4)

    def test_needs_two_radii(self, cycle8):
        with pytest.raises(ValueError):
            growth_profile(cycle8, 0, 1)

    def test_doubling_links(self):
        assert dimension_from_doubling(4.0) == pytest.approx(2.0)
        assert relative_fk_exponent(4.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            dimension_from_doubling(1.0)


class TestKnownValues:
    def test_sizes_and_measures(self):
        assert cycle(4).total_volume == 8
        window = lattice_window(3, 2)
        assert len(window) == 49
        assert window.measure[window.origin()] == 4

    @pytest.mark.parametrize(
        "graph, label, r, size, volume",
        [
            (two_point(), 0, 0, 1, 1),
            (cycle(8), 0, 2, 5, 10),
            (lattice_window(5, 2), (0, 0), 2, 13, 52),
        ],
    )
    def test_ball_volume(self, graph, label, r, size, volume):
        result, result_volume = ball_volume(graph, graph.vertex(label), r)
        assert len(result) == size
        assert result_volume == volume

    def test_delta_alpha(self):
        assert check_delta_alpha(two_point(), 1.0).passed
        assert check_delta_alpha(cycle(4), 0.5).passed
        result = check_delta_alpha(cycle(4), 0.6)
        assert not result.passed
        assert result.ratio == pytest.approx(0.5)
        star = explicit([(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)])
        assert check_delta_alpha(star, 0.4).ratio == pytest.approx(1 / 3)

    def test_lazy_cycle(self):
        transition = alpha_loop_transform(cycle(4), 0.25).transition.toarray()
        assert transition.diagonal() == pytest.approx(0.5)
        assert transition[0, [1, 3]] == pytest.approx(0.25)
        assert transition.sum(axis=1) == pytest.approx(1)

    @pytest.mark.parametrize("d, tolerance", [(1, 0.05), (2, 0.1)])
    def test_lattice_growth(self, d, tolerance):
        window = lattice_window(40, d)
        profile = growth_profile(window, window.origin(), 16)
        assert profile.D_est.nominal_value == pytest.approx(d, abs=tolerance)
        assert (np.diff(profile.volumes) >= 0).all()
        assert (profile.doubling_ratios >= 1).all()
        if d == 2:
            assert profile.doubling_ratios[-1] == pytest.approx(4, abs=0.3)

    def test_torus_matches_window_before_wrapping(self):
        torus_profile = growth_profile(torus(32, 2), 0, 8)
        window = lattice_window(40, 2)
        window_profile = growth_profile(window, window.origin(), 8)
        assert torus_profile.volumes.tolist() == window_profile.volumes.tolist()
