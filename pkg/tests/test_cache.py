import numpy as np
import pytest

from semigroup_analysis.cache import KernelCache
from semigroup_analysis.measurements.semigroup import kernel_table


def test_reuses_a_matching_table(tmp_path, make_random_graph, rng):
    graph = make_random_graph(rng, 12)
    cache = KernelCache(tmp_path)
    first = kernel_table(graph, 2, K=6, times=[0.5, 3.0], cache=cache)
    assert (cache.hits, cache.misses) == (0, 1)
    assert cache.path(graph, 2).exists()

    second = kernel_table(graph, 2, K=6, times=[0.5, 3.0], cache=cache)
    assert (cache.hits, cache.misses) == (1, 1)
    assert np.array_equal(second.discrete_rows, first.discrete_rows)
    assert np.array_equal(second.continuous_rows, first.continuous_rows)
    assert np.array_equal(second.truncation_orders, first.truncation_orders)
    assert np.array_equal(second.error_bounds, first.error_bounds)
    assert second.header() == first.header()


@pytest.mark.parametrize(
    "K, times, tol",
    [(5, [0.5, 3.0], 1e-12), (6, [0.5], 1e-12), (6, [0.5, 3.0], 1e-10)],
)
def test_header_mismatch_recomputes(tmp_path, cycle8, K, times, tol):
    cache = KernelCache(tmp_path)
    kernel_table(cycle8, 0, K=6, times=[0.5, 3.0], cache=cache)
    table = kernel_table(cycle8, 0, K=K, times=times, tol=tol, cache=cache)
    assert cache.hits == 0
    assert table.K == K
    assert len(table.times) == len(times)


def test_graphs_do_not_share_entries(tmp_path, cycle8, lazy_cycle8):
    cache = KernelCache(tmp_path)
    kernel_table(cycle8, 0, K=4, cache=cache)
    table = kernel_table(lazy_cycle8, 0, K=4, cache=cache)
    assert cache.hits == 0
    assert table.discrete_rows[1, 0] == pytest.approx(0.5)


def test_discrete_only_table(tmp_path, k2):
    cache = KernelCache(tmp_path / "nested")
    kernel_table(k2, 1, K=3, cache=cache)
    table = kernel_table(k2, 1, K=3, cache=cache)
    assert cache.hits == 1
    assert table.continuous_rows.shape == (0, 2)
    assert table.discrete_rows[:, 1].tolist() == [1, 0, 1, 0]
