import networkx as nx
import numpy as np
import pytest

from semigroup_analysis.generators import cycle, lattice_window, torus, two_point
from semigroup_analysis.generators.edge_list import explicit
from semigroup_analysis.graph import alpha_loop_transform


def random_graph(rng, n, loops=True):
    """
    A connected random graph on n vertices with weights in (0.1, 2) and,
    optionally, a few loops.
    """
    graph = nx.gnp_random_graph(n, min(1.0, 3 / n), seed=int(rng.integers(2**31)))
    nx.add_path(graph, range(n))
    edges = [(x, y, rng.uniform(0.1, 2.0)) for x, y in graph.edges()]
    if loops:
        edges += [(x, x, rng.uniform(0.1, 1.0)) for x in range(n) if rng.random() < 0.3]
    return explicit(edges, name="random", parameters={"n": n})


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def k2():
    return two_point()


@pytest.fixture
def cycle8():
    return cycle(8)


@pytest.fixture
def lazy_cycle8():
    return alpha_loop_transform(cycle(8), 0.25)


@pytest.fixture
def window_1d():
    return lattice_window(4, 1)


@pytest.fixture
def window_2d():
    return lattice_window(4, 2)


@pytest.fixture(scope="session")
def lazy_torus_32_2():
    return alpha_loop_transform(torus(32, 2), 0.25)


@pytest.fixture
def make_random_graph():
    return random_graph
