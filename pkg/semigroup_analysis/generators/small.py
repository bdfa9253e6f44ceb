#!/usr/bin/env python3

import networkx as nx

from .lattices import _check_size, _from_networkx


def two_point():
    """
    K_2: two vertices joined by an edge of unit weight.
    """
    return complete(2, name="two_point")


def complete(N, name="complete"):
    _check_size("N", N, minimum=2)
    graph = nx.complete_graph(N)
    nx.set_edge_attributes(graph, 1.0, "weight")
    return _from_networkx(
        graph,
        list(range(N)),
        name=name,
        parameters={} if name == "two_point" else {"N": N},
        vertex_transitive=True,
    )
