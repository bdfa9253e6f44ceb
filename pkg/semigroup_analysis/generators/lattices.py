#!/usr/bin/env python3

from itertools import product

import networkx as nx
import numpy as np

from ..graph import WeightedGraph


def _check_size(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer of at least {minimum}, not {value}.")


def _from_networkx(graph, nodelist, **kwargs):
    weights = nx.to_scipy_sparse_array(graph, nodelist=nodelist, weight="weight")
    return WeightedGraph(weights, labels=nodelist, **kwargs)


def _lattice_graph(coordinates, neighbours):
    graph = nx.Graph()
    graph.add_nodes_from(coordinates)
    for coordinate in coordinates:
        for neighbour in neighbours(coordinate):
            graph.add_edge(coordinate, neighbour, weight=1.0)
    return graph


def cycle(N):
    """
    The cycle Z/NZ with unit weights.
    """
    _check_size("N", N, minimum=3)
    graph = nx.cycle_graph(N)
    nx.set_edge_attributes(graph, 1.0, "weight")
    return _from_networkx(
        graph,
        list(range(N)),
        name="cycle",
        parameters={"N": N},
        vertex_transitive=True,
    )


def torus(N, d):
    """
    The Cayley graph of (Z/NZ)^d with the standard generators and unit weights.
    """
    _check_size("N", N, minimum=3)
    _check_size("d", d)

    def neighbours(coordinate):
        for axis, step in product(range(d), (-1, 1)):
            shifted = list(coordinate)
            shifted[axis] = (shifted[axis] + step) % N
            yield tuple(shifted)

    coordinates = list(product(range(N), repeat=d))
    return _from_networkx(
        _lattice_graph(coordinates, neighbours),
        coordinates,
        name="torus",
        parameters={"N": N, "d": d},
        vertex_transitive=True,
    )


def lattice_window(L, d):
    """
    The box [-L, L]^d in Z^d with unit weights. Vertices with a coordinate
    of modulus L are marked as boundary.
    """
    _check_size("L", L)
    _check_size("d", d)

    def neighbours(coordinate):
        for axis, step in product(range(d), (-1, 1)):
            shifted = list(coordinate)
            shifted[axis] += step
            if abs(shifted[axis]) <= L:
                yield tuple(shifted)

    coordinates = list(product(range(-L, L + 1), repeat=d))
    boundary = np.asarray([max(map(abs, coordinate)) == L for coordinate in coordinates])
    return _from_networkx(
        _lattice_graph(coordinates, neighbours),
        coordinates,
        name="lattice_window",
        parameters={"L": L, "d": d},
        boundary=boundary,
    )
