#!/usr/bin/env python3

import numpy as np
from scipy.sparse import coo_matrix

from ..graph import WeightedGraph


def explicit(edges, name="explicit", parameters=None):
    """
    Build a graph from (x, y, ω) triples. Each undirected edge may be listed
    once or in both directions; a loop (x, x, ω) contributes ω to m(x) once.

    Arguments:
        edges: An iterable of (x, y, ω) with integer vertices.
        name: The generator name recorded in the graph metadata.
        parameters: The generator parameters recorded in the graph metadata.
    """

    weights = {}
    for x, y, weight in edges:
        x, y, weight = int(x), int(y), float(weight)
        if weight < 0:
            raise ValueError(f"Edge ({x}, {y}) has negative weight {weight}.")
        key = (min(x, y), max(x, y))
        if key in weights and weights[key] != weight:
            raise ValueError(
                f"Edge ({x}, {y}) is listed with weights {weights[key]} and {weight}."
            )
        weights[key] = weight

    if not weights:
        raise ValueError("An explicit graph needs at least one edge.")

    labels = sorted({vertex for key in weights for vertex in key})
    index = {label: position for position, label in enumerate(labels)}

    rows, cols, data = [], [], []
    for (x, y), weight in weights.items():
        rows.append(index[x])
        cols.append(index[y])
        data.append(weight)
        if x != y:
            rows.append(index[y])
            cols.append(index[x])
            data.append(weight)

    matrix = coo_matrix(
        (np.asarray(data), (np.asarray(rows), np.asarray(cols))),
        shape=(len(labels), len(labels)),
    )
    return WeightedGraph(matrix, name=name, parameters=parameters, labels=labels)


def integer_labels(graph):
    return all(isinstance(label, (int, np.integer)) for label in graph.labels)


def parse_edge_line(line, line_number=None):
    """
    Parse one `x y ω` line of an edge-list file; returns None for blank
    and comment lines.
    """

    line_contents = line.split("#", 1)[0].split()
    if not line_contents:
        return None
    if len(line_contents) != 3:
        raise ValueError(
            f"Line {line_number}: expected `x y ω`, found {line.strip()!r}."
        )
    try:
        return int(line_contents[0]), int(line_contents[1]), float(line_contents[2])
    except ValueError:
        raise ValueError(
            f"Line {line_number}: expected integer vertices and a numeric weight, "
            f"found {line.strip()!r}."
        ) from None


def read_edge_list(filename):
    with open(filename) as f:
        edges = [
            edge
            for line_number, line in enumerate(f.readlines(), start=1)
            if (edge := parse_edge_line(line, line_number)) is not None
        ]
    return explicit(edges, name="edge_list", parameters={"path": str(filename)})


def write_edge_list(graph, filename):
    """
    Write each undirected edge once as `x y ω`, loops included, in the
    format read by read_edge_list. Vertices are written by their integer
    labels where every label is an integer, otherwise by index.
    """

    names = graph.labels if integer_labels(graph) else range(len(graph))
    rows, cols, weights = graph.edges()
    with open(filename, "w") as f:
        print(f"# {graph.name} {graph.parameters}", file=f)
        for x, y, weight in zip(rows, cols, weights):
            if x <= y:
                print(f"{names[x]} {names[y]} {weight:.17g}", file=f)
