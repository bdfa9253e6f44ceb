#!/usr/bin/env python3

from .edge_list import explicit, read_edge_list, write_edge_list
from .lattices import cycle, lattice_window, torus
from .small import complete, two_point


generators = {
    "cycle": cycle,
    "torus": torus,
    "lattice_window": lattice_window,
    "two_point": two_point,
    "complete": complete,
    "explicit": explicit,
    "edge_list": read_edge_list,
}


def build_graph(name, **parameters):
    """
    Build a graph from a generator name and its parameters, e.g.
    build_graph("torus", N=64, d=2).
    """

    try:
        generator = generators[name]
    except KeyError:
        raise ValueError(
            f"Unknown generator {name!r}. Valid generators are {sorted(generators)}."
        ) from None
    return generator(**parameters)


def parse_graph_spec(text):
    """
    Build a graph from a command-line description such as "torus:N=32,d=2",
    "two_point" or "edge_list:filename=graph.edges".
    """

    name, _, parameter_text = text.partition(":")
    parameters = {}
    for item in filter(None, parameter_text.split(",")):
        key, separator, value = item.partition("=")
        if not separator:
            raise ValueError(f"Graph parameter {item!r} is not of the form key=value.")
        try:
            parameters[key.strip()] = int(value)
        except ValueError:
            parameters[key.strip()] = value.strip()
    return build_graph(name.strip(), **parameters)
