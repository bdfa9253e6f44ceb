#!/usr/bin/env python3

import hashlib
import os
from configparser import ConfigParser
from dataclasses import dataclass, field

import numpy as np

from .generators import build_graph
from .generators.edge_list import integer_labels
from .graph import GuardError, alpha_loop_transform
from .measurements.chains import CHAIN_ALIASES, chains as chain_checks, optimal_times
from .measurements.families import standard_members
from .measurements.semigroup import admissible_bases, poisson_truncation

CACHE_ENVIRONMENT_VARIABLE = "SEMIGROUP_ANALYSIS_CACHE"
ANALYSES = ("kernels", "growth", "curvature", "inequalities", "chains")


class ConfigError(ValueError):
    """
    Raised for an invalid configuration, including horizons that would
    reach the boundary of the configured graph.
    """


def _floats(text):
    """
    A comma-separated list of numbers, or a geometric grid "geom:lo:hi:count".
    """
    text = text.strip()
    if not text:
        return []
    if text.startswith("geom:"):
        _, lo, hi, count = text.split(":")
        return np.geomspace(float(lo), float(hi), int(count)).tolist()
    return [float(value) for value in text.split(",")]


def _ints(text):
    return [int(value) for value in _floats(text)]


def _strings(text):
    return [value.strip() for value in text.split(",") if value.strip()]


def _optional_float(text):
    return float(text) if text.strip() else None


def _boolean(text):
    lowered = text.strip().lower()
    if lowered in ("1", "yes", "true", "on"):
        return True
    if lowered in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean.")


SCHEMA = {
    "run": {
        "seed": (int, "0"),
        "analyses": (_strings, ",".join(ANALYSES)),
        "out": (str, "results"),
        "cache": (str, ""),
        "tolerance": (float, "1e-12"),
        "witness": (_boolean, "yes"),
    },
    "kernels": {
        "vertex": (str, "origin"),
        "steps": (int, "16"),
        "times": (_floats, "0.1,1,5"),
        "fit_mode": (str, "continuous"),
        "fit_grid": (_floats, ""),
        "fit_window": (_floats, ""),
        "saturation_margin": (float, "0.5"),
        "on_diagonal_steps": (_ints, ""),
    },
    "growth": {
        "vertex": (str, "origin"),
        "r_max": (int, "4"),
    },
    "curvature": {
        "vertex": (str, "origin"),
        "n": (_floats, "4.53"),
        "K": (float, "0"),
        "restarts": (int, "20"),
        "max_iterations": (int, "500"),
        "scan": (_floats, ""),
        "resolution": (float, "0.01"),
    },
    "inequalities": {
        "D": (float, "2"),
        "eps_grid": (_floats, "geom:0.25:16:7"),
        "families": (_strings, "ball-indicators,heat-columns,gaussian-bumps"),
        "budget": (int, "4"),
        "fk_sampler": (str, "balls"),
        "fk_budget": (int, "100"),
        "fk_max_radius": (int, "8"),
        "fk_relative": (_boolean, "no"),
        "nu": (_optional_float, ""),
    },
    "chains": {
        "chains": (_strings, "UC=>LS,LS=>UC,UC=>N,N=>UC"),
        "t_grid": (_floats, "geom:0.5:8:5"),
        "eps_grid": (_floats, ""),
        "mu": (float, "2"),
        "families": (_strings, "ball-indicators,heat-columns,gaussian-bumps,perturbed-constants"),
        "budget": (int, "4"),
    },
}


def _parse_graph_value(text):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def analysis_seed(master_seed, analysis):
    """
    A per-analysis seed from an md5 digest of the master seed and the
    analysis name, so analyses do not share random streams.
    """
    digest = hashlib.md5(f"{master_seed}:{analysis}".encode("utf8")).digest()
    return int.from_bytes(digest, "big") % 2**32


@dataclass
class RunConfig:
    """
    The parameters of a suite run. `graph` holds the generator name,
    its parameters and an optional α for the loop transform; each analysis
    section holds typed values keyed as in SCHEMA.
    """

    graph: dict
    sections: dict
    source: str = None
    overrides: dict = field(default_factory=dict)

    @property
    def run(self):
        return self.sections["run"]

    @property
    def seed(self):
        return self.run["seed"]

    @property
    def analyses(self):
        return self.run["analyses"]

    def seed_for(self, analysis):
        return analysis_seed(self.seed, analysis)

    def cache_directory(self):
        """
        The kernel cache directory, or None when caching is off.
        """
        value = self.run["cache"] or os.environ.get(CACHE_ENVIRONMENT_VARIABLE, "")
        return None if value in ("", "off") else value

    def build_graph(self):
        parameters = dict(self.graph["parameters"])
        graph = build_graph(self.graph["generator"], **parameters)
        if self.graph["alpha"] is not None:
            graph = alpha_loop_transform(graph, self.graph["alpha"])
        return graph

    def chains(self):
        section = self.sections["chains"]
        return [CHAIN_ALIASES.get(tag, tag) for tag in section["chains"]]

    def chain_eps_grid(self):
        return self.sections["chains"]["eps_grid"] or self.sections["inequalities"]["eps_grid"]

    def chain_members(self, graph):
        """
        The test functions of the chain checks. On graphs with boundary marks
        their supports stay further inside than the truncation order of the
        largest t, so heat flows of the members never reach the boundary.
        """
        section = self.sections["chains"]
        clearance = 0
        if graph.has_boundary and section["t_grid"]:
            clearance, _ = poisson_truncation(max(section["t_grid"]), self.run["tolerance"])
        return standard_members(
            graph,
            self.seed_for("chains"),
            section["budget"],
            section["families"],
            parameters={name: {"clearance": clearance} for name in section["families"]},
        )

    def echo(self):
        """
        The configuration as written into every output header.
        """
        return {
            "graph": {
                "generator": self.graph["generator"],
                "parameters": self.graph["parameters"],
                "alpha": self.graph["alpha"],
            },
            "sections": self.sections,
        }

    def validate(self, graph, analyses=None):
        """
        Check the horizon of every configured analysis (or of the given
        ones) against the boundary guard before anything is computed.
        Raises ConfigError naming the analysis.
        """
        for analysis in self.analyses if analyses is None else analyses:
            try:
                _guards[analysis](self, graph)
            except (GuardError, KeyError, ValueError) as error:
                raise ConfigError(f"[{analysis}] {error}") from error


def vertex_of(graph, text):
    """
    A vertex from its configuration text: "origin", a comma-separated
    lattice coordinate, or an integer. The integer is a vertex label on
    graphs with integer labels (edge lists keep the labels of their file)
    and an index otherwise.
    """
    text = text.strip()
    if text == "origin":
        return graph.origin()
    if "," in text:
        return graph.vertex(tuple(int(value) for value in text.split(",")))
    x = int(text)
    if integer_labels(graph):
        return graph.vertex(x)
    graph.check_vertex(x)
    return x


def _guard_kernels(config, graph):
    section = config.sections["kernels"]
    tol = config.run["tolerance"]
    x = vertex_of(graph, section["vertex"])
    graph.check_guard(x, section["steps"], what="step horizon")
    if section["times"]:
        order, _ = poisson_truncation(max(section["times"]), tol)
        graph.check_guard(x, order, what="truncation order")
    if section["on_diagonal_steps"]:
        graph.check_guard(x, max(section["on_diagonal_steps"]), what="step horizon")
    if section["fit_grid"]:
        if section["fit_mode"] not in ("discrete", "continuous"):
            raise ValueError(f"Invalid fit mode {section['fit_mode']!r}.")
        if len(section["fit_window"]) != 2:
            raise ValueError("fit_window needs exactly two values.")
        horizon = max(section["fit_grid"])
        if section["fit_mode"] == "continuous":
            horizon, _ = poisson_truncation(horizon, tol)
        admissible_bases(graph, horizon)


def _guard_growth(config, graph):
    section = config.sections["growth"]
    graph.check_guard(vertex_of(graph, section["vertex"]), section["r_max"], what="radius")


def _guard_curvature(config, graph):
    section = config.sections["curvature"]
    graph.check_guard(vertex_of(graph, section["vertex"]), 2, what="stencil radius")
    if section["scan"] and len(section["scan"]) != 2:
        raise ValueError("scan needs exactly two values, n_lo and n_hi.")


def _guard_inequalities(config, graph):
    section = config.sections["inequalities"]
    if len(section["eps_grid"]) < 4:
        raise ValueError("eps_grid needs at least 4 values.")


def _guard_chains(config, graph):
    section = config.sections["chains"]
    tol = config.run["tolerance"]
    if not section["t_grid"]:
        raise ValueError("t_grid must not be empty.")
    chains = config.chains()
    unknown = set(chains) - set(chain_checks)
    if unknown:
        raise ValueError(
            f"Unknown chains {sorted(unknown)}. Valid chains are {sorted(chain_checks)}."
        )
    times = list(section["t_grid"])
    if {"UC=>LS", "LS=>UC"} & set(chains):
        times += config.chain_eps_grid()
    order, _ = poisson_truncation(2 * max(times), tol)
    admissible_bases(graph, order)

    members = config.chain_members(graph)
    if not members:
        raise ValueError("The chain families have no member clear of the boundary.")
    if "UC=>N" in chains:
        t_star = optimal_times(graph, [member.function for member in members], section["mu"])
        if t_star:
            order, _ = poisson_truncation(2 * max(t_star.values()), tol)
            admissible_bases(graph, order)


_guards = {
    "kernels": _guard_kernels,
    "growth": _guard_growth,
    "curvature": _guard_curvature,
    "inequalities": _guard_inequalities,
    "chains": _guard_chains,
}


def load_config(filename=None, text=None, overrides=None):
    """
    Read a RunConfig from an INI-style file (or a string), applying
    overrides of the form {(section, key): text}.
    """
    parser = ConfigParser()
    parser.optionxform = str
    try:
        if filename is not None:
            with open(filename) as config_file:
                parser.read_file(config_file)
        elif text is not None:
            parser.read_string(text)
    except OSError as error:
        raise ConfigError(f"Cannot read configuration: {error}") from error
    except Exception as error:
        raise ConfigError(f"Malformed configuration: {error}") from error

    unknown = set(parser.sections()) - set(SCHEMA) - {"graph"}
    if unknown:
        raise ConfigError(f"Unknown sections {sorted(unknown)}.")

    overrides = dict(overrides or {})
    for (section, key), value in overrides.items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)

    sections = {}
    for name, schema in SCHEMA.items():
        values = dict(parser.items(name)) if parser.has_section(name) else {}
        unknown_keys = set(values) - set(schema)
        if unknown_keys:
            raise ConfigError(f"Unknown keys {sorted(unknown_keys)} in [{name}].")
        sections[name] = {}
        for key, (convert, default) in schema.items():
            try:
                sections[name][key] = convert(values.get(key, default))
            except ValueError as error:
                raise ConfigError(f"[{name}] {key}: {error}") from error

    unknown_analyses = set(sections["run"]["analyses"]) - set(ANALYSES)
    if unknown_analyses:
        raise ConfigError(
            f"Unknown analyses {sorted(unknown_analyses)}. Valid analyses are {list(ANALYSES)}."
        )

    if not parser.has_section("graph") or not parser.has_option("graph", "generator"):
        raise ConfigError("The [graph] section must name a generator.")
    graph_values = dict(parser.items("graph"))
    generator = graph_values.pop("generator")
    alpha = graph_values.pop("alpha", "")
    try:
        alpha = _optional_float(alpha)
    except ValueError as error:
        raise ConfigError(f"[graph] alpha: {error}") from error
    parameters = {key: _parse_graph_value(value) for key, value in graph_values.items()}

    return RunConfig(
        graph={"generator": generator, "parameters": parameters, "alpha": alpha},
        sections=sections,
        source=filename,
        overrides={f"{section}.{key}": value for (section, key), value in overrides.items()},
    )
