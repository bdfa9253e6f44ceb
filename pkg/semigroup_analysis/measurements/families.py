#!/usr/bin/env python3

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from numpy.random import default_rng

from ..graph import ball
from .semigroup import DEFAULT_TOLERANCE, continuous_kernel, poisson_truncation

FamilyMember = namedtuple("FamilyMember", ["family", "index", "parameters", "function"])

# A heat column at t and a bump of width 1/t are near-extremal for the
# log-Sobolev quotient at eps = t; these span the default eps grid.
HEAT_COLUMN_TIMES = (0.25, 0.5, 1, 2, 4, 8, 16)
BUMP_WIDTHS = (4.0, 2.0, 1.0, 0.5, 0.25, 0.125, 0.0625)


def member_rng(seed, index):
    """
    The generator for one family member, derived from the family seed and
    the member index only, so members do not depend on generation order.
    """
    return default_rng([seed, index])


def interior(graph, clearance=0):
    """
    The vertices further than `clearance` hops from every boundary mark.
    """
    if not graph.has_boundary:
        return np.arange(len(graph))
    return np.asarray(
        [x for x in range(len(graph)) if graph.boundary_distance(x) > clearance]
    )


def centres(graph, seed, budget, clearance=0):
    """
    Up to `budget` distinct centre vertices: the single vertex 0 on
    vertex-transitive graphs, otherwise a seeded sample of the interior.
    """
    if graph.vertex_transitive:
        return np.asarray([0])
    candidates = interior(graph, clearance)
    if len(candidates) == 0:
        raise ValueError(f"No vertex of {graph!r} lies {clearance} hops inside the boundary.")
    rng = default_rng(seed)
    return np.sort(rng.choice(candidates, min(budget, len(candidates)), replace=False))


def _support_mask(graph, x, clearance):
    """
    The vertices closer to x than the boundary is, less the clearance.
    """
    reach = graph.boundary_distance(x) - clearance
    return graph.distances(x) < reach


def ball_indicators(graph, seed, budget, radii=(0, 1, 2, 4), clearance=0):
    for x in centres(graph, seed, budget, clearance):
        for r in radii:
            if graph.has_boundary and r + clearance >= graph.boundary_distance(x):
                continue
            f = ball(graph, x, r).mask().astype(float)
            yield {"centre": int(x), "radius": r}, f


def heat_columns(
    graph, seed, budget, times=HEAT_COLUMN_TIMES, tol=DEFAULT_TOLERANCE, clearance=0
):
    for x in centres(graph, seed, budget, clearance):
        admissible = [
            t
            for t in times
            if not graph.has_boundary
            or poisson_truncation(t, tol)[0] + clearance < graph.boundary_distance(x)
        ]
        if not admissible:
            continue
        table = continuous_kernel(graph, x, admissible, tol=tol)
        for t, row in zip(admissible, table.continuous_rows):
            yield {"centre": int(x), "t": t}, row.copy()


def gaussian_bumps(graph, seed, budget, widths=BUMP_WIDTHS, clearance=0):
    for x in centres(graph, seed, budget, clearance):
        mask = _support_mask(graph, x, clearance)
        distances = np.where(mask, graph.distances(x), 0)
        for a in widths:
            f = np.where(mask, np.exp(-a * distances**2), 0.0)
            yield {"centre": int(x), "a": a}, f


def dirichlet_eigenvectors(graph, seed, budget, radii=(1, 2, 4), clearance=0):
    from .inequalities import dirichlet_lambda1

    for x in centres(graph, seed, budget, clearance):
        for r in radii:
            if graph.has_boundary and r + clearance >= graph.boundary_distance(x):
                continue
            omega = ball(graph, x, r)
            if len(omega) == len(graph):
                continue
            _, eigenfunction = dirichlet_lambda1(graph, omega)
            yield {"centre": int(x), "radius": r}, np.abs(eigenfunction)


def random_positive(graph, seed, budget, sigma=1.0, clearance=0):
    support = np.zeros(len(graph), dtype=bool)
    support[interior(graph, clearance)] = True
    for index in range(budget):
        rng = member_rng(seed, index)
        f = np.where(support, rng.lognormal(0.0, sigma, len(graph)), 0.0)
        yield {"draw": index, "sigma": sigma}, f


def perturbed_constants(graph, seed, budget, noise=(0.0, 0.01, 0.1), clearance=0):
    if max(noise) >= 1:
        raise ValueError(f"Noise levels must stay below 1 to keep positivity, not {noise}.")
    support = np.zeros(len(graph), dtype=bool)
    support[interior(graph, clearance)] = True
    for index in range(budget):
        rng = member_rng(seed, index)
        for level in noise:
            if level == 0 and index > 0:
                continue
            f = np.where(support, 1 + level * rng.uniform(-1, 1, len(graph)), 0.0)
            yield {"draw": index, "noise": level}, f


families = {
    "ball-indicators": ball_indicators,
    "heat-columns": heat_columns,
    "gaussian-bumps": gaussian_bumps,
    "dirichlet-eigenvectors": dirichlet_eigenvectors,
    "random-positive": random_positive,
    "perturbed-constants": perturbed_constants,
}

POSITIVE_FAMILIES = {"gaussian-bumps", "random-positive", "perturbed-constants"}
STANDARD_FAMILIES = ("ball-indicators", "heat-columns", "gaussian-bumps")


@dataclass
class TestFunctionFamily:
    """
    A seeded, structured family of nonnegative test functions.

    Every member is nonzero; members of the positive families are strictly
    positive on their support, and on graphs with boundary marks every
    support stays more than `clearance` hops inside the boundary.
    """

    __test__ = False

    name: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    budget: int = 4

    def __post_init__(self):
        if self.name not in families:
            raise ValueError(
                f"Unknown family {self.name!r}. Valid families are {sorted(families)}."
            )

    def members(self, graph):
        result = []
        generator = families[self.name](graph, self.seed, self.budget, **self.parameters)
        for index, (parameters, f) in enumerate(generator):
            self._validate(graph, parameters, f)
            result.append(FamilyMember(self.name, index, parameters, f))
        return result

    def _validate(self, graph, parameters, f):
        if len(f) != len(graph):
            raise ValueError(f"{self.name} member {parameters} has the wrong length.")
        if not f.any():
            raise ValueError(f"{self.name} member {parameters} is identically zero.")
        if (f < 0).any():
            raise ValueError(f"{self.name} member {parameters} takes negative values.")
        if graph.has_boundary and f[graph.boundary].any():
            raise ValueError(f"{self.name} member {parameters} reaches the boundary.")

    def description(self):
        return {
            "name": self.name,
            "parameters": self.parameters,
            "seed": self.seed,
            "budget": self.budget,
        }


def standard_members(graph, seed=0, budget=4, names=STANDARD_FAMILIES, parameters=None):
    """
    The members of several families, in a fixed order; `parameters` maps a
    family name to its keyword arguments.
    """
    parameters = parameters or {}
    members = []
    for name in names:
        family = TestFunctionFamily(name, parameters.get(name, {}), seed, budget)
        members.extend(family.members(graph))
    return members


def log_sobolev_parameters(eps_grid):
    """
    Family parameters matched to an eps grid: a heat column at t = eps and a
    Gaussian bump of width 1/eps for every eps.
    """
    eps_grid = [float(eps) for eps in eps_grid]
    return {
        "heat-columns": {"times": tuple(eps_grid)},
        "gaussian-bumps": {"widths": tuple(1 / eps for eps in eps_grid)},
    }
