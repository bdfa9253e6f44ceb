#!/usr/bin/env python3

import logging
import warnings
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .gradient_forms import cde_residual, local_cde_residual, stencil

logger = logging.getLogger(__name__)

VIOLATION_TOLERANCE = 1e-8
START_SCALES = (0.1, 0.5, 1.0, 2.0)


class BracketError(ValueError):
    """
    Raised when a dimension scan is not given a violated lower end and
    a non-violated upper end.
    """


@dataclass
class CurvatureReport:
    """
    The outcome of a search for violations of CDE'(x, n, K).

    The verdict is "violated" only with a witness whose recomputed residual
    is below -VIOLATION_TOLERANCE; otherwise "no-violation-found".
    """

    vertex: int
    n: float
    K: float
    residual: float
    witness: dict
    restarts: int
    seed: int
    iterations: int
    converged: int
    metadata: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "violated" if self.residual < -VIOLATION_TOLERANCE else "no-violation-found"

    @property
    def violated(self):
        return self.verdict == "violated"

    def witness_function(self, graph):
        """
        The witness extended by 1 off B(x, 2), as a full graph function.
        """
        f = np.ones(len(graph))
        for vertex, value in self.witness.items():
            f[vertex] = value
        return f

    def recompute(self, graph, n=None):
        return cde_residual(
            graph, self.witness_function(graph), self.vertex, self.n if n is None else n, self.K
        )


def cde_verify(
    graph,
    x,
    n,
    K,
    restarts=20,
    max_iterations=500,
    seed=0,
    u_bound=8.0,
):
    """
    Search for a positive function violating CDE'(x, n, K).

    The residual is minimized over f = e^u on B(x, 2) with the gauge
    f(x) = 1 (the normalized residual is scale invariant), using L-BFGS-B
    from seeded random starts with |u| ≤ u_bound.

    Arguments:
        graph: The WeightedGraph.
        x: The vertex; B(x, 2) must be clear of boundary marks.
        n, K: The parameters of the condition.
        restarts: The number of random starting points, at least 1.
        max_iterations: The iteration limit of each local search.
        seed: The seed for the starting points; the report is
              deterministic given the seed.
        u_bound: The bound on |log f|.
    """
    if restarts < 1:
        raise ValueError(f"Need at least one restart, not {restarts}.")
    if graph.has_boundary:
        graph.check_guard(x, 2, what="stencil radius")

    st, vertices = stencil(graph, x)
    centre = int(np.searchsorted(vertices, x))
    free = np.flatnonzero(np.arange(len(vertices)) != centre)

    def to_function(u_free):
        u = np.zeros(len(vertices))
        u[free] = u_free
        return np.exp(u)

    def objective(u_free):
        return local_cde_residual(st, centre, to_function(u_free), n, K)

    rng = np.random.default_rng(seed)
    best_value, best_u = objective(np.zeros(len(free))), np.zeros(len(free))
    iterations = 0
    converged = 0
    for restart in range(restarts):
        scale = START_SCALES[restart % len(START_SCALES)]
        start = rng.normal(0, scale, len(free)).clip(-u_bound, u_bound)
        if len(free) == 0:
            break
        result = minimize(
            objective,
            start,
            method="L-BFGS-B",
            bounds=[(-u_bound, u_bound)] * len(free),
            options={"maxiter": max_iterations},
        )
        iterations += result.nit
        converged += bool(result.success)
        if result.fun < best_value:
            best_value, best_u = result.fun, result.x

    witness_values = to_function(best_u)
    report = CurvatureReport(
        vertex=x,
        n=n,
        K=K,
        residual=np.nan,
        witness={int(v): float(value) for v, value in zip(vertices, witness_values)},
        restarts=restarts,
        seed=seed,
        iterations=iterations,
        converged=converged,
        metadata={"optimizer": "L-BFGS-B", "u_bound": u_bound, "max_iterations": max_iterations},
    )
    report.residual = report.recompute(graph)
    if abs(report.residual - best_value) > 1e-10 * max(1.0, abs(best_value)):
        raise ArithmeticError(
            f"Witness residual {report.residual} does not reproduce {best_value}."
        )

    logger.info(
        "CDE'(%s, %g, %g): %s, residual %.3e after %d restarts",
        graph.labels[x],
        n,
        K,
        report.verdict,
        report.residual,
        restarts,
    )
    return report


DimensionScan = namedtuple("DimensionScan", ["n_lo", "n_hi", "collapsed", "evaluations"])


def dimension_scan(
    graph,
    x,
    K,
    n_range,
    resolution=0.01,
    restarts=20,
    seed=0,
    max_iterations=500,
):
    """
    Bracket the smallest n for which no violation of CDE'(x, n, K) is found,
    by bisection on n.

    Arguments:
        graph: The WeightedGraph.
        x: The vertex.
        K: The curvature parameter.
        n_range: (n_lo, n_hi); the search must find a violation at n_lo and
                 none at n_hi. If n_lo is not violated the bracket collapses
                 to n_lo.
        resolution: The width at which bisection stops.
        restarts, seed, max_iterations: As for cde_verify, used at every step.

    Returns:
        A DimensionScan with the final bracket [n_lo, n_hi].
    """
    lo, hi = n_range
    if not 0 < lo < hi:
        raise BracketError(f"Need 0 < n_lo < n_hi, not {n_range}.")

    def verify(n):
        return cde_verify(
            graph, x, n, K, restarts=restarts, seed=seed, max_iterations=max_iterations
        )

    evaluations = 1
    lower = verify(lo)
    if not lower.violated:
        warnings.warn(f"No violation found at n = {lo}; the bracket collapses to n_lo.")
        return DimensionScan(lo, lo, True, evaluations)

    evaluations += 1
    if verify(hi).violated:
        raise BracketError(f"CDE'({graph.labels[x]}, {hi}, {K}) is violated at n_hi.")

    while hi - lo > resolution:
        mid = (lo + hi) / 2
        report = verify(mid)
        evaluations += 1
        if report.violated:
            # Smaller n only strengthens the condition
            if report.recompute(graph, n=lo) > report.residual + 1e-12:
                raise ArithmeticError(f"Residual is not monotone in n between {lo} and {mid}.")
            lo = mid
        else:
            hi = mid
        logger.debug("dimension scan bracket [%g, %g]", lo, hi)

    return DimensionScan(lo, hi, False, evaluations)


def main():
    from argparse import ArgumentParser
    from ..generators import parse_graph_spec

    parser = ArgumentParser(description="Search for violations of CDE'(x, n, K).")
    parser.add_argument("graph", type=parse_graph_spec, help='e.g. "lattice_window:L=4,d=1"')
    parser.add_argument("--vertex", type=int, default=None)
    parser.add_argument("--n", type=float, default=4.53)
    parser.add_argument("--K", type=float, default=0.0)
    parser.add_argument("--restarts", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    x = args.graph.origin() if args.vertex is None else args.vertex
    report = cde_verify(args.graph, x, args.n, args.K, restarts=args.restarts, seed=args.seed)
    print(f"CDE'({args.n:g}, {args.K:g}) at {args.graph.labels[x]}: {report.verdict}")
    print(f"minimum residual: {report.residual:.3e}")


if __name__ == "__main__":
    main()
