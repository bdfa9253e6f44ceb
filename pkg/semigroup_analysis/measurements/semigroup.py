#!/usr/bin/env python3

import warnings
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.stats import poisson

from ..graph import GuardError, ball_volume, inner
from ..stats.fits import fit_power_law
from .gradient_forms import dirichlet_energy

DEFAULT_TOLERANCE = 1e-12
DENSE_ORACLE_MAX_VERTICES = 512
BASE_BLOCK_SIZE = 256
KERNEL_CONVENTION = "P_t f(x) = sum_y m(y) p(t,x,y) f(y)"


def laplacian_apply(graph, f):
    """
    The normalized Laplacian Δf(x) = (1/m(x)) Σ_y ω_xy (f(y) - f(x)) = (P - I) f.
    """
    f = np.asarray(f, dtype=float)
    return graph.transition @ f - f


def poisson_truncation(t, tol):
    """
    The smallest order K with Poisson(t) tail mass P(N > K) ≤ tol.

    Returns:
        K: The truncation order
        tail: The tail mass P(N > K), a bound on the total-variation error
    """
    if tol <= 0:
        raise ValueError(f"The tolerance must be positive, not {tol}.")
    if t == 0:
        return 0, 0.0

    order = max(int(poisson.isf(tol, t)), 0)
    while poisson.sf(order, t) > tol:
        order += 1
    while order > 0 and poisson.sf(order - 1, t) <= tol:
        order -= 1
    return order, poisson.sf(order, t)


def _walk(graph, starts, steps):
    """
    Yield the rows p_k(x, ·) for k = 0 .. steps, one row per start vertex,
    by repeated sparse products with the transition operator.
    """
    transposed = graph.transition.T.tocsr()
    rows = np.zeros((len(starts), len(graph)))
    rows[np.arange(len(starts)), starts] = 1.0
    yield rows
    for _ in range(steps):
        rows = (transposed @ rows.T).T
        yield rows


def _uniformize(graph, starts, times, tol):
    """
    Rows p(t, x, ·) for every start x and time t, computed as
    e^{-t} Σ_k t^k/k! p_k(x, ·) / m(·), truncated at the Poisson tail.

    Returns:
        rows: An array of shape (len(times), len(starts), n)
        orders: The truncation order used at each time
        tails: The truncation error bound at each time
    """
    times = np.asarray(times, dtype=float)
    orders, tails = map(
        np.asarray, zip(*(poisson_truncation(t, tol) for t in times))
    )
    rows = np.zeros((len(times), len(starts), len(graph)))
    for k, walk_rows in enumerate(_walk(graph, starts, int(orders.max()))):
        weights = np.where(k <= orders, poisson.pmf(k, times), 0.0)
        rows += weights[:, None, None] * walk_rows[None, :, :]
    return rows / graph.measure, orders, tails


def _check_walk_guard(graph, x, steps, what):
    if graph.has_boundary:
        graph.check_guard(x, steps, what=what)


@dataclass
class HeatKernelTable:
    """
    Heat kernel rows from a single base vertex x.

    discrete_rows[k] is p_k(x, ·); continuous_rows[i] is p(times[i], x, ·)
    in the convention P_t f(x) = Σ_y m(y) p(t, x, y) f(y), with total-variation
    truncation error at most error_bounds[i].
    """

    graph: object
    base: int
    discrete_rows: np.ndarray
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    continuous_rows: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    truncation_orders: np.ndarray = field(default_factory=lambda: np.empty(0, int))
    error_bounds: np.ndarray = field(default_factory=lambda: np.empty(0))
    tolerance: float = DEFAULT_TOLERANCE
    convention: str = KERNEL_CONVENTION

    @property
    def K(self):
        return len(self.discrete_rows) - 1

    def header(self):
        return {
            "graph": self.graph.description(),
            "fingerprint": self.graph.fingerprint(),
            "base": int(self.base),
            "K": int(self.K),
            "times": [float(t) for t in self.times],
            "tolerance": float(self.tolerance),
            "convention": self.convention,
        }

    def invariant_defects(self):
        """
        The largest violations of the table invariants: p_0 = δ, row
        stochasticity of p_k, positivity, and mass Σ_y m(y) p(t, x, y) = 1
        beyond the stored truncation bound.
        """
        start = np.zeros(len(self.graph))
        start[self.base] = 1.0
        defects = {
            "delta_start": np.abs(self.discrete_rows[0] - start).max(),
            "row_sum": np.abs(self.discrete_rows.sum(axis=1) - 1).max(),
            "negativity": max(-self.discrete_rows.min(), 0.0),
        }
        if len(self.times):
            mass = (self.continuous_rows * self.graph.measure).sum(axis=1)
            defects["negativity"] = max(
                defects["negativity"], -self.continuous_rows.min()
            )
            defects["mass"] = max((np.abs(mass - 1) - self.error_bounds).max(), 0.0)
        return defects


def kernel_table(graph, x, K=0, times=(), tol=DEFAULT_TOLERANCE, cache=None):
    """
    Build the discrete rows p_k(x, ·), k ≤ K, and the continuous rows
    p(t, x, ·) for the given times, reusing a KernelCache when one is given.
    """
    graph.check_vertex(x)
    if K < 0:
        raise ValueError(f"K must be nonnegative, not {K}.")
    times = np.asarray(times, dtype=float)
    if (times <= 0).any():
        raise ValueError("Heat kernel times must be positive.")

    if cache is not None:
        table = cache.load(graph, x, K, times, tol)
        if table is not None:
            return table

    _check_walk_guard(graph, x, K, "step horizon")
    orders, tails = np.zeros(0, int), np.zeros(0)
    if len(times):
        orders, tails = map(
            np.asarray, zip(*(poisson_truncation(t, tol) for t in times))
        )
        try:
            _check_walk_guard(graph, x, orders.max(), "truncation order")
        except GuardError as error:
            raise GuardError(f"Tolerance {tol} is unreachable within the guard: {error}")

    discrete = np.asarray([rows[0] for rows in _walk(graph, [x], K)])
    continuous = np.empty((0, len(graph)))
    if len(times):
        continuous, orders, tails = _uniformize(graph, [x], times, tol)
        continuous = continuous[:, 0, :]

    table = HeatKernelTable(
        graph=graph,
        base=x,
        discrete_rows=discrete,
        times=times,
        continuous_rows=continuous,
        truncation_orders=orders,
        error_bounds=tails,
        tolerance=tol,
    )
    if cache is not None:
        cache.save(table)
    return table


def discrete_kernel(graph, x, K, cache=None):
    """
    The discrete-time heat kernel rows p_k(x, ·) for k = 0 .. K.
    On graphs with boundary marks, K must stay below the distance from x
    to the boundary.
    """
    return kernel_table(graph, x, K=K, cache=cache)


def continuous_kernel(graph, x, times, tol=DEFAULT_TOLERANCE, cache=None):
    """
    The continuous-time heat kernel rows p(t, x, ·) of P_t = e^{tΔ} by
    uniformization, each with total-variation error at most tol.
    """
    return kernel_table(graph, x, times=times, tol=tol, cache=cache)


def dense_kernel_oracle(graph, t):
    """
    The full matrix p(t, ·, ·) from a dense matrix exponential; only for
    small graphs, as an independent check of uniformization.
    """
    if len(graph) > DENSE_ORACLE_MAX_VERTICES:
        raise ValueError(
            f"The dense oracle is limited to {DENSE_ORACLE_MAX_VERTICES} vertices."
        )
    laplacian = graph.transition.toarray() - np.eye(len(graph))
    return expm(t * laplacian) / graph.measure[None, :]


def admissible_bases(graph, horizon):
    """
    The base vertices needed for a supremum over x: one vertex on
    vertex-transitive graphs, otherwise every vertex whose walks of the
    given horizon stay clear of the boundary.
    """
    if graph.vertex_transitive:
        return np.asarray([0])
    bases = np.asarray(
        [x for x in range(len(graph)) if graph.boundary_distance(x) > horizon]
    )
    if len(bases) == 0:
        raise GuardError(f"No vertex of {graph.name} admits horizon {horizon}.")
    return bases


def _block_suprema(graph, bases, times, tol):
    """
    sup over (x, y) and sup over x of the diagonal of p(t, x, y), per time.
    """
    sup_all = np.zeros(len(times))
    sup_diagonal = np.zeros(len(times))
    tails = np.zeros(len(times))
    for start in range(0, len(bases), BASE_BLOCK_SIZE):
        block = bases[start : start + BASE_BLOCK_SIZE]
        rows, _, tails = _uniformize(graph, block, times, tol)
        sup_all = np.maximum(sup_all, rows.max(axis=(1, 2)))
        diagonal = rows[:, np.arange(len(block)), block]
        sup_diagonal = np.maximum(sup_diagonal, diagonal.max(axis=1))
    return sup_all, sup_diagonal, tails


UCNorms = namedtuple("UCNorms", ["norm_1_inf", "norm_2_inf", "t", "error_bound"])


def uc_norms(graph, t, tol=DEFAULT_TOLERANCE, bases=None):
    """
    The ultracontractivity norms of P_t:

        ‖P_t‖_{1→∞} = sup_{x,y} p(t, x, y),
        ‖P_t‖_{2→∞} = sup_x p(2t, x, x)^{1/2}.

    Arguments:
        graph: The WeightedGraph.
        t: The time, positive.
        tol: The uniformization tolerance.
        bases: The base vertices to take the supremum over; by default one
               vertex on vertex-transitive graphs and every guard-admissible
               vertex otherwise.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, not {t}.")
    order, _ = poisson_truncation(2 * t, tol)
    if bases is None:
        bases = admissible_bases(graph, order)
    bases = np.asarray(bases)
    for x in bases:
        _check_walk_guard(graph, x, order, "truncation order")

    sup_all, sup_diagonal, tails = _block_suprema(graph, bases, [t, 2 * t], tol)
    error_bound = tails.max() / graph.measure.min()
    return UCNorms(sup_all[0], np.sqrt(sup_diagonal[1]), t, error_bound)


def heat_flow(graph, f, times, tol=DEFAULT_TOLERANCE):
    """
    P_t f for each time t ≥ 0, by uniformization applied to f.

    On graphs with boundary marks, the support of f must stay further from
    the boundary than the truncation order.
    """
    f = np.asarray(f, dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if (times < 0).any():
        raise ValueError("Heat flow times must be nonnegative.")
    orders, _ = map(np.asarray, zip(*(poisson_truncation(t, tol) for t in times)))
    if graph.has_boundary:
        for x in np.flatnonzero(f):
            graph.check_guard(x, orders.max(), what="truncation order")

    result = np.zeros((len(times), len(graph)))
    current = f
    for k in range(int(orders.max()) + 1):
        if k:
            current = graph.transition @ current
        weights = np.where(k <= orders, poisson.pmf(k, times), 0.0)
        result += weights[:, None] * current[None, :]
    return result


def energy_identity_gap(graph, f, s, tol=DEFAULT_TOLERANCE):
    """
    ⟨f, f⟩ - ⟨P_s f, f⟩ - ∫_0^s ⟨Γ(P_{t/2} f)⟩ dt, which vanishes up to
    quadrature and truncation error.
    """
    f = np.asarray(f, dtype=float)
    left = inner(graph, f, f) - inner(graph, heat_flow(graph, f, [s], tol)[0], f)
    integral, _ = quad(
        lambda t: dirichlet_energy(graph, heat_flow(graph, f, [t / 2], tol)[0]),
        0,
        s,
        epsabs=1e-11,
        epsrel=1e-11,
        limit=200,
    )
    return left - integral


@dataclass
class ExponentFit:
    """
    A fit of sup kernel values ≈ C t^(-exponent) over a window of clean times.

    For discrete mode, values are sup_{x,y} p_k(x, y)/m(y) and values_mx the
    alternative normalization sup_{x,y} p_k(x, y)/m(x).
    """

    mode: str
    grid: np.ndarray
    values: np.ndarray
    window: tuple
    saturated: np.ndarray
    fit_mask: np.ndarray
    values_mx: np.ndarray = None
    C: object = None
    exponent: object = None
    residuals: np.ndarray = None

    def fitted_values(self):
        if self.C is None:
            return None
        return self.C.nominal_value * self.grid ** (-self.exponent.nominal_value)


def _saturation_flags(values, equilibrium, margin):
    near_equilibrium = values < equilibrium * (1 + margin)
    growing = np.zeros(len(values), dtype=bool)
    growing[1:] = values[1:] > values[:-1] * (1 + 1e-12)
    return near_equilibrium | growing


def exponent_fit(
    graph,
    mode,
    horizon,
    window,
    tol=DEFAULT_TOLERANCE,
    bases=None,
    saturation_margin=0.5,
):
    """
    Fit the decay exponent of the uniform kernel bound (DUE for discrete
    mode, CUE for continuous mode).

    Arguments:
        graph: The WeightedGraph.
        mode: "discrete" or "continuous".
        horizon: For discrete mode the largest step K (or a list of steps);
                 for continuous mode a list of times.
        window: (lo, hi), the part of the horizon used for the fit.
        tol: The uniformization tolerance for continuous mode.
        bases: The base vertices for the supremum over x.
        saturation_margin: Times where the supremum is within this relative
                 margin of the equilibrium value 1/V(G), or stops decaying,
                 are flagged and left out of the fit.
    """
    if mode == "discrete":
        grid = (
            np.arange(1, int(horizon) + 1)
            if np.ndim(horizon) == 0
            else np.asarray(horizon, dtype=int)
        )
        steps = int(grid.max())
        if bases is None:
            bases = admissible_bases(graph, steps)
        for x in bases:
            _check_walk_guard(graph, x, steps, "step horizon")
        values = np.zeros(len(grid))
        values_mx = np.zeros(len(grid))
        wanted = {k: i for i, k in enumerate(grid)}
        bases = np.asarray(bases)
        for start in range(0, len(bases), BASE_BLOCK_SIZE):
            block = bases[start : start + BASE_BLOCK_SIZE]
            for k, rows in enumerate(_walk(graph, block, steps)):
                if k in wanted:
                    i = wanted[k]
                    values[i] = max(values[i], (rows / graph.measure).max())
                    values_mx[i] = max(
                        values_mx[i], (rows / graph.measure[block][:, None]).max()
                    )
    elif mode == "continuous":
        grid = np.asarray(horizon, dtype=float)
        order, _ = poisson_truncation(grid.max(), tol)
        if bases is None:
            bases = admissible_bases(graph, order)
        for x in bases:
            _check_walk_guard(graph, x, order, "truncation order")
        values, _, _ = _block_suprema(graph, np.asarray(bases), grid, tol)
        values_mx = None
    else:
        raise ValueError(f'Invalid mode {mode}. Valid modes are "discrete" and "continuous".')

    lo, hi = window
    in_window = (grid >= lo) & (grid <= hi)
    if in_window.sum() < 4:
        raise ValueError(f"Window {window} holds fewer than 4 points of the horizon.")

    saturated = _saturation_flags(values, 1 / graph.total_volume, saturation_margin)
    fit_mask = in_window & ~saturated
    result = ExponentFit(
        mode=mode,
        grid=grid,
        values=values,
        window=(lo, hi),
        saturated=saturated,
        fit_mask=fit_mask,
        values_mx=values_mx,
    )
    if fit_mask.sum() < 4:
        warnings.warn(
            f"Only {fit_mask.sum()} unsaturated points in window {window}; no fit made."
        )
        return result

    result.C, result.exponent, result.residuals = fit_power_law(
        grid[fit_mask], values[fit_mask]
    )
    return result


def on_diagonal_constant(graph, x, ks):
    """
    Estimate c in the on-diagonal bound p_k(x, y) ≤ c m(y) / V(x, √k).

    Returns:
        c_est: The largest ratio over the given steps
        ratios: sup_y p_k(x, y) V(x, ⌊√k⌋) / m(y) for each k
    """
    ks = np.asarray(ks, dtype=int)
    if (ks < 1).any():
        raise ValueError("Steps must be positive.")
    steps = int(ks.max())
    _check_walk_guard(graph, x, steps, "step horizon")

    wanted = set(ks.tolist())
    suprema = {}
    for k, rows in enumerate(_walk(graph, [x], steps)):
        if k in wanted:
            suprema[k] = (rows[0] / graph.measure).max()

    ratios = np.asarray(
        [suprema[k] * ball_volume(graph, x, int(np.sqrt(k)))[1] for k in ks]
    )
    return ratios.max(), ratios


def main():
    from argparse import ArgumentParser
    from ..generators import parse_graph_spec

    parser = ArgumentParser(description="Heat kernel rows and decay exponents.")
    parser.add_argument("graph", type=parse_graph_spec, help='e.g. "torus:N=32,d=2"')
    parser.add_argument("--vertex", type=int, default=0)
    parser.add_argument("--times", type=float, nargs="+", default=[0.1, 1.0, 5.0])
    parser.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE)
    args = parser.parse_args()

    table = continuous_kernel(args.graph, args.vertex, args.times, tol=args.tol)
    for t, row, bound in zip(table.times, table.continuous_rows, table.error_bounds):
        print(f"t = {t:g}: sup_y p(t, x, y) = {row.max():.12g} (error ≤ {bound:.1e})")

    norms = [uc_norms(args.graph, t, args.tol) for t in args.times]
    for result in norms:
        print(
            f"t = {result.t:g}: ‖P_t‖_1→∞ = {result.norm_1_inf:.12g}, "
            f"‖P_t‖_2→∞ = {result.norm_2_inf:.12g}"
        )


if __name__ == "__main__":
    main()
