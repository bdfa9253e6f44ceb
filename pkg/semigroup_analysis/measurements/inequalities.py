#!/usr/bin/env python3

import logging
import warnings
from dataclasses import dataclass, field
from itertools import islice

import numpy as np
from numpy.random import default_rng
from scipy.integrate import quad, solve_ivp
from scipy.linalg import eigh
from scipy.sparse import diags
from scipy.sparse.linalg import eigsh
from scipy.special import xlogy

from ..fit_forms import log_sobolev_beta
from ..graph import VertexSet, ball, ball_volume, bracket, norm
from ..stats.fits import fit_log_linear
from .families import interior
from .gradient_forms import dirichlet_energy

logger = logging.getLogger(__name__)

DENSE_EIGEN_MAX_VERTICES = 1500
REEVALUATION_TOLERANCE = 1e-10


def dirichlet_lambda1(graph, omega):
    """
    The smallest eigenvalue of -Δ with Dirichlet conditions outside Ω,

        λ₁(Ω) = inf {⟨Γ(f)⟩ / ‖f‖₂² : supp f ⊆ Ω},

    from the generalized problem (M - W)_ΩΩ φ = λ M_ΩΩ φ.

    Returns:
        λ₁: The eigenvalue, in [0, 2]
        eigenfunction: The minimizer, zero off Ω, with ‖φ‖₂ = 1 and
                       nonnegative sum
    """
    if not isinstance(omega, VertexSet):
        omega = VertexSet(graph, omega)
    if len(omega) == 0:
        raise ValueError("The Dirichlet eigenvalue needs a nonempty set.")

    members = omega.members
    measure = graph.measure[members]
    stiffness = (diags(graph.measure) - graph.weights).tocsr()[members][:, members]
    if len(members) <= DENSE_EIGEN_MAX_VERTICES:
        values, vectors = eigh(
            stiffness.toarray(), np.diag(measure), subset_by_index=[0, 0]
        )
    else:
        values, vectors = eigsh(
            stiffness.tocsc(), k=1, M=diags(measure).tocsc(), sigma=-1e-3, which="LM"
        )

    eigenfunction = np.zeros(len(graph))
    eigenfunction[members] = vectors[:, 0]
    eigenfunction /= norm(graph, eigenfunction)
    if eigenfunction.sum() < 0:
        eigenfunction = -eigenfunction
    return max(values[0], 0.0), eigenfunction


def rayleigh_quotient(graph, f):
    return dirichlet_energy(graph, f) / norm(graph, f) ** 2


def _positive_energy(graph, f):
    energy = dirichlet_energy(graph, f)
    if energy <= 0:
        raise ValueError("⟨Γ(f)⟩ = 0; the quotient is undefined for constant functions.")
    return energy


def nash_quotient(graph, f, D):
    """
    ‖f‖₂^(2+4/D) / (⟨Γ(f)⟩ ‖f‖₁^(4/D)).
    """
    f = np.asarray(f, dtype=float)
    energy = _positive_energy(graph, f)
    return norm(graph, f, 2) ** (2 + 4 / D) / (energy * norm(graph, f, 1) ** (4 / D))


def sobolev_quotient(graph, f, D):
    """
    ‖f‖²_q / ⟨Γ(f)⟩ with q = 2D/(D-2), for D > 2.
    """
    if D <= 2:
        raise ValueError(f"The Sobolev quotient needs D > 2, not {D}.")
    f = np.asarray(f, dtype=float)
    return norm(graph, f, 2 * D / (D - 2)) ** 2 / _positive_energy(graph, f)


def functional_quotients(graph, f, D):
    """
    The Nash and Sobolev quotients of f; the Sobolev quotient is None for D ≤ 2.
    Both are invariant under f → λf.
    """
    return nash_quotient(graph, f, D), sobolev_quotient(graph, f, D) if D > 2 else None


def sobolev_affine_constant(graph, f, D, A=0.0):
    """
    The smallest C with ‖f‖²_q ≤ A ‖f‖₂² + C ⟨Γ(f)⟩, q = 2D/(D-2).
    A = 0 gives the Sobolev quotient.
    """
    if A < 0:
        raise ValueError(f"The additive constant must be nonnegative, not {A}.")
    if D <= 2:
        raise ValueError(f"The Sobolev quotient needs D > 2, not {D}.")
    f = np.asarray(f, dtype=float)
    return (
        norm(graph, f, 2 * D / (D - 2)) ** 2 - A * norm(graph, f) ** 2
    ) / _positive_energy(graph, f)


def _lsi_terms(graph, f):
    f = np.asarray(f, dtype=float)
    if (f < 0).any():
        raise ValueError("The log-Sobolev entropy needs a nonnegative function.")
    if not f.any():
        raise ValueError("The log-Sobolev entropy needs a function that is not identically zero.")
    norm_squared = norm(graph, f) ** 2
    entropy = bracket(graph, xlogy(f**2, f)) - norm_squared * 0.5 * np.log(norm_squared)
    return entropy, dirichlet_energy(graph, f), norm_squared


def entropy_and_beta(graph, f, eps):
    """
    The log-Sobolev entropy ⟨f² log f⟩ - ‖f‖₂² log ‖f‖₂ (with 0 log 0 = 0)
    and the gap entropy - ε⟨Γ(f)⟩ that β(ε)‖f‖₂² has to cover.

    The entropy is not sign-definite; it is at least -½‖f‖₂² log V(supp f),
    with equality for constants on their support.
    """
    if eps <= 0:
        raise ValueError(f"ε must be positive, not {eps}.")
    entropy, energy, _ = _lsi_terms(graph, f)
    return entropy, entropy - eps * energy


@dataclass
class ConstantEstimate:
    """
    A one-sided estimate of the optimal constant of a functional inequality,
    found by searching a finite set of witnesses.

    A supremum over witnesses is a lower bound on the optimal constant
    (direction "lower-bound"); a minimum over sets, as for Faber-Krahn, is an
    upper bound ("upper-bound").
    """

    tag: str
    D: float
    value: float
    witness: np.ndarray
    method: str
    seed: int = None
    direction: str = "lower-bound"
    eps: float = None
    extra: dict = field(default_factory=dict)

    def reevaluate(self, graph):
        """
        The defining quotient evaluated afresh on the stored witness.
        """
        if self.tag == "FK":
            eigenvalue, _ = dirichlet_lambda1(graph, self.witness)
            return eigenvalue * VertexSet(graph, self.witness).volume ** (2 / self.D)
        if self.tag == "FK*":
            return _relative_fk_value(
                graph,
                self.extra["centre"],
                self.extra["radius"],
                VertexSet(graph, self.witness),
                dirichlet_lambda1(graph, self.witness)[0],
                self.extra["nu"],
            )
        if self.tag == "N":
            return nash_quotient(graph, self.witness, self.D)
        if self.tag == "S":
            return sobolev_quotient(graph, self.witness, self.D)
        if self.tag == "LS-beta":
            entropy, energy, norm_squared = _lsi_terms(graph, self.witness)
            return (entropy - self.eps * energy) / norm_squared
        raise ValueError(f"Unknown inequality tag {self.tag!r}.")

    def check(self, graph):
        reevaluated = self.reevaluate(graph)
        if abs(reevaluated - self.value) > REEVALUATION_TOLERANCE * max(1.0, abs(self.value)):
            raise ArithmeticError(
                f"{self.tag} witness gives {reevaluated}, not the stored {self.value}."
            )
        return reevaluated


def quotient_estimate(graph, tag, D, functions, seed=None):
    """
    The supremum of the Nash ("N") or Sobolev ("S") quotient over a list of
    functions; functions with ⟨Γ(f)⟩ = 0 are skipped.
    """
    quotient = {"N": nash_quotient, "S": sobolev_quotient}[tag]
    best_value, best_f = -np.inf, None
    for f in functions:
        f = np.asarray(f, dtype=float)
        if dirichlet_energy(graph, f) <= 0:
            continue
        value = quotient(graph, f, D)
        if value > best_value:
            best_value, best_f = value, f
    if best_f is None:
        raise ValueError(f"No function in the family has ⟨Γ(f)⟩ > 0; {tag} is undefined.")
    return ConstantEstimate(
        tag=tag, D=D, value=best_value, witness=best_f, method="family-sup", seed=seed
    )


def beta_empirical(graph, eps, functions, seed=None):
    """
    sup over the family of (entropy - ε⟨Γ(f)⟩) / ‖f‖₂², a lower bound on the
    optimal log-Sobolev function β(ε).
    """
    if eps <= 0:
        raise ValueError(f"ε must be positive, not {eps}.")
    functions = [np.asarray(f, dtype=float) for f in functions]
    if not functions:
        raise ValueError("β needs at least one test function.")
    terms = np.asarray([_lsi_terms(graph, f) for f in functions])
    return _beta_from_terms(terms, eps, functions, seed)


def _beta_from_terms(terms, eps, functions, seed):
    entropies, energies, norms_squared = terms.T
    ratios = (entropies - eps * energies) / norms_squared
    best = int(ratios.argmax())
    return ConstantEstimate(
        tag="LS-beta",
        D=None,
        value=ratios[best],
        witness=functions[best],
        method="family-sup",
        seed=seed,
        eps=eps,
        extra={"degenerate": bool((energies == 0).all())},
    )


@dataclass
class BetaFit:
    """
    β_empirical on an ε grid with the fit β(ε) ≈ c - slope log ε.
    c and slope are None when the family is degenerate.
    """

    eps: np.ndarray
    beta: np.ndarray
    estimates: list
    c: object = None
    slope: object = None
    residuals: np.ndarray = None
    degenerate: bool = False
    D: float = None

    def profile(self):
        if self.degenerate:
            return BetaProfile(self.eps, self.beta)
        return BetaProfile(self.eps, self.beta, self.c.nominal_value, self.slope.nominal_value)

    def fitted_values(self):
        if self.degenerate:
            return None
        return log_sobolev_beta(self.eps, self.c.nominal_value, self.slope.nominal_value)


def beta_logfit(graph, eps_grid, functions, D=None, seed=None):
    """
    Measure β_empirical on an ε grid and fit it against c - slope log ε.
    For an ultracontractive semigroup with decay t^(-D/2), slope ≈ D/4.

    Arguments:
        graph: The WeightedGraph.
        eps_grid: At least 4 values of ε, ideally spanning 1.5 decades.
        functions: The test functions.
        D: The dimension the slope is compared with; recorded only.
        seed: The family seed, recorded in each estimate.
    """
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))
    if len(eps_grid) < 4:
        raise ValueError(f"The β fit needs at least 4 values of ε, not {len(eps_grid)}.")
    if np.log10(eps_grid[-1] / eps_grid[0]) < 1.5:
        warnings.warn(f"The ε grid spans less than 1.5 decades: {eps_grid.tolist()}.")

    functions = [np.asarray(f, dtype=float) for f in functions]
    terms = np.asarray([_lsi_terms(graph, f) for f in functions])
    estimates = [_beta_from_terms(terms, eps, functions, seed) for eps in eps_grid]
    beta = np.asarray([estimate.value for estimate in estimates])

    if (terms[:, 1] == 0).all():
        warnings.warn("Every test function has ⟨Γ(f)⟩ = 0; the β fit is rejected.")
        return BetaFit(eps_grid, beta, estimates, degenerate=True, D=D)

    a, b, residuals = fit_log_linear(np.log(eps_grid), beta)
    logger.info("β(ε) ≈ %s - (%s) log ε over %d points", a, -b, len(eps_grid))
    return BetaFit(eps_grid, beta, estimates, c=a, slope=-b, residuals=residuals, D=D)


@dataclass
class BetaProfile:
    """
    β as a function of ε: interpolated in log ε on the measured grid,
    and taken from the fit c - slope log ε beyond it. Below the grid the
    larger of the fit and the first measured value is used, since β is
    nonincreasing.
    """

    eps: np.ndarray = field(default_factory=lambda: np.empty(0))
    beta: np.ndarray = field(default_factory=lambda: np.empty(0))
    c: float = None
    slope: float = None

    def __call__(self, epsilon):
        eps = np.asarray(self.eps, dtype=float)
        fitted = None if self.c is None else log_sobolev_beta(epsilon, self.c, self.slope)
        if len(eps) and eps[0] <= epsilon <= eps[-1]:
            return np.interp(np.log(epsilon), np.log(eps), self.beta)
        if fitted is None:
            raise ValueError(
                f"ε = {epsilon} is outside the measured grid and no fit is available."
            )
        if len(eps) and epsilon < eps[0]:
            return max(fitted, self.beta[0])
        return fitted


def davies_simon_M(beta, t):
    """
    M(t) = (1/t) ∫_0^t β(ε) dε, so that ‖P_t‖_{2→∞} ≤ e^{M(t)} whenever the
    log-Sobolev inequality holds with β.

    Arguments:
        beta: A BetaProfile or any callable ε → β(ε), integrable at 0.
        t: The time, positive.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, not {t}.")
    if isinstance(beta, BetaProfile) and beta.c is None:
        raise ValueError("M(t) needs β near 0, but the profile has no fit.")
    breakpoints = [e for e in getattr(beta, "eps", ()) if 0 < e < t]
    value, _ = quad(
        beta, 0, t, points=breakpoints or None, limit=200, epsabs=1e-12, epsrel=1e-12
    )
    return value / t


def davies_simon_bound(epsilon_of_p, delta_of_p):
    """
    The time and exponent reached by a family of L^p log-Sobolev
    inequalities with parameters ε(p), δ(p), p ≥ 2:

        t = ∫_2^∞ ε(p)/p dp,    M = ∫_2^∞ δ(p)/p dp.
    """
    t, _ = quad(lambda p: epsilon_of_p(p) / p, 2, np.inf, limit=200)
    M, _ = quad(lambda p: delta_of_p(p) / p, 2, np.inf, limit=200)
    return t, M


def exponent_flow(epsilon_of_p, delta_of_p, s_grid):
    """
    Integrate dp/ds = p/ε(p), p(0) = 2 and dN/ds = δ(p)/ε(p), N(0) = 0,
    the exponent and norm bound carried along the semigroup.

    Returns:
        p, N: The values at each point of s_grid
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if (s_grid < 0).any() or (np.diff(s_grid) < 0).any():
        raise ValueError("The s grid must be nonnegative and increasing.")

    def rhs(s, y):
        epsilon = epsilon_of_p(y[0])
        return [y[0] / epsilon, delta_of_p(y[0]) / epsilon]

    solution = solve_ivp(
        rhs, (0, s_grid[-1]), [2.0, 0.0], t_eval=s_grid, rtol=1e-10, atol=1e-12
    )
    if not solution.success:
        raise ArithmeticError(f"Exponent flow failed: {solution.message}")
    return solution.y[0], solution.y[1]


def lsi_from_cue(c1, N):
    """
    c₂ in β(ε) = c₂ - (N/4) log ε from ‖P_t‖_{2→∞} ≤ c₁ t^(-N/4).
    """
    if c1 <= 0:
        raise ValueError(f"c₁ must be positive, not {c1}.")
    return np.log(c1)


def cue_from_lsi(c2, N):
    """
    c₃ in ‖P_t‖_{2→∞} ≤ c₃ t^(-N/4) from β(ε) = c₂ - (N/4) log ε.
    """
    return np.exp(c2 + N / 4)


def nash_to_uc_constant(c2, mu):
    """
    c₁ = (c₂μ/2)^(μ/4), so that the Nash inequality with constant c₂ gives
    ‖P_t f‖₂ ≤ c₁ t^(-μ/4) ‖f‖₁.
    """
    if c2 <= 0 or mu <= 0:
        raise ValueError(f"Need c₂ > 0 and μ > 0, not {c2}, {mu}.")
    return (c2 * mu / 2) ** (mu / 4)


def lsi_p_version_check(graph, f, p, eps, beta):
    """
    The margin RHS - LHS of the L^p log-Sobolev inequality

        ⟨f^p log f⟩ ≤ ε⟨Γ(f^(p-1), f)⟩ + (2β/p)‖f‖_p^p + ‖f‖_p^p log ‖f‖_p,

    which is nonnegative whenever the base inequality holds for f^(p/2)
    with β = β(ε).
    """
    if p <= 2:
        raise ValueError(f"p must exceed 2, not {p}.")
    f = np.asarray(f, dtype=float)
    if (f < 0).any() or not f.any():
        raise ValueError("The L^p inequality needs a nonnegative, nonzero function.")

    norm_p = norm(graph, f, p)
    left = bracket(graph, xlogy(f**p, f))
    right = (
        eps * dirichlet_energy(graph, f ** (p - 1), f)
        + 2 * beta / p * norm_p**p
        + norm_p**p * np.log(norm_p)
    )
    return right - left


def _reach(graph, x, max_radius):
    return int(min(max_radius, graph.boundary_distance(x) - 1))


def _sampler_centres(graph, max_radius, min_radius):
    candidates = [
        x for x in interior(graph) if _reach(graph, x, max_radius) >= min_radius
    ]
    if not candidates:
        raise ValueError(f"No vertex of {graph!r} admits sets of radius {min_radius}.")
    return np.asarray(candidates)


def ball_sampler(graph, rng, max_radius=8, min_radius=0):
    candidates = _sampler_centres(graph, max_radius, min_radius)
    while True:
        x = int(rng.choice(candidates))
        r = int(rng.integers(min_radius, _reach(graph, x, max_radius) + 1))
        yield x, r, ball(graph, x, r)


def box_sampler(graph, rng, max_radius=8, min_radius=0):
    if graph.name not in ("torus", "lattice_window"):
        raise ValueError(f"Boxes need a lattice graph, not {graph.name}.")
    coordinates = np.asarray(graph.labels)
    period = graph.parameters["N"] if graph.name == "torus" else None
    d = coordinates.shape[1]
    candidates = _sampler_centres(graph, max_radius, min_radius)
    while True:
        x = int(rng.choice(candidates))
        sides = rng.integers(0, _reach(graph, x, max_radius) + 1, size=d)
        r = int(sides.sum())
        if r < min_radius:
            continue
        offsets = np.abs(coordinates - coordinates[x])
        if period:
            offsets = np.minimum(offsets, period - offsets)
        yield x, r, VertexSet(graph, np.flatnonzero((offsets <= sides).all(axis=1)))


def connected_sampler(graph, rng, max_size=32, max_radius=8, min_radius=0):
    candidates = _sampler_centres(graph, max_radius, min_radius)
    while True:
        x = int(rng.choice(candidates))
        distances = graph.distances(x)
        allowed = (distances <= _reach(graph, x, max_radius)) & ~graph.boundary
        size = int(rng.integers(1, max_size + 1))
        members = {x}
        while len(members) < size:
            frontier = sorted(
                {
                    int(y)
                    for v in members
                    for y in graph.weights[v].indices
                    if allowed[y] and y not in members
                }
            )
            if not frontier:
                break
            members.add(int(rng.choice(frontier)))
        r = max(int(distances[sorted(members)].max()), min_radius)
        yield x, r, VertexSet(graph, sorted(members))


def subset_sampler(graph, rng, max_radius=4, min_radius=0):
    candidates = _sampler_centres(graph, max_radius, min_radius)
    while True:
        x = int(rng.choice(candidates))
        r = int(rng.integers(min_radius, _reach(graph, x, max_radius) + 1))
        region = ball(graph, x, r).members
        size = int(rng.integers(1, len(region) + 1))
        yield x, r, VertexSet(graph, rng.choice(region, size, replace=False))


samplers = {
    "balls": ball_sampler,
    "boxes": box_sampler,
    "random-connected": connected_sampler,
    "random-subsets": subset_sampler,
}


def _relative_fk_value(graph, x, r, omega, eigenvalue, nu):
    return eigenvalue * r**2 * (omega.volume / ball_volume(graph, x, r)[1]) ** nu


def faber_krahn_scan(
    graph,
    D,
    sampler="balls",
    budget=100,
    seed=0,
    relative=False,
    nu=None,
    **sampler_options,
):
    """
    Estimate the Faber-Krahn constant c in λ₁(Ω) ≥ c V(Ω)^(-2/D) by the
    minimum of λ₁(Ω) V(Ω)^(2/D) over sampled sets, an upper bound on the
    best c.

    With relative=True, estimate instead c in the relative form
    λ₁(Ω) ≥ (c/r²)(V(x, r)/V(Ω))^ν over sampled Ω ⊆ B(x, r), r ≥ 1,
    with ν = 2/D unless given.

    Arguments:
        graph: The WeightedGraph.
        D: The dimension, positive.
        sampler: A name from `samplers`, or an iterable of (x, r, Ω) triples.
        budget: The number of sets to draw.
        seed: The seed of a named sampler.
        relative: Estimate the relative constant.
        nu: The relative exponent.
        sampler_options: Keyword arguments for a named sampler.
    """
    if D <= 0:
        raise ValueError(f"D must be positive, not {D}.")
    if relative and nu is None:
        nu = 2 / D

    if isinstance(sampler, str):
        if sampler not in samplers:
            raise ValueError(
                f"Unknown sampler {sampler!r}. Valid samplers are {sorted(samplers)}."
            )
        if relative:
            sampler_options.setdefault("min_radius", 1)
        method = sampler
        draws = samplers[sampler](graph, default_rng(seed), **sampler_options)
    else:
        method = "supplied"
        draws = iter(sampler)

    eigenvalues = {}
    best = None
    count = 0
    for x, r, omega in islice(draws, budget):
        count += 1
        key = tuple(omega.members.tolist())
        if key not in eigenvalues:
            eigenvalues[key] = dirichlet_lambda1(graph, omega)[0]
        if relative:
            if r < 1 or not omega.issubset(ball(graph, x, r)):
                raise ValueError(
                    f"Relative Faber-Krahn needs Ω ⊆ B(x, r) with r ≥ 1, not r = {r}."
                )
            value = _relative_fk_value(graph, x, r, omega, eigenvalues[key], nu)
        else:
            value = eigenvalues[key] * omega.volume ** (2 / D)
        if best is None or value < best[0]:
            best = (value, omega, x, r)

    if count < budget:
        raise ValueError(f"Sampler {method} was exhausted after {count} of {budget} sets.")

    value, omega, x, r = best
    logger.info(
        "%s on %s: ĉ = %g over %d sets (%d distinct)",
        "FK*" if relative else "FK",
        graph.name,
        value,
        budget,
        len(eigenvalues),
    )
    return ConstantEstimate(
        tag="FK*" if relative else "FK",
        D=D,
        value=value,
        witness=omega.members,
        method=method,
        seed=seed,
        direction="upper-bound",
        extra={"centre": x, "radius": r, "nu": nu, "distinct_sets": len(eigenvalues)},
    )


def main():
    from argparse import ArgumentParser
    from ..generators import parse_graph_spec
    from .families import log_sobolev_parameters, standard_members

    parser = ArgumentParser(description="Functional inequality constants on a graph.")
    parser.add_argument("graph", type=parse_graph_spec, help='e.g. "torus:N=32,d=2"')
    parser.add_argument("--D", type=float, default=2.0)
    parser.add_argument("--eps", type=float, nargs="+", default=[0.25, 1.0, 4.0, 16.0])
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    parameters = log_sobolev_parameters(args.eps)
    members = standard_members(args.graph, args.seed, parameters=parameters)
    functions = [member.function for member in members]
    nash = quotient_estimate(args.graph, "N", args.D, functions, seed=args.seed)
    print(f"Nash constant ≥ {nash.value:.6g}")

    fit = beta_logfit(args.graph, args.eps, functions, D=args.D)
    for eps, beta in zip(fit.eps, fit.beta):
        print(f"β({eps:g}) ≥ {beta:.6g}")
    if not fit.degenerate:
        print(f"β(ε) ≈ {fit.c:.02uSL} - ({fit.slope:.02uSL}) log ε")

    fk = faber_krahn_scan(args.graph, args.D, budget=args.budget, seed=args.seed)
    print(f"Faber-Krahn constant ≤ {fk.value:.6g}")


if __name__ == "__main__":
    main()
