#!/usr/bin/env python3

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..graph import norm
from .gradient_forms import dirichlet_energy
from .inequalities import (
    beta_logfit,
    davies_simon_M,
    entropy_and_beta,
    nash_quotient,
    nash_to_uc_constant,
)
from .semigroup import DEFAULT_TOLERANCE, heat_flow, uc_norms

logger = logging.getLogger(__name__)

CHAIN_TOLERANCE = 1e-9


@dataclass
class ChainCheckRecord:
    """
    The outcome of checking one implication between functional inequalities
    on a grid. Each grid point stores the predicted bound, the measured
    quantity and the margin predicted - measured; the check passes iff every
    margin is at least -CHAIN_TOLERANCE.
    """

    tag: str
    inputs: dict
    points: list = field(default_factory=list)
    degenerate: bool = False

    def add(self, predicted, measured, **where):
        self.points.append(
            dict(where, predicted=predicted, measured=measured, margin=predicted - measured)
        )

    @property
    def worst_margin(self):
        if not self.points:
            return np.inf
        return min(point["margin"] for point in self.points)

    @property
    def passed(self):
        return self.worst_margin >= -CHAIN_TOLERANCE


def _functions(members):
    functions = [np.asarray(getattr(m, "function", m), dtype=float) for m in members]
    if not functions:
        raise ValueError("A chain check needs at least one test function.")
    return functions


def _grid(values, name):
    if values is None or len(values) == 0:
        raise ValueError(f"A chain check needs a nonempty {name}.")
    values = np.sort(np.asarray(values, dtype=float))
    if (values <= 0).any():
        raise ValueError(f"The {name} must be positive.")
    return values


def _is_degenerate(graph, functions):
    return all(dirichlet_energy(graph, f) == 0 for f in functions)


def uc_to_ls(graph, members, eps_grid, tol=DEFAULT_TOLERANCE, **_):
    """
    From ‖P_ε‖_{2→∞} = e^{M(ε)} measured, check

        ⟨f² log f⟩ - ‖f‖₂² log ‖f‖₂ ≤ ε⟨Γ(f)⟩ + M(ε)‖f‖₂²

    for every member f and every ε on the grid.
    """
    functions = _functions(members)
    eps_grid = _grid(eps_grid, "ε grid")
    record = ChainCheckRecord("UC=>LS", {"eps_grid": eps_grid.tolist(), "tol": tol})
    for eps in eps_grid:
        M = np.log(uc_norms(graph, eps, tol).norm_2_inf)
        for index, f in enumerate(functions):
            entropy, _ = entropy_and_beta(graph, f, eps)
            predicted = eps * dirichlet_energy(graph, f) + M * norm(graph, f) ** 2
            record.add(predicted, entropy, eps=eps, member=index, M=M)
    record.degenerate = _is_degenerate(graph, functions)
    return record


def ls_to_uc(graph, members, eps_grid, t_grid, D=None, tol=DEFAULT_TOLERANCE, **_):
    """
    From β measured over the family on the ε grid, check
    ‖P_t‖_{2→∞} ≤ e^{M(t)} with M(t) = (1/t) ∫_0^t β(ε) dε on the t grid.
    """
    functions = _functions(members)
    eps_grid = _grid(eps_grid, "ε grid")
    t_grid = _grid(t_grid, "t grid")
    fit = beta_logfit(graph, eps_grid, functions, D=D)
    record = ChainCheckRecord(
        "LS=>UC",
        {
            "eps_grid": eps_grid.tolist(),
            "beta": fit.beta.tolist(),
            "t_grid": t_grid.tolist(),
            "tol": tol,
        },
    )
    if fit.degenerate:
        record.degenerate = True
        return record

    record.inputs["beta_fit"] = {"c": fit.c, "slope": fit.slope}
    profile = fit.profile()
    for t in t_grid:
        M = davies_simon_M(profile, t)
        record.add(np.exp(M), uc_norms(graph, t, tol).norm_2_inf, t=t, M=M)
    return record


def _uc_constant(graph, times, mu, tol):
    """
    c₁ = max over the times of ‖P_t‖_{2→∞} t^(μ/4), with the values used.
    """
    norms = {t: uc_norms(graph, t, tol).norm_2_inf for t in sorted(set(times))}
    return max(value * t ** (mu / 4) for t, value in norms.items()), norms


def optimal_times(graph, functions, mu):
    """
    t* = ⟨Γ(f)⟩^(-2/(μ+2)) ‖f‖₁^(4/(μ+2)) for every nonconstant f, keyed by
    its index.
    """
    return {
        i: dirichlet_energy(graph, f) ** (-2 / (mu + 2)) * norm(graph, f, 1) ** (4 / (mu + 2))
        for i, f in enumerate(functions)
        if dirichlet_energy(graph, f) > 0
    }


def uc_to_nash(graph, members, t_grid, mu, tol=DEFAULT_TOLERANCE, **_):
    """
    With c₁ verified as ‖P_t f‖₂ ≤ c₁ t^(-μ/4) ‖f‖₁ on the grid, check

        ‖f‖₂² ≤ 2t⟨Γ(f)⟩ + c₁² t^(-μ/2) ‖f‖₁²

    at t* = ⟨Γ(f)⟩^(-2/(μ+2)) ‖f‖₁^(4/(μ+2)) for every member f.
    """
    functions = _functions(members)
    t_grid = _grid(t_grid, "t grid")
    record = ChainCheckRecord("UC=>N", {"t_grid": t_grid.tolist(), "mu": mu, "tol": tol})
    t_star = optimal_times(graph, functions, mu)
    if not t_star:
        record.degenerate = True
        return record

    c1, norms = _uc_constant(graph, list(t_grid) + list(t_star.values()), mu, tol)
    record.inputs["c1"] = c1

    for t, value in norms.items():
        record.add(c1 * t ** (-mu / 4), value, t=t, stage="cue")
    for i, t in t_star.items():
        f = functions[i]
        predicted = 2 * t * dirichlet_energy(graph, f) + c1**2 * t ** (-mu / 2) * norm(
            graph, f, 1
        ) ** 2
        record.add(predicted, norm(graph, f) ** 2, t=t, member=i, stage="nash")
    return record


def nash_to_uc(graph, members, t_grid, mu, tol=DEFAULT_TOLERANCE, **_):
    """
    With the Nash constant c₂ = sup ‖f‖₂^(2+4/μ) / (⟨Γ(f)⟩‖f‖₁^(4/μ)) over the
    family and its heat evolutions, check ‖P_t f‖₂ ≤ (c₂μ/2t)^(μ/4) ‖f‖₁
    on the grid.
    """
    functions = _functions(members)
    t_grid = _grid(t_grid, "t grid")
    record = ChainCheckRecord("N=>UC", {"t_grid": t_grid.tolist(), "mu": mu, "tol": tol})

    evolved = [heat_flow(graph, f, t_grid, tol) for f in functions]
    candidates = [g for f, rows in zip(functions, evolved) for g in (f, *rows)]
    quotients = [
        nash_quotient(graph, g, mu) for g in candidates if dirichlet_energy(graph, g) > 0
    ]
    if not quotients:
        record.degenerate = True
        return record

    c2 = max(quotients)
    c1 = nash_to_uc_constant(c2, mu)
    record.inputs.update(c2=c2, c1=c1)
    for index, (f, rows) in enumerate(zip(functions, evolved)):
        for t, row in zip(t_grid, rows):
            record.add(c1 * t ** (-mu / 4) * norm(graph, f, 1), norm(graph, row), t=t, member=index)
    return record


chains = {
    "UC=>LS": uc_to_ls,
    "LS=>UC": ls_to_uc,
    "UC=>N": uc_to_nash,
    "N=>UC": nash_to_uc,
}
CHAIN_ALIASES = {"a": "UC=>LS", "b": "LS=>UC", "c": "UC=>N", "d": "N=>UC"}


def chain_check(graph, tag, **params):
    """
    Check one implication between ultracontractivity (UC), the
    log-Sobolev inequality (LS) and the Nash inequality (N) numerically.

    Arguments:
        graph: The WeightedGraph.
        tag: One of "UC=>LS", "LS=>UC", "UC=>N", "N=>UC" (or "a" to "d").
        params: members (test functions or FamilyMembers), and as the chain
                needs: eps_grid, t_grid, mu, D, tol.

    Returns:
        A ChainCheckRecord with every grid point.
    """
    tag = CHAIN_ALIASES.get(tag, tag)
    if tag not in chains:
        raise ValueError(f"Unknown chain {tag!r}. Valid chains are {sorted(chains)}.")
    try:
        record = chains[tag](graph, **params)
    except TypeError as error:
        raise ValueError(f"Missing input for chain {tag}: {error}") from None

    if record.degenerate:
        warnings.warn(f"Chain {tag} is vacuous: every test function is constant.")
    logger.info(
        "chain %s on %s: %s, worst margin %.3e over %d points",
        tag,
        graph.name,
        "pass" if record.passed else "FAIL",
        record.worst_margin,
        len(record.points),
    )
    return record
