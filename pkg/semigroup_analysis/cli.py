#!/usr/bin/env python3

import logging
import sys
import warnings
from argparse import ArgumentParser
from pathlib import Path

import numpy as np

from .cache import KernelCache
from .config import ConfigError, load_config, vertex_of
from .generators import parse_graph_spec, write_edge_list
from .graph import growth_profile
from .measurements.chains import chain_check
from .measurements.curvature import cde_verify, dimension_scan
from .measurements.families import log_sobolev_parameters, standard_members
from .measurements.inequalities import (
    REEVALUATION_TOLERANCE,
    beta_logfit,
    faber_krahn_scan,
    quotient_estimate,
)
from .measurements.semigroup import exponent_fit, kernel_table, on_diagonal_constant
from .report import PLOT_TABLES, RESULTS_FILENAME, Report, emit_plotdata, read_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2
INVARIANT_TOLERANCE = 1e-9


def _label(graph, x):
    label = graph.labels[x]
    return list(label) if isinstance(label, tuple) else label


def run_kernels(config, graph, report, cache):
    section = config.sections["kernels"]
    tol = config.run["tolerance"]
    x = vertex_of(graph, section["vertex"])
    table = kernel_table(graph, x, K=section["steps"], times=section["times"], tol=tol, cache=cache)
    defects = table.invariant_defects()
    report.add(
        "kernel_table",
        {"vertex": _label(graph, x), "K": section["steps"], "times": section["times"], "tol": tol},
        {
            "discrete_rows": table.discrete_rows,
            "continuous_rows": table.continuous_rows,
            "truncation_orders": table.truncation_orders,
            "error_bounds": table.error_bounds,
            "convention": table.convention,
            "defects": defects,
        },
        passed=max(defects.values()) <= INVARIANT_TOLERANCE,
    )

    if section["on_diagonal_steps"]:
        c_est, ratios = on_diagonal_constant(graph, x, section["on_diagonal_steps"])
        report.add(
            "on_diagonal_constant",
            {"vertex": _label(graph, x), "ks": section["on_diagonal_steps"]},
            {"c_est": c_est, "ratios": ratios},
        )

    if section["fit_grid"]:
        mode = section["fit_mode"]
        horizon = section["fit_grid"]
        if mode == "discrete":
            horizon = [int(k) for k in horizon]
        fit = exponent_fit(
            graph,
            mode,
            horizon,
            tuple(section["fit_window"]),
            tol=tol,
            saturation_margin=section["saturation_margin"],
        )
        report.add(
            "exponent_fit",
            {"mode": mode, "grid": horizon, "window": section["fit_window"], "tol": tol},
            {
                "values": fit.values,
                "values_mx": fit.values_mx,
                "saturated": fit.saturated,
                "fit_mask": fit.fit_mask,
                "C": fit.C,
                "exponent": fit.exponent,
            },
        )
        fitted = fit.fitted_values()
        if fitted is None:
            fitted = np.full(len(fit.grid), np.nan)
        name = "cue-decay" if mode == "continuous" else "due-decay"
        report.add_table(name, zip(fit.grid, fit.values, fitted))


def run_growth(config, graph, report, cache):
    section = config.sections["growth"]
    x = vertex_of(graph, section["vertex"])
    profile = growth_profile(graph, x, section["r_max"])
    report.add(
        "growth_profile",
        {"vertex": _label(graph, x), "r_max": section["r_max"]},
        {
            "radii": profile.radii,
            "volumes": profile.volumes,
            "c": profile.c,
            "D_est": profile.D_est,
            "doubling_ratios": profile.doubling_ratios,
            "C_est": profile.C_est,
        },
    )
    report.add_table(
        "volume-growth", zip(profile.radii, profile.volumes, profile.fitted_volumes())
    )


def run_curvature(config, graph, report, cache):
    section = config.sections["curvature"]
    seed = config.seed_for("curvature")
    x = vertex_of(graph, section["vertex"])
    for n in section["n"]:
        result = cde_verify(
            graph,
            x,
            n,
            section["K"],
            restarts=section["restarts"],
            max_iterations=section["max_iterations"],
            seed=seed,
        )
        report.add(
            "cde_verify",
            {
                "vertex": _label(graph, x),
                "n": n,
                "K": section["K"],
                "restarts": section["restarts"],
                "max_iterations": section["max_iterations"],
            },
            {
                "verdict": result.verdict,
                "residual": result.residual,
                "iterations": result.iterations,
                "converged": result.converged,
                "witness": {str(graph.labels[v]): value for v, value in result.witness.items()},
            },
            seed=seed,
        )

    if section["scan"]:
        scan = dimension_scan(
            graph,
            x,
            section["K"],
            tuple(section["scan"]),
            resolution=section["resolution"],
            restarts=section["restarts"],
            seed=seed,
            max_iterations=section["max_iterations"],
        )
        report.add(
            "dimension_scan",
            {
                "vertex": _label(graph, x),
                "K": section["K"],
                "n_range": section["scan"],
                "resolution": section["resolution"],
                "restarts": section["restarts"],
            },
            scan._asdict(),
            seed=seed,
        )


def _estimate_result(estimate, graph):
    """
    The record of a ConstantEstimate and whether its witness reproduces it.
    """
    reevaluated = estimate.reevaluate(graph)
    result = {
        "value": estimate.value,
        "direction": estimate.direction,
        "method": estimate.method,
        "reevaluated": reevaluated,
        "extra": estimate.extra,
        "witness": estimate.witness,
    }
    return result, abs(reevaluated - estimate.value) <= REEVALUATION_TOLERANCE * max(
        1.0, abs(estimate.value)
    )


def run_inequalities(config, graph, report, cache):
    section = config.sections["inequalities"]
    seed = config.seed_for("inequalities")
    D = section["D"]
    family = {"families": section["families"], "budget": section["budget"]}
    members = standard_members(
        graph,
        seed,
        section["budget"],
        section["families"],
        parameters=log_sobolev_parameters(section["eps_grid"]),
    )
    functions = [member.function for member in members]

    tags = ["N", "S"] if D > 2 else ["N"]
    for tag in tags:
        estimate = quotient_estimate(graph, tag, D, functions, seed=seed)
        result, reproduced = _estimate_result(estimate, graph)
        report.add(
            "functional_quotients",
            dict(family, tag=tag, D=D),
            result,
            seed=seed,
            passed=reproduced,
        )

    fit = beta_logfit(graph, section["eps_grid"], functions, D=D, seed=seed)
    report.add(
        "beta_logfit",
        dict(family, eps_grid=section["eps_grid"], D=D),
        {
            "beta": fit.beta,
            "c": fit.c,
            "slope": fit.slope,
            "degenerate": fit.degenerate,
            "reevaluated": [estimate.reevaluate(graph) for estimate in fit.estimates],
        },
        seed=seed,
        passed=bool((np.diff(fit.beta) <= INVARIANT_TOLERANCE).all()),
    )
    fitted = fit.fitted_values()
    if fitted is None:
        fitted = np.full(len(fit.eps), np.nan)
    report.add_table("beta-vs-eps", zip(fit.eps, fit.beta, fitted))

    if section["fk_budget"] > 0:
        estimate = faber_krahn_scan(
            graph,
            D,
            sampler=section["fk_sampler"],
            budget=section["fk_budget"],
            seed=seed,
            relative=section["fk_relative"],
            nu=section["nu"],
            max_radius=section["fk_max_radius"],
        )
        result, reproduced = _estimate_result(estimate, graph)
        report.add(
            "faber_krahn_scan",
            {
                "D": D,
                "sampler": section["fk_sampler"],
                "budget": section["fk_budget"],
                "relative": section["fk_relative"],
                "nu": section["nu"],
                "max_radius": section["fk_max_radius"],
            },
            result,
            seed=seed,
            passed=reproduced,
        )


def run_chains(config, graph, report, cache):
    section = config.sections["chains"]
    seed = config.seed_for("chains")
    eps_grid = config.chain_eps_grid()
    members = config.chain_members(graph)
    for tag in config.chains():
        record = chain_check(
            graph,
            tag,
            members=members,
            eps_grid=eps_grid,
            t_grid=section["t_grid"],
            mu=section["mu"],
            D=section["mu"],
            tol=config.run["tolerance"],
        )
        report.add(
            "chain_check",
            {
                "chain": record.tag,
                "families": section["families"],
                "budget": section["budget"],
                "eps_grid": eps_grid,
                "t_grid": section["t_grid"],
                "mu": section["mu"],
            },
            {
                "inputs": record.inputs,
                "points": record.points,
                "worst_margin": record.worst_margin,
                "degenerate": record.degenerate,
            },
            seed=seed,
            passed=record.passed,
        )


runners = {
    "kernels": run_kernels,
    "growth": run_growth,
    "curvature": run_curvature,
    "inequalities": run_inequalities,
    "chains": run_chains,
}


def run_suite(config, analyses=None):
    """
    Run the configured analyses on the configured graph, in the fixed order
    kernels, growth, curvature, inequalities, chains.

    Every horizon is checked against the boundary guard before anything is
    computed; a violation raises ConfigError naming the analysis.
    """
    graph = config.build_graph()
    requested = config.analyses if analyses is None else analyses
    selected = [name for name in runners if name in requested]
    config.validate(graph, selected)

    directory = config.cache_directory()
    cache = KernelCache(directory) if directory else None
    report = Report(
        header={
            "graph": graph.description(),
            "fingerprint": graph.fingerprint(),
            "seed": config.seed,
            "config": config.echo(),
        },
        witnesses=config.run["witness"],
    )
    for analysis in selected:
        logger.info("running %s on %r", analysis, graph)
        runners[analysis](config, graph, report, cache)
    return report


def _common_arguments():
    parser = ArgumentParser(add_help=False)
    parser.add_argument("--config", help="INI-style run configuration")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--no-witness", action="store_true", help="omit witnesses from records")
    parser.add_argument("--cache", help="kernel cache directory, or off")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one configuration value",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _overrides(args):
    overrides = {}
    for item in args.set:
        key, separator, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not separator or not dot:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, not {item!r}.")
        overrides[(section, name)] = value
    if args.seed is not None:
        overrides[("run", "seed")] = str(args.seed)
    if args.out is not None:
        overrides[("run", "out")] = args.out
    if args.no_witness:
        overrides[("run", "witness")] = "no"
    if args.cache is not None:
        overrides[("run", "cache")] = args.cache
    return overrides


def _load(args):
    if args.config is None:
        raise ConfigError("--config is required.")
    return load_config(args.config, overrides=_overrides(args))


def command_gen(args):
    if args.graph is not None:
        graph = parse_graph_spec(args.graph)
    else:
        config = _load(args)
        graph = config.build_graph()
    print(repr(graph))
    print(f"total volume: {graph.total_volume:g}")
    print(f"connected: {graph.connected}, loops: {graph.has_loops}")
    print(f"boundary vertices: {int(graph.boundary.sum())}")
    print(f"fingerprint: {graph.fingerprint()}")
    if args.out is not None:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        filename = Path(args.out) / f"{graph.name}.edges"
        write_edge_list(graph, filename)
        print(f"edges written to {filename}")
    return EXIT_OK


def command_plotdata(args):
    out = Path(args.out or "results")
    report = read_report(args.results or out / RESULTS_FILENAME)
    for table in args.tables or sorted(report.tables):
        print(emit_plotdata(report, table, out))
    return EXIT_OK


def command_analyses(analyses):
    def command(args):
        config = _load(args)
        report = run_suite(config, analyses)
        filename = report.write(config.run["out"])
        print(report.summary())
        print(f"records written to {filename}")
        return EXIT_OK if report.passed else EXIT_CHECK_FAILED

    return command


def main(argv=None):
    common = _common_arguments()
    parser = ArgumentParser(
        description="Heat kernels, curvature and functional inequalities on weighted graphs."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    gen = subparsers.add_parser("gen", parents=[common], help="build and inspect a graph")
    gen.add_argument("--graph", help='a graph description such as "torus:N=32,d=2"')
    gen.set_defaults(run=command_gen)

    for name, analyses, description in (
        ("kernel", ["kernels", "growth"], "heat kernel rows, decay fits and volume growth"),
        ("curvature", ["curvature"], "CDE' verification and dimension scans"),
        ("ineq", ["inequalities"], "Nash, Sobolev, Faber-Krahn and log-Sobolev constants"),
        ("chains", ["chains"], "numerical checks of the inequality chains"),
        ("suite", None, "every configured analysis"),
    ):
        subparser = subparsers.add_parser(name, parents=[common], help=description)
        subparser.set_defaults(run=command_analyses(analyses))

    plotdata = subparsers.add_parser("plotdata", parents=[common], help="emit CSV plot tables")
    plotdata.add_argument("tables", nargs="*", help=f"any of {sorted(PLOT_TABLES)}")
    plotdata.add_argument("--results", help="results file (default OUT/results.jsonl)")
    plotdata.set_defaults(run=command_plotdata)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=max(logging.WARNING - 10 * args.verbose, logging.DEBUG),
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)

    try:
        return args.run(args)
    except (ValueError, KeyError, OSError) as error:
        # ConfigError, GuardError and BracketError included
        print(f"error: {error}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    warnings.simplefilter("default")
    sys.exit(main())
