# -*- coding: utf-8 -*-

""" Command line front end. Every command writes CSV or JSON for plotting. """

__all__ = ["COMMANDS", "RunConfig", "build_parser", "main"]

import argparse
import contextlib
import csv
import dataclasses
import json
import logging
import os
import sys
import time

import numpy as np

from fogopt.central import (check_feasibility, arrival_sweep, efficiency_sweep,
                            solve_centralized, no_cooperation_baseline)
from fogopt.dist import run_admm_central, run_admm_vs, run_subgradient
from fogopt.exceptions import ConvergenceError, FogOptException, InvalidParameterError
from fogopt.model import NodeParams, PowerParams, coop_objective
from fogopt.scenario import (COOPERATION_RULES, PROFILES, load_scenario, make_dublin_like,
                             mm1_simulate, write_scenario)
from fogopt.single import (closed_form_audit, max_efficiency_alpha, optimal_alpha_numeric,
                           tradeoff_curve)
from fogopt.transport import JsonLinesTransport, MemoryTransport
from fogopt.util import LOG_LEVELS, configure_logging, resolve_seed

logger = logging.getLogger(__name__)

COMMANDS = ("solve-single", "solve-coop", "sweep", "compare", "validate-queue",
            "gen-scenario", "audit")
ALGORITHMS = ("central", "subgradient", "admm", "admm-central")
SWEEP_KINDS = ("tradeoff", "arrival", "efficiency")
# sweeps that run over a scenario file
SCENARIO_SWEEPS = ("arrival", "efficiency")

# commands whose --scenario file must exist before anything runs
READ_COMMANDS = ("solve-coop", "compare", "audit")

SINGLE_UNITS = {
    "alpha_star": "fraction",
    "response_time": "seconds",
    "efficiency_at_opt": "watts/unit",
}
COOP_UNITS = {
    "objective": "seconds",
    "phi": "workload-units/s",
    "phi_cloud": "workload-units/s",
    "row_residuals": "workload-units/s",
    "column_slacks": "workload-units/s",
}
TRADEOFF_UNITS = {
    "eta_cap": "watts/unit",
    "alpha_star": "fraction",
    "response_time": "seconds",
    "efficiency_at_opt": "watts/unit",
}
ARRIVAL_UNITS = {
    "scale": "factor",
    "mean_processed": "workload-units/s",
    "no_coop_mean_processed": "workload-units/s",
    "objective": "seconds",
}
EFFICIENCY_UNITS = {
    "scale": "factor",
    "mean_efficiency_cap": "watts/unit",
    "objective": "seconds",
    "no_coop_objective": "seconds",
    "mean_power_efficiency": "watts/unit",
    "no_coop_mean_power_efficiency": "watts/unit",
}
COMPARE_UNITS = {
    "objective": "seconds",
    "iterations_to_gap": "iterations",
    "wall_time_ms": "milliseconds",
}
QUEUE_UNITS = {
    "lambda": "workload-units/s",
    "mu": "workload-units/s",
    "simulated_mean": "seconds",
    "analytic_mean": "seconds",
    "relative_error": "fraction",
}
AUDIT_UNITS = {
    "closed_form": "fraction",
    "numeric": "fraction",
    "abs_discrepancy": "fraction",
}


@dataclasses.dataclass
class RunConfig(object):
    """ Parsed command line, validated before any work starts """
    command: str
    scenario_path: str = None
    algorithm: str = "central"
    output_path: str = "-"
    seed: int = 0
    rho: float = 1.0
    step_base: float = 1.0
    tol: float = 1e-8
    eps: float = 1e-6
    gap_tol: float = None
    max_iters: int = None
    trace_path: str = None
    transcript_path: str = None
    fixed_rho: bool = False
    timing: bool = False
    options: dict = dataclasses.field(default_factory=dict)

    @classmethod
    def from_args(cls, args):
        known = {f.name for f in dataclasses.fields(cls)} - {"options", "seed"}
        values = vars(args)
        config = cls(**{k: v for k, v in values.items() if k in known and v is not None})
        config.seed = resolve_seed(values.get("seed"))
        config.options = {k: v for k, v in values.items()
                          if k not in known and k not in ("seed", "log_level")}
        return config

    def validate(self):
        if self.command not in COMMANDS:
            raise InvalidParameterError("command", self.command)
        if self.command in READ_COMMANDS or (
                self.command == "sweep" and self.options.get("kind") in SCENARIO_SWEEPS):
            if not self.scenario_path:
                raise InvalidParameterError("scenario", None,
                                            "{0} needs --scenario".format(self.command))
            if not os.path.isfile(self.scenario_path):
                raise InvalidParameterError("scenario", self.scenario_path,
                                            "no such file: {0}".format(self.scenario_path))
        if self.algorithm not in ALGORITHMS:
            raise InvalidParameterError("algorithm", self.algorithm)
        for name in ("rho", "step_base", "tol", "eps"):
            if not getattr(self, name) > 0.0:
                raise InvalidParameterError(
                    name, getattr(self, name), "--{0} must be positive".format(
                        name.replace("_", "-")))
        if self.gap_tol is not None and not self.gap_tol > 0.0:
            raise InvalidParameterError("gap_tol", self.gap_tol, "--gap-tol must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise InvalidParameterError("max_iters", self.max_iters,
                                        "--max-iters must be at least 1")
        if self.command == "sweep" and self.options.get("kind") == "tradeoff":
            if self.options.get("eta_min") is None or self.options.get("eta_max") is None:
                raise InvalidParameterError("eta", None,
                                            "a tradeoff sweep needs --eta-min and --eta-max")
            if not 0.0 < self.options["eta_min"] <= self.options["eta_max"]:
                raise InvalidParameterError("eta", (self.options["eta_min"],
                                                    self.options["eta_max"]),
                                            "need 0 < --eta-min <= --eta-max")
            if self.options.get("points", 1) < 1:
                raise InvalidParameterError("points", self.options["points"])
        if self.command == "gen-scenario" and self.output_path == "-":
            raise InvalidParameterError("output", self.output_path,
                                        "gen-scenario needs --output FILE")
        return self

    def default_trace_path(self):
        if self.trace_path:
            return self.trace_path
        if self.output_path and self.output_path != "-":
            return self.output_path + ".trace.csv"
        return "fogopt-{0}-trace.csv".format(self.command)


def _add_node_flags(parser):
    parser.add_argument("--mu", type=float, required=True, help="service rate, units/s")
    parser.add_argument("--lambda", dest="arrival_rate", type=float, required=True,
                        help="arrival rate, units/s")
    parser.add_argument("--tau-f", dest="cloud_rtt", type=float, required=True,
                        help="fog to cloud round trip time, seconds")
    parser.add_argument("--tau-u", dest="user_rtt", type=float, default=0.0,
                        help="user to fog round trip time, seconds")
    parser.add_argument("--pue", type=float, default=1.0, help="power usage effectiveness")
    parser.add_argument("--w-static", type=float, default=1.0, help="static power, watts")
    parser.add_argument("--w-dynamic", type=float, default=0.0,
                        help="dynamic power, watts per unit/s")
    parser.add_argument("--eta-cap", type=float, default=1e-6,
                        help="efficiency cap, watts per unit; the default never binds")


def _add_solver_flags(parser):
    parser.add_argument("--rho", type=float, help="starting ADMM penalty (normalized)")
    parser.add_argument("--fixed-rho", action="store_true",
                        help="keep the ADMM penalty fixed instead of rebalancing it")
    parser.add_argument("--step-base", type=float, help="subgradient step constant")
    parser.add_argument("--tol", type=float, help="relative gap of the central solver")
    parser.add_argument("--eps", type=float, help="ADMM residual tolerance")
    parser.add_argument("--max-iters", type=int, help="iteration budget")
    parser.add_argument("--trace", dest="trace_path", help="per-iteration trace CSV")
    parser.add_argument("--transcript", dest="transcript_path",
                        help="JSON lines log of every protocol message")
    parser.add_argument("--timing", action="store_true", help="record wall-clock times")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fogopt",
        description="Workload allocation for cooperating fog nodes",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--log-level", choices=sorted(LOG_LEVELS),
                        help="overrides the FOGOPT_LOG environment variable")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    single = subparsers.add_parser("solve-single", help="optimal local fraction of one node")
    _add_node_flags(single)
    single.add_argument("--constraint", choices=("capacity", "efficiency"),
                        default="capacity")
    single.add_argument("--deadline", type=float,
                        help="also report the most power efficient point meeting it")
    single.add_argument("--output", dest="output_path", default="-")

    coop = subparsers.add_parser("solve-coop", help="cooperative allocation of a scenario")
    coop.add_argument("--scenario", dest="scenario_path", required=True)
    coop.add_argument("--algorithm", choices=ALGORITHMS, default="central")
    coop.add_argument("--output", dest="output_path", default="-")
    _add_solver_flags(coop)

    sweep = subparsers.add_parser("sweep", help="tradeoff, arrival-rate or efficiency-cap sweep")
    sweep.add_argument("--kind", choices=SWEEP_KINDS, required=True)
    sweep.add_argument("--mu", type=float)
    sweep.add_argument("--lambda", dest="arrival_rate", type=float)
    sweep.add_argument("--tau-f", dest="cloud_rtt", type=float)
    sweep.add_argument("--tau-u", dest="user_rtt", type=float, default=0.0)
    sweep.add_argument("--pue", type=float, default=1.0)
    sweep.add_argument("--w-static", type=float, default=1.0)
    sweep.add_argument("--w-dynamic", type=float, default=0.0)
    sweep.add_argument("--eta-min", type=float)
    sweep.add_argument("--eta-max", type=float)
    sweep.add_argument("--points", type=int, default=20)
    sweep.add_argument("--scenario", dest="scenario_path")
    sweep.add_argument("--scales", default="0.5,0.75,1.0,1.25,1.5",
                       help="comma separated arrival-rate or cap multipliers")
    sweep.add_argument("--output", dest="output_path", default="-")

    compare = subparsers.add_parser(
        "compare", help="central, subgradient, ADMM and central ADMM on one scenario")
    compare.add_argument("--scenario", dest="scenario_path", required=True)
    compare.add_argument("--gap-tol", type=float, default=1e-2,
                         help="relative gap to the central optimum that counts as reached")
    compare.add_argument("--output", dest="output_path", default="-")
    _add_solver_flags(compare)

    queue = subparsers.add_parser("validate-queue", help="simulate an M/M/1 queue")
    queue.add_argument("--lambda", dest="arrival_rate", type=float, required=True)
    queue.add_argument("--mu", type=float, required=True)
    queue.add_argument("--departures", type=int, default=100000)
    queue.add_argument("--seed", type=int)
    queue.add_argument("--output", dest="output_path", default="-")

    gen = subparsers.add_parser("gen-scenario", help="synthetic city-scale scenario")
    gen.add_argument("--profile", choices=sorted(PROFILES), default="urban")
    gen.add_argument("--nodes", type=int, default=20)
    gen.add_argument("--cooperation", choices=COOPERATION_RULES, default="radius")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--output", dest="output_path", default="-")

    audit = subparsers.add_parser("audit", help="closed form against numeric optimum")
    audit.add_argument("--scenario", dest="scenario_path", required=True)
    audit.add_argument("--output", dest="output_path", default="-")
    return parser


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as f:
        yield f


def _write_json(path, data, units):
    data = dict(data, units=units)
    with _output(path) as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def _write_csv(path, fields, rows, units):
    with _output(path) as f:
        f.write("# units: " + ", ".join("{0}={1}".format(k, v) for k, v in units.items())
                + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_cell(row.get(name)) for name in fields])


def _node(options, eta_cap=None):
    power = PowerParams(options["pue"], options["w_static"], options["w_dynamic"],
                        options.get("eta_cap") if eta_cap is None else eta_cap)
    return NodeParams("cli", options["arrival_rate"], options["mu"], options["user_rtt"],
                      power)


def _solve_single(config):
    options = config.options
    node = _node(options)
    sol = optimal_alpha_numeric(node, options["cloud_rtt"], constraint=options["constraint"])
    result = sol.to_dict()
    if options.get("deadline") is not None:
        result["max_efficiency"] = max_efficiency_alpha(node, options["cloud_rtt"],
                                                        options["deadline"]).to_dict()
    _write_json(config.output_path, result, SINGLE_UNITS)


def _run_solver(config, s, algorithm, oracle_value=None, gap_tol=None):
    """ Runs one solver. Returns (Allocation, SolveTrace). """
    if algorithm == "central":
        kwargs = {"tol": config.tol, "timing": config.timing}
        if config.max_iters is not None:
            kwargs["max_iters"] = config.max_iters
        return solve_centralized(s, **kwargs)
    if algorithm == "admm-central":
        kwargs = {"oracle_value": oracle_value, "gap_tol": gap_tol, "timing": config.timing,
                  "auto_rho": not config.fixed_rho}
        if config.max_iters is not None:
            kwargs["max_iters"] = config.max_iters
        return run_admm_central(s, rho=config.rho, eps_pri=config.eps, eps_dual=config.eps,
                                **kwargs)

    transport = MemoryTransport()
    if config.transcript_path:
        path = config.transcript_path
        if config.command == "compare":
            root, ext = os.path.splitext(path)
            path = "{0}.{1}{2}".format(root, algorithm, ext or ".jsonl")
        transport = JsonLinesTransport(path)
    kwargs = {"oracle_value": oracle_value, "gap_tol": gap_tol, "transport": transport,
              "timing": config.timing}
    if config.max_iters is not None:
        kwargs["max_iters"] = config.max_iters
    try:
        if algorithm == "subgradient":
            return run_subgradient(s, step_base=config.step_base, **kwargs)
        return run_admm_vs(s, rho=config.rho, eps_pri=config.eps, eps_dual=config.eps,
                           auto_rho=not config.fixed_rho, **kwargs)
    finally:
        transport.close()


def _solve_coop(config):
    s = load_scenario(config.scenario_path)
    if config.algorithm in ("central", "admm-central") and config.transcript_path:
        logger.warning("--transcript has no effect with the %s solver", config.algorithm)
    alloc, trace = _run_solver(config, s, config.algorithm)
    if config.trace_path:
        trace.save_csv(config.trace_path)
    report = check_feasibility(alloc, s)
    result = {
        "algorithm": config.algorithm,
        "node_ids": [n.id for n in s.nodes],
        "objective": coop_objective(alloc, s),
        "iterations": trace.iterations,
        "converged_at": trace.converged_at,
        "phi": alloc.phi.tolist(),
        "phi_cloud": alloc.phi_cloud.tolist(),
        "feasibility": report.to_dict(),
    }
    _write_json(config.output_path, result, COOP_UNITS)


def _sweep(config):
    options = config.options
    if options["kind"] == "tradeoff":
        for name in ("mu", "arrival_rate", "cloud_rtt"):
            if options.get(name) is None:
                raise InvalidParameterError(name, None, "a tradeoff sweep needs --mu, "
                                            "--lambda and --tau-f")
        grid = np.linspace(options["eta_min"], options["eta_max"], options["points"])
        node = _node(options, eta_cap=float(grid[-1]))
        rows = []
        for point in tradeoff_curve(node, options["cloud_rtt"], grid):
            row = point._asdict()
            if point.binding is not None:
                row["binding"] = point.binding.value
            rows.append(row)
        _write_csv(config.output_path, list(rows[0].keys()) if rows else [], rows,
                   TRADEOFF_UNITS)
        return
    scales = [float(v) for v in options["scales"].split(",") if v.strip()]
    if not scales or min(scales) <= 0.0:
        raise InvalidParameterError("scales", options["scales"],
                                    "--scales must be positive numbers")
    s = load_scenario(config.scenario_path)
    if options["kind"] == "efficiency":
        rows = efficiency_sweep(s, scales, tol=config.tol)
        _write_csv(config.output_path, list(EFFICIENCY_UNITS), rows, EFFICIENCY_UNITS)
        return
    rows = arrival_sweep(s, scales, tol=config.tol)
    _write_csv(config.output_path, list(ARRIVAL_UNITS), rows, ARRIVAL_UNITS)


def _compare(config):
    s = load_scenario(config.scenario_path)
    gap_tol = config.gap_tol if config.gap_tol is not None else 1e-2
    rows = []

    started = time.perf_counter()
    alloc, trace = _run_solver(config, s, "central")
    oracle = coop_objective(alloc, s)
    rows.append(_compare_row(config, "central", oracle, trace.converged_at, started))
    baseline = no_cooperation_baseline(s)[1]
    logger.info("central optimum %.9g, no cooperation %.9g", oracle, baseline)

    for algorithm in ("subgradient", "admm", "admm-central"):
        started = time.perf_counter()
        try:
            _, trace = _run_solver(config, s, algorithm, oracle_value=oracle,
                                   gap_tol=gap_tol)
        except ConvergenceError as error:
            logger.warning("%s did not reach gap %g: %s", algorithm, gap_tol, error)
            trace = error.trace
        objective = min(trace.column("objective")) if len(trace) else None
        rows.append(_compare_row(config, algorithm, objective, trace.converged_at, started))
        if config.trace_path:
            root, ext = os.path.splitext(config.trace_path)
            trace.save_csv("{0}.{1}{2}".format(root, algorithm, ext or ".csv"))

    _write_csv(config.output_path, ["algorithm", "objective", "iterations_to_gap",
                                    "wall_time_ms"], rows, COMPARE_UNITS)


def _compare_row(config, algorithm, objective, iterations, started):
    wall = None
    if config.timing:
        wall = "{0:.3f}".format((time.perf_counter() - started) * 1000.0)
    return {"algorithm": algorithm, "objective": objective,
            "iterations_to_gap": iterations, "wall_time_ms": wall}


def _validate_queue(config):
    options = config.options
    lam, mu = options["arrival_rate"], options["mu"]
    mean = mm1_simulate(lam, mu, options["departures"], config.seed)
    analytic = 1.0 / (mu - lam)
    _write_json(config.output_path, {
        "lambda": lam,
        "mu": mu,
        "departures": options["departures"],
        "seed": config.seed,
        "simulated_mean": mean,
        "analytic_mean": analytic,
        "relative_error": abs(mean - analytic) / analytic,
    }, QUEUE_UNITS)


def _gen_scenario(config):
    options = config.options
    s = make_dublin_like(options["profile"], options["nodes"], config.seed,
                         cooperation=options["cooperation"])
    write_scenario(s, config.output_path)
    logger.info("wrote %d node %s scenario to %s", s.size, options["profile"],
                config.output_path)


def _audit(config):
    s = load_scenario(config.scenario_path)
    rows = closed_form_audit(s.nodes, s.cloud_rtt)
    _write_csv(config.output_path, ["id", "branch", "closed_form", "numeric",
                                    "abs_discrepancy", "error"], rows, AUDIT_UNITS)


HANDLERS = {
    "solve-single": _solve_single,
    "solve-coop": _solve_coop,
    "sweep": _sweep,
    "compare": _compare,
    "validate-queue": _validate_queue,
    "gen-scenario": _gen_scenario,
    "audit": _audit,
}


def main(argv=None):
    """ Entry point. Returns 0 on success, 2 on a usage error and 1 when a
        solver or file operation fails.
    """
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return exit_.code if isinstance(exit_.code, int) else 2
    configure_logging(args.log_level)

    try:
        config = RunConfig.from_args(args).validate()
    except InvalidParameterError as error:
        sys.stderr.write("fogopt {0}: error: {1}\n".format(args.command, error))
        return 2

    try:
        HANDLERS[config.command](config)
    except InvalidParameterError as error:
        sys.stderr.write("fogopt {0}: error: {1}\n".format(config.command, error))
        return 2
    except ConvergenceError as error:
        path = config.default_trace_path()
        message = str(error)
        if error.trace is not None:
            try:
                error.trace.save_csv(path)
                message = "{0}; trace written to {1}".format(message, path)
            except IOError:
                logger.error("couldn't write trace to %s", path)
        sys.stderr.write("fogopt {0}: {1}\n".format(config.command, message))
        return 1
    except (FogOptException, IOError) as error:
        sys.stderr.write("fogopt {0}: {1}\n".format(config.command, error))
        return 1
    return 0
