# -*- coding: utf-8 -*-

""" Centralized reference solver for the cooperative allocation problem """

__all__ = [
    "FEASIBILITY_TOL",
    "FeasibilityReport",
    "check_feasibility",
    "project_feasible",
    "optimality_gap_bound",
    "solve_centralized",
    "no_cooperation_baseline",
    "arrival_sweep",
    "efficiency_sweep",
]

import dataclasses
import logging

import numpy as np

from fogopt.exceptions import ConvergenceError, InvalidParameterError
from fogopt.model import (Allocation, coop_gradient, coop_objective, no_cooperation,
                          power_efficiency)
from fogopt.single import optimal_alpha_numeric
from fogopt.trace import SolveTrace
from fogopt.util import simplex_threshold

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-6
PROJECTION_TOL = 1e-9

TRACE_UNITS = {
    "objective": "seconds",
    "primal_residual": "workload-units/s",
    "dual_residual": "seconds",
    "dual_norm": "seconds per workload-unit/s",
}


@dataclasses.dataclass(frozen=True, eq=False)
class FeasibilityReport(object):
    row_residuals: object
    column_slacks: object
    bound_violations: int
    feasible: bool

    def to_dict(self):
        return {
            "row_residuals": [float(v) for v in self.row_residuals],
            "column_slacks": [float(v) for v in self.column_slacks],
            "bound_violations": int(self.bound_violations),
            "feasible": bool(self.feasible),
        }


def check_feasibility(a, s, tol=FEASIBILITY_TOL):
    """ Residuals of the row balance and column capacity constraints """
    rows = a.row_totals() - s.arrival_rates()
    slacks = s.capacities() - a.column_loads()
    violations = int(np.count_nonzero(a.phi < -tol)
                     + np.count_nonzero(a.phi_cloud < -tol)
                     + np.count_nonzero((~s.coop_mask) & (np.abs(a.phi) > tol)))
    feasible = bool(np.max(np.abs(rows)) <= tol
                    and np.min(slacks) >= -tol
                    and violations == 0)
    return FeasibilityReport(rows, slacks, violations, feasible)


def _project(values, allowed, lam, cap, beta=None, tol=PROJECTION_TOL, max_sweeps=10000):
    """ Euclidean projection of an N x (N+1) matrix onto the feasible set.

        Exact block ascent on the dual: row prices come from a simplex
        threshold given the column prices, column prices from a capped
        threshold given the row prices. Returns the projection and the
        column prices, which can be fed back as a warm start.
    """
    size = len(lam)
    fog_allowed = allowed[:, :size]
    scale = max(1.0, float(np.max(lam)))
    if beta is None:
        beta = np.zeros(size)
    else:
        beta = np.maximum(np.asarray(beta, dtype=float), 0.0)
    shifted = np.array(values, dtype=float)
    for sweep in range(1, max_sweeps + 1):
        shifted[:, :size] = values[:, :size] - beta[None, :]
        theta = simplex_threshold(shifted, lam, allowed)
        projected = np.where(allowed, np.maximum(shifted - theta[:, None], 0.0), 0.0)
        loads = projected[:, :size].sum(axis=0)
        excess = np.max(loads - cap)
        idle = np.max(np.where(beta > 0.0, cap - loads, 0.0))
        if excess <= tol * scale and idle <= tol * scale:
            return projected, beta, sweep
        reduced = values[:, :size] - theta[:, None]
        positive = np.where(fog_allowed, np.maximum(reduced, 0.0), 0.0).sum(axis=0)
        tau = simplex_threshold(reduced.T, cap, fog_allowed.T)
        beta = np.where(positive > cap, np.maximum(tau, 0.0), 0.0)
    logger.warning("projection stopped after %d sweeps (excess %.3g, idle %.3g)",
                   max_sweeps, excess, idle)
    return projected, beta, max_sweeps


def project_feasible(a, s):
    """ Nearest feasible allocation in the Euclidean norm.

        Rows are balanced to the arrival rates, columns kept within capacity
        and entries outside the cooperation graph set to zero. Feasible input
        comes back unchanged up to rounding.
    """
    projected, _, sweeps = _project(a.as_matrix(), s.allowed(), s.arrival_rates(),
                                    s.capacities())
    logger.debug("projection converged in %d sweeps", sweeps)
    return Allocation.from_matrix(projected)


def _lower_bound(matrix, f, grad, prices, lam, cap, allowed):
    size = len(lam)
    reduced = grad.copy()
    reduced[:, :size] += prices[None, :]
    reduced = np.where(allowed, reduced, np.inf)
    return (f - float(np.vdot(grad, matrix)) + float(lam @ reduced.min(axis=1))
            - float(prices @ cap))


def optimality_gap_bound(a, s, col_prices):
    """ Upper bound on coop_objective(a) minus the optimum, in seconds.

        Weak duality for the linearization at `a`: any nonnegative price per
        fog column gives a valid bound; prices close to the true capacity
        multipliers give a tight one. `a` must be feasible.
    """
    prices = np.maximum(np.asarray(col_prices, dtype=float), 0.0)
    f = coop_objective(a, s)
    lower = _lower_bound(a.as_matrix(), f, coop_gradient(a, s), prices,
                         s.arrival_rates(), s.capacities(), s.allowed())
    return max(f - lower, 0.0)


def solve_centralized(s, tol=1e-8, max_iters=100000, stall_tol=1e-13, patience=50,
                      stall_gap=1e-4, timing=False):
    """ Global optimum of the cooperative problem by projected gradient.

        Parameters:
         - s - Scenario
         - tol - relative optimality gap, certified by a Lagrangian bound
         - max_iters - iteration budget
         - stall_tol - relative objective decrease that counts as no progress
         - patience - iterations without progress before the stall rule applies
         - stall_gap - relative certified gap accepted once the objective stalls
         - timing - record wall time in the trace

        Stops once the certified gap is below tol. The optimum is usually a
        face rather than a point (peers in one column are interchangeable
        when inter-node RTTs match), so the iterate can keep sliding along
        it with a flat objective; after `patience` such iterations a gap
        below stall_gap is accepted instead.

        Returns (Allocation, SolveTrace). Raises ConvergenceError, carrying
        the trace, when the budget runs out.
    """
    lam = s.arrival_rates()
    cap = s.capacities()
    allowed = s.allowed()
    size = s.size

    def objective(matrix):
        return coop_objective(Allocation.from_matrix(matrix), s)

    def gradient(matrix):
        return coop_gradient(Allocation.from_matrix(matrix), s)

    # everything to the cloud is always feasible
    current = np.zeros((size, size + 1))
    current[:, size] = lam
    f = objective(current)
    grad = gradient(current)
    step = float(np.mean(lam)) / max(float(np.max(np.abs(grad))), 1e-300)
    prices = np.zeros(size)
    trace = SolveTrace("central", units=TRACE_UNITS, timing=timing)
    stalled = 0

    for it in range(1, max_iters + 1):
        step *= 2.0
        for _ in range(200):
            candidate, beta, _ = _project(current - step * grad, allowed, lam, cap,
                                          beta=prices * step)
            delta = candidate - current
            f_new = objective(candidate)
            bound = (f + float(np.vdot(grad, delta))
                     + float(np.vdot(delta, delta)) / (2.0 * step)
                     + 1e-15 * abs(f))
            if f_new <= bound:
                break
            step *= 0.5
        else:
            raise ConvergenceError("line search failed", trace=trace, iterations=it)

        prices = beta / step
        gap = f - _lower_bound(current, f, grad, prices, lam, cap, allowed)
        moved = float(np.max(np.abs(delta)))
        trace.record(it, f_new, moved, max(gap, 0.0), float(np.linalg.norm(prices)))
        logger.debug("central it=%d f=%.12g gap=%.3g step=%.3g", it, f_new, gap, moved)

        previous = f
        current, f = candidate, f_new
        grad = gradient(current)
        stalled = stalled + 1 if previous - f <= stall_tol * abs(previous) else 0
        gap_limit = tol if stalled < patience else max(tol, stall_gap)
        if gap <= gap_limit * abs(previous):
            trace.converged_at = it
            logger.info("central solver converged in %d iterations, objective %.9g", it, f)
            return Allocation.from_matrix(current), trace

    logger.error("central solver did not converge in %d iterations", max_iters)
    raise ConvergenceError("central solver did not converge", trace=trace,
                           iterations=max_iters)


def no_cooperation_baseline(s):
    """ Each node alone at its single-node optimum.

        Returns (Allocation, total response time), the total summing each
        node's own partial-offload response time.
    """
    solutions = [optimal_alpha_numeric(n, s.cloud_rtt) for n in s.nodes]
    alloc = no_cooperation(s, [sol.alpha_star for sol in solutions])
    return alloc, float(sum(sol.response_time for sol in solutions))


def arrival_sweep(s, scales, **solver_kwargs):
    """ Average processed workload per node as every arrival rate is scaled.

        Returns one dict per scale with keys scale, mean_processed,
        no_coop_mean_processed and objective.
    """
    rows = []
    base = s.arrival_rates()
    for scale in scales:
        scaled = s.with_arrival_rates(base * float(scale))
        alloc, _ = solve_centralized(scaled, **solver_kwargs)
        baseline, _ = no_cooperation_baseline(scaled)
        rows.append({
            "scale": float(scale),
            "mean_processed": float(alloc.phi.sum()) / s.size,
            "no_coop_mean_processed": float(baseline.phi.sum()) / s.size,
            "objective": coop_objective(alloc, scaled),
        })
        logger.info("arrival sweep: scale %g processed %.3f per node",
                    scale, rows[-1]["mean_processed"])
    return rows


def _mean_power_efficiency(alloc, s):
    loads = alloc.column_loads()
    values = [power_efficiency(n.power, load) for n, load in zip(s.nodes, loads) if load > 0.0]
    return float(np.mean(values)) if values else None


def efficiency_sweep(s, scales, **solver_kwargs):
    """ Response time against power efficiency, with and without cooperation.

        For each scale every node's efficiency cap is moved to
        pue * dynamic + scale * (cap - pue * dynamic), so any positive scale
        keeps the cap valid. Both the cooperative optimum and the
        no-cooperation baseline are solved and evaluated with
        coop_objective; mean_power_efficiency averages watts per unit over
        the nodes that process any workload.

        Returns one dict per scale with keys scale, mean_efficiency_cap,
        objective, no_coop_objective, mean_power_efficiency and
        no_coop_mean_power_efficiency.
    """
    floors = np.array([n.power.pue * n.power.dynamic_power_per_unit for n in s.nodes])
    caps = np.array([n.power.efficiency_cap for n in s.nodes])
    rows = []
    for scale in scales:
        scale = float(scale)
        if not scale > 0.0:
            raise InvalidParameterError("scale", scale, "cap scales must be positive")
        scaled = s.with_efficiency_caps(floors + scale * (caps - floors))
        alloc, _ = solve_centralized(scaled, **solver_kwargs)
        baseline, _ = no_cooperation_baseline(scaled)
        rows.append({
            "scale": scale,
            "mean_efficiency_cap": float(np.mean(floors + scale * (caps - floors))),
            "objective": coop_objective(alloc, scaled),
            "no_coop_objective": coop_objective(baseline, scaled),
            "mean_power_efficiency": _mean_power_efficiency(alloc, scaled),
            "no_coop_mean_power_efficiency": _mean_power_efficiency(baseline, scaled),
        })
        logger.info("efficiency sweep: scale %g objective %.6g (no cooperation %.6g)",
                    scale, rows[-1]["objective"], rows[-1]["no_coop_objective"])
    return rows
