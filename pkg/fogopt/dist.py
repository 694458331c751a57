# -*- coding: utf-8 -*-

""" Distributed solvers: fog node agents and a workload forwarding coordinator

    Two algorithms run over the same message protocol:

    * subgradient: the coordinator prices every node's row balance, agents
      answer with the service column that is cheapest at those prices, and
      the prices move against the row residuals.
    * admm: the allocation is split into an agent copy (capacities) and a
      coordinator copy (row balance) tied together by a quadratic penalty.

    Agents never send their service rate, capacity or power model; the
    coordinator only ever sees service columns, cloud entries and arrival
    rates.
"""

__all__ = [
    "Algorithm",
    "DualState",
    "LocalView",
    "local_view",
    "step_sizes",
    "lagrangian",
    "node_lagrangian",
    "node_subproblem_subgradient",
    "dual_update_subgradient",
    "node_subproblem_admm",
    "node_cloud_admm",
    "wfc_psi_update",
    "FogNodeAgent",
    "Coordinator",
    "run_protocol",
    "run_subgradient",
    "run_admm_vs",
    "run_admm_central",
]

import dataclasses
import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from fogopt.central import project_feasible
from fogopt.exceptions import (ConvergenceError, DomainError, InstabilityError,
                               InvalidParameterError, TransportError)
from fogopt.model import Allocation, coop_objective
from fogopt.trace import SolveTrace
from fogopt.transport import COORDINATOR, MemoryTransport, Message, MessageKind
from fogopt.util import project_rows_simplex

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = {"subgradient": 500, "admm": 200}

TRACE_UNITS = {
    "objective": "seconds",
    "primal_residual": "mean arrival rates",
    "dual_residual": "normalized",
    "dual_norm": "normalized",
}


class Algorithm(enum.Enum):
    SUBGRADIENT = "subgradient"
    ADMM = "admm"


def _frozen(value):
    if value is None:
        return None
    arr = np.array(value, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class DualState(object):
    """ Multipliers held by the coordinator.

        lambda_mult is one multiplier per row balance (subgradient, in
        seconds per workload-unit/s); admm_dual and psi are N x (N+1)
        matrices (ADMM, scaled form). flow_unit and cost_unit rescale the
        subgradient step so that step_base is dimensionless.
    """
    lambda_mult: object = None
    admm_dual: object = None
    psi: object = None
    rho: float = 1.0
    step_base: float = 1.0
    flow_unit: float = 1.0
    cost_unit: float = 1.0

    def __post_init__(self):
        for name in ("rho", "step_base", "flow_unit", "cost_unit"):
            value = float(getattr(self, name))
            if not value > 0.0:
                raise InvalidParameterError(name, value, "{0} must be positive".format(name))
            object.__setattr__(self, name, value)
        for name in ("lambda_mult", "admm_dual", "psi"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def normalized_multipliers(self):
        return self.lambda_mult * self.flow_unit / self.cost_unit


@dataclasses.dataclass(frozen=True, eq=False)
class LocalView(object):
    """ What fog node `index` knows: its own parameters and inbound RTTs,
        plus the arrival rates the coordinator broadcasts.
    """
    index: int
    node_id: object
    service_rate: float
    capacity: float
    user_rtt: float
    cloud_rtt: float
    arrival_rate: float
    inbound_rtt: object
    inbound_mask: object
    arrival_rates: object = None

    @property
    def total_arrival(self):
        return float(np.sum(self.arrival_rates))

    def with_broadcast(self, arrival_rates):
        return dataclasses.replace(self, arrival_rates=np.asarray(arrival_rates, dtype=float))

    def upper_bounds(self):
        return np.where(self.inbound_mask, self.arrival_rates, 0.0)


def local_view(s, i, broadcast=True):
    n = s.nodes[i]
    view = LocalView(i, n.id, n.service_rate, n.capacity, n.user_rtt, s.cloud_rtt,
                     n.arrival_rate, np.array(s.inter_rtt[:, i]), np.array(s.coop_mask[:, i]))
    if broadcast:
        view = view.with_broadcast(s.arrival_rates())
    return view


def step_sizes(step_base, count):
    """ The diminishing steps step_base / sqrt(t) for t = 1..count """
    return step_base / np.sqrt(np.arange(1, count + 1, dtype=float))


def _queue_marginal(load, mu):
    return mu / (mu - load) ** 2


def lagrangian(a, s, duals):
    """ Objective with the row balances relaxed by duals.lambda_mult """
    residual = a.row_totals() - s.arrival_rates()
    return coop_objective(a, s) - float(np.dot(duals.lambda_mult, residual))


def node_lagrangian(i, a, s, duals):
    """ The part of lagrangian() that only depends on node i's service
        column and its own cloud entry. Summing over i gives lagrangian().
    """
    mult = np.asarray(duals.lambda_mult)
    n = s.nodes[i]
    column = a.phi[:, i]
    load = column.sum()
    if load >= n.service_rate:
        raise InstabilityError(n.id, load, n.service_rate)
    total = s.total_arrival()
    service = (float(np.dot(column, s.inter_rtt[:, i])) + load / (n.service_rate - load)) / total
    cloud = a.phi_cloud[i] * (s.cloud_rtt / n.arrival_rate - mult[i])
    return (n.user_rtt + service - float(np.dot(mult, column)) + cloud
            + mult[i] * n.arrival_rate)


def _fill_cheapest(coeff, upper, mu, cap, total):
    """ Minimizes sum(coeff * x) + g(sum(x)) / total over the box with
        sum(x) <= cap, where g(L) = L / (mu - L). Entries are filled in
        increasing coefficient order; the load stops where the marginal
        queueing cost meets the next coefficient.
    """
    order = np.lexsort((np.arange(len(coeff)), coeff))
    limit = min(cap, float(upper.sum()))
    load = 0.0
    for k in order:
        if upper[k] <= 0.0:
            continue
        if load >= limit:
            break
        slope = coeff[k]
        if _queue_marginal(load, mu) / total + slope >= 0.0:
            break
        end = min(load + upper[k], limit)
        if _queue_marginal(end, mu) / total + slope <= 0.0:
            load = end
            continue
        root = mu - math.sqrt(mu / (-slope * total))
        load = min(max(root, load), end)
        break
    column = np.zeros(len(coeff))
    remaining = load
    for k in order:
        if remaining <= 0.0:
            break
        take = min(upper[k], remaining)
        column[k] = take
        remaining -= take
    return column


def node_subproblem_subgradient(i, duals, local):
    """ Node i's best response to the broadcast multipliers.

        Returns (service column, cloud amount). The service column minimizes
        the node's queueing and forwarding cost minus the multiplier value of
        the workload it accepts; the cloud amount is all or nothing of the
        node's own arrival rate depending on whether its multiplier exceeds
        the cloud's marginal cost.
    """
    mult = np.asarray(duals.lambda_mult, dtype=float)
    total = local.total_arrival
    coeff = local.inbound_rtt / total - mult
    column = _fill_cheapest(coeff, local.upper_bounds(), local.service_rate,
                            local.capacity, total)
    if mult[i] > local.cloud_rtt / local.arrival_rate:
        cloud = local.arrival_rate
    else:
        cloud = 0.0
    if not np.all(np.isfinite(column)):
        raise ConvergenceError("service column is not finite", node=local.node_id)
    return column, cloud


def dual_update_subgradient(duals, row_residuals, t):
    """ One diminishing-step move of the row multipliers.

        row_residuals are sum_k phi_jk + phi_jc - lambda_j; multipliers of
        over-supplied rows go down. The step is step_base / sqrt(t), applied
        in units where flow_unit and cost_unit are 1.
    """
    if t < 1:
        raise DomainError("iteration index must be >= 1, got {0!r}".format(t))
    step = duals.step_base / math.sqrt(t)
    scale = duals.cost_unit / duals.flow_unit ** 2
    updated = duals.lambda_mult - step * scale * np.asarray(row_residuals, dtype=float)
    return dataclasses.replace(duals, lambda_mult=updated)


def node_subproblem_admm(i, psi_i, dual_i, rho, local, tol=1e-14):
    """ Node i's penalized update of its service column.

        Minimizes the node's service cost plus rho/2 * ||x - psi_i + dual_i||^2
        over its capacity set. With rho = 0 this is the unpenalized problem.
    """
    if rho < 0.0:
        raise DomainError("rho must be >= 0, got {0!r}".format(rho))
    if rho == 0.0:
        free = DualState(lambda_mult=np.zeros(len(local.inbound_rtt)))
        return node_subproblem_subgradient(i, free, local)[0]

    total = local.total_arrival
    target = np.asarray(psi_i, dtype=float) - np.asarray(dual_i, dtype=float)
    upper = local.upper_bounds()
    linear = local.inbound_rtt / total
    mu, cap = local.service_rate, local.capacity

    def column_at(price):
        return np.where(local.inbound_mask,
                        np.clip(target - (linear + price) / rho, 0.0, upper), 0.0)

    def surplus(load):
        return column_at(_queue_marginal(load, mu) / total).sum() - load

    limit = min(cap, float(upper.sum()))
    extra = 0.0
    if surplus(limit) >= 0.0:
        load = limit
        base = _queue_marginal(limit, mu) / total
        if column_at(base).sum() > limit:
            # capacity binds: raise the price until the column fits
            lo, hi = 0.0, rho * max(float(np.max(target)), 0.0) + 1.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if column_at(base + mid).sum() > limit:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= tol * max(1.0, hi):
                    break
            extra = hi
    else:
        lo, hi = 0.0, limit
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if surplus(mid) >= 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol * max(1.0, limit):
                break
        load = 0.5 * (lo + hi)
    column = column_at(_queue_marginal(load, mu) / total + extra)
    if not np.all(np.isfinite(column)):
        raise ConvergenceError("service column is not finite", node=local.node_id)
    return column


def node_cloud_admm(psi_c, dual_c, rho, local):
    """ Penalized update of node's own cloud entry """
    if rho == 0.0:
        return 0.0
    value = psi_c - dual_c - local.cloud_rtt / (local.arrival_rate * rho)
    return float(min(max(value, 0.0), local.arrival_rate))


def wfc_psi_update(phi, dual, s):
    """ Coordinator copy: rows of phi + dual projected onto the row balance.

        Entries outside the cooperation graph are kept at zero.
    """
    values = np.asarray(phi, dtype=float) + np.asarray(dual, dtype=float)
    return project_rows_simplex(values, s.arrival_rates(), s.allowed())


class FogNodeAgent(object):
    """ One fog node taking part in the protocol """

    def __init__(self, view, transport):
        self.view = view
        self.transport = transport
        self.address = view.index
        self.active = True

    def _send(self, kind, payload, iteration):
        self.transport.send(Message(self.address, COORDINATOR, kind, payload, iteration))

    def announce(self):
        self._send(MessageKind.ARRIVAL_RATE, {"arrival_rate": self.view.arrival_rate}, 0)

    def receive_setup(self):
        msg = self.transport.receive(self.address)
        if msg.kind is not MessageKind.ARRIVAL_RATE:
            raise TransportError("agent {0} expected arrival rates, got {1}".format(
                self.address, msg.kind.value))
        self.view = self.view.with_broadcast(msg.payload["arrival_rates"])

    def step(self):
        """ Handles one coordinator message. Returns False once terminated. """
        msg = self.transport.receive(self.address)
        payload = msg.payload
        if msg.kind is MessageKind.TERMINATE:
            self.active = False
            return False
        if msg.kind is MessageKind.DUAL_BROADCAST:
            duals = DualState(lambda_mult=payload["duals"])
            column, cloud = node_subproblem_subgradient(self.address, duals, self.view)
        elif msg.kind is MessageKind.PSI_SLICE:
            column = node_subproblem_admm(self.address, payload["psi"], payload["dual"],
                                          payload["rho"], self.view)
            cloud = node_cloud_admm(payload["psi_cloud"], payload["dual_cloud"],
                                    payload["rho"], self.view)
        else:
            raise TransportError("agent {0} cannot handle {1}".format(
                self.address, msg.kind.value))
        self._send(MessageKind.SERVICE_VECTOR, {"service": column, "cloud": cloud},
                   msg.iteration)
        return True


class Coordinator(object):
    """ The workload forwarding coordinator.

        It learns arrival rates from the agents and keeps the multipliers
        (subgradient) or the row-balanced copy psi and scaled duals (ADMM).
        The cooperation graph and the cost unit are public.
    """

    # penalty balancing: every RHO_PERIOD rounds rho moves by RHO_FACTOR when one
    # residual exceeds the other by RHO_BALANCE
    RHO_PERIOD = 10
    RHO_BALANCE = 10.0
    RHO_FACTOR = 2.0
    RHO_LIMITS = (1e-4, 1e4)

    def __init__(self, transport, size, coop_mask, algorithm, cost_unit,
                 step_base=1.0, rho=1.0, auto_rho=True):
        self.transport = transport
        self.size = size
        self.allowed = np.hstack([np.asarray(coop_mask, dtype=bool),
                                  np.ones((size, 1), dtype=bool)])
        self.algorithm = Algorithm(algorithm)
        self.cost_unit = float(cost_unit)
        self.step_base = step_base
        self.rho = rho
        self.auto_rho = auto_rho
        self.arrival_rates = None
        self.duals = None
        self.psi = None
        self.admm_dual = None

    @property
    def flow_unit(self):
        return float(np.mean(self.arrival_rates))

    @property
    def rho_effective(self):
        """ rho in seconds per (workload-unit/s)^2 """
        return self.rho * self.cost_unit / self.flow_unit ** 2

    def _broadcast(self, kind, payloads, iteration):
        for i in range(self.size):
            self.transport.send(Message(COORDINATOR, i, kind, payloads(i), iteration))

    def _gather(self, kind, iteration):
        messages = {}
        for _ in range(self.size):
            msg = self.transport.receive(COORDINATOR)
            if msg.kind is not kind or msg.iteration != iteration:
                raise TransportError("coordinator expected {0} for iteration {1}, got {2} "
                                     "for iteration {3}".format(kind.value, iteration,
                                                                msg.kind.value, msg.iteration))
            messages[msg.sender] = msg
        if sorted(messages) != list(range(self.size)):
            raise TransportError("coordinator heard from {0}".format(sorted(messages)))
        return messages

    def collect_arrivals(self):
        messages = self._gather(MessageKind.ARRIVAL_RATE, 0)
        self.start([messages[i].payload["arrival_rate"] for i in range(self.size)])

    def start(self, arrival_rates):
        """ Initial multipliers, or psi with everything in the cloud """
        self.arrival_rates = np.array(arrival_rates, dtype=float)
        if self.algorithm is Algorithm.SUBGRADIENT:
            self.duals = DualState(lambda_mult=np.zeros(self.size), step_base=self.step_base,
                                   flow_unit=self.flow_unit, cost_unit=self.cost_unit)
        else:
            psi = np.zeros((self.size, self.size + 1))
            psi[:, -1] = self.arrival_rates
            self.psi = psi
            self.admm_dual = np.zeros_like(psi)

    def broadcast_arrivals(self):
        rates = self.arrival_rates.copy()
        self._broadcast(MessageKind.ARRIVAL_RATE,
                        lambda i: {"arrival_rates": rates, "total_arrival": float(rates.sum())}, 0)

    def send_round(self, t):
        if self.algorithm is Algorithm.SUBGRADIENT:
            duals = np.array(self.duals.lambda_mult)
            self._broadcast(MessageKind.DUAL_BROADCAST, lambda i: {"duals": duals}, t)
        else:
            psi, dual, rho = self.psi, self.admm_dual, self.rho_effective
            self._broadcast(MessageKind.PSI_SLICE, lambda i: {
                "psi": psi[:, i].copy(), "dual": dual[:, i].copy(),
                "psi_cloud": float(psi[i, -1]), "dual_cloud": float(dual[i, -1]),
                "rho": rho}, t)

    def collect(self, t):
        """ Assembles the agents' answers into an N x (N+1) matrix by sender index """
        messages = self._gather(MessageKind.SERVICE_VECTOR, t)
        phi = np.zeros((self.size, self.size + 1))
        for i in range(self.size):
            phi[:, i] = messages[i].payload["service"]
            phi[i, -1] = messages[i].payload["cloud"]
        return phi

    def update(self, t, phi):
        """ Coordinator step. Returns (primal, dual) residuals and the dual norm. """
        unit = self.flow_unit
        if self.algorithm is Algorithm.SUBGRADIENT:
            residual = phi.sum(axis=1) - self.arrival_rates
            before = self.duals.normalized_multipliers()
            self.duals = dual_update_subgradient(self.duals, residual, t)
            after = self.duals.normalized_multipliers()
            return (float(np.linalg.norm(residual)) / unit,
                    float(np.linalg.norm(after - before)),
                    float(np.linalg.norm(after)))
        psi = project_rows_simplex(phi + self.admm_dual, self.arrival_rates, self.allowed)
        self.admm_dual = self.admm_dual + phi - psi
        primal = float(np.linalg.norm(phi - psi)) / unit
        dual = self.rho * float(np.linalg.norm(psi - self.psi)) / unit
        self.psi = psi
        if self.auto_rho and t % self.RHO_PERIOD == 0:
            self.balance_rho(primal, dual)
        return primal, dual, float(np.linalg.norm(self.admm_dual)) / unit

    def balance_rho(self, primal, dual):
        """ Residual balancing of the penalty. The scaled duals are rescaled so
            the unscaled multipliers stay put.
        """
        factor = 1.0
        if primal > self.RHO_BALANCE * dual:
            factor = self.RHO_FACTOR
        elif dual > self.RHO_BALANCE * primal:
            factor = 1.0 / self.RHO_FACTOR
        low, high = self.RHO_LIMITS
        rho = min(max(self.rho * factor, low), high)
        if rho != self.rho:
            self.admm_dual = self.admm_dual * (self.rho / rho)
            logger.debug("admm penalty %.4g -> %.4g (primal %.3g, dual %.3g)",
                         self.rho, rho, primal, dual)
            self.rho = rho
        return self.rho

    def terminate(self, t):
        self._broadcast(MessageKind.TERMINATE, lambda i: {}, t)


def _for_each(pool, order, func):
    if pool is None:
        for i in order:
            func(i)
    else:
        list(pool.map(func, order))


def _cost_unit(s):
    return s.cloud_rtt if s.cloud_rtt > 0.0 else s.deadline


def run_protocol(transport, s, algo, agent_order=None, concurrent=False,
                 oracle_value=None, gap_tol=None, max_iters=None, step_base=1.0, rho=1.0,
                 eps_pri=1e-6, eps_dual=1e-6, auto_rho=True, timing=False):
    """ Runs one distributed solve with an agent per node plus the coordinator.

        Parameters:
         - transport - Transport carrying every message
         - s - Scenario; agents only see their own slice of it
         - algo - 'subgradient' or 'admm'
         - agent_order - permutation used to schedule agents within a round
         - concurrent - run agent steps on a thread pool
         - oracle_value, gap_tol - stop once the relative gap to
           oracle_value is within gap_tol
         - max_iters - iteration budget (500 for subgradient, 200 for admm)
         - step_base - subgradient step constant
         - rho - ADMM penalty, in normalized units
         - eps_pri, eps_dual - ADMM residual tolerances
         - auto_rho - rebalance the ADMM penalty against the residuals
         - timing - record wall time in the trace

        Every iteration the harness, which unlike the coordinator knows the
        capacities, projects the current iterate onto the feasible set and
        evaluates the objective. Returns (Allocation, SolveTrace).
    """
    algo = Algorithm(algo)
    if max_iters is None:
        max_iters = DEFAULT_MAX_ITERS[algo.value]
    if max_iters < 1:
        raise DomainError("max_iters must be >= 1, got {0!r}".format(max_iters))
    if (gap_tol is None) != (oracle_value is None):
        raise DomainError("gap_tol and oracle_value must be given together")
    size = s.size
    order = list(range(size)) if agent_order is None else [int(i) for i in agent_order]
    if sorted(order) != list(range(size)):
        raise DomainError("agent_order must be a permutation of 0..{0}".format(size - 1))

    agents = [FogNodeAgent(local_view(s, i, broadcast=False), transport) for i in range(size)]
    wfc = Coordinator(transport, size, s.coop_mask, algo, _cost_unit(s),
                      step_base=step_base, rho=rho, auto_rho=auto_rho)
    trace = SolveTrace(algo.value, units=TRACE_UNITS, timing=timing)
    pool = None
    if concurrent:
        pool = ThreadPoolExecutor(max_workers=size)

    def evaluate(matrix):
        alloc = project_feasible(Allocation.from_matrix(matrix), s)
        return alloc, coop_objective(alloc, s)

    best, best_value, final = None, math.inf, None
    prefix = [np.zeros((size, size + 1))]
    t = 0
    try:
        _for_each(pool, order, lambda i: agents[i].announce())
        wfc.collect_arrivals()
        wfc.broadcast_arrivals()
        _for_each(pool, order, lambda i: agents[i].receive_setup())

        for t in range(1, max_iters + 1):
            wfc.send_round(t)
            _for_each(pool, order, lambda i: agents[i].step())
            phi = wfc.collect(t)
            primal, dual, dual_norm = wfc.update(t, phi)

            if algo is Algorithm.SUBGRADIENT:
                prefix.append(prefix[-1] + phi)
                half = t // 2
                average = (prefix[t] - prefix[half]) / (t - half)
                candidates = [evaluate(phi), evaluate(average)]
            else:
                candidates = [evaluate(wfc.psi)]
            final, value = min(candidates, key=lambda c: c[1])
            if value < best_value:
                best, best_value = final, value
            trace.record(t, value, primal, dual, dual_norm)

            if oracle_value is not None:
                reached = best_value if algo is Algorithm.SUBGRADIENT else value
                gap = (reached - oracle_value) / abs(oracle_value)
                if gap <= gap_tol:
                    trace.converged_at = t
                    logger.info("%s reached gap %.3g at iteration %d", algo.value, gap, t)
                    break
            elif algo is Algorithm.ADMM and primal <= eps_pri and dual <= eps_dual:
                trace.converged_at = t
                logger.info("admm converged at iteration %d", t)
                break
        wfc.terminate(t)
        _for_each(pool, order, lambda i: agents[i].step())
    except TransportError as err:
        logger.error("transport failure during %s: %s", algo.value, err)
        raise TransportError(str(err), transcript=transport.transcript)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
        trace.transcript = transport.transcript

    if algo is Algorithm.SUBGRADIENT:
        trace.final_state = {"phi": phi, "duals": np.array(wfc.duals.lambda_mult)}
        if trace.converged_at is None and oracle_value is not None:
            logger.warning("subgradient stopped at %d iterations above gap %g", t, gap_tol)
        return best, trace

    trace.final_state = {"phi": phi, "psi": wfc.psi, "dual": wfc.admm_dual, "rho": wfc.rho}
    if trace.converged_at is None:
        logger.error("admm did not converge in %d iterations", max_iters)
        raise ConvergenceError("admm did not converge", trace=trace, iterations=max_iters)
    return final, trace


def run_subgradient(s, step_base=1.0, max_iters=500, gap_tol=None, oracle_value=None,
                    transport=None, timing=False):
    """ Dual decomposition by diminishing-step subgradient.

        The answer is the better of the projected current iterate and the
        projected average of the second half of the iterates.
    """
    if transport is None:
        transport = MemoryTransport()
    return run_protocol(transport, s, Algorithm.SUBGRADIENT, oracle_value=oracle_value,
                        gap_tol=gap_tol, max_iters=max_iters, step_base=step_base,
                        timing=timing)


def run_admm_vs(s, rho=1.0, eps_pri=1e-6, eps_dual=1e-6, max_iters=200, gap_tol=None,
                oracle_value=None, transport=None, auto_rho=True, timing=False):
    """ ADMM over the agent/coordinator split; returns the projected
        coordinator copy. rho is the starting penalty; with auto_rho it is
        rebalanced every few rounds when one residual dominates the other.
    """
    if transport is None:
        transport = MemoryTransport()
    return run_protocol(transport, s, Algorithm.ADMM, oracle_value=oracle_value,
                        gap_tol=gap_tol, max_iters=max_iters, rho=rho, eps_pri=eps_pri,
                        eps_dual=eps_dual, auto_rho=auto_rho, timing=timing)


def run_admm_central(s, rho=1.0, eps_pri=1e-6, eps_dual=1e-6, max_iters=200, gap_tol=None,
                     oracle_value=None, auto_rho=True, timing=False):
    """ ADMM run by a single controller that knows every node's parameters.

        Same splitting, penalty and stopping rules as run_admm_vs, but the
        service columns are computed in place instead of being requested
        from agents, so no messages are exchanged. It is the baseline the
        distributed version is measured against.

        Returns (Allocation, SolveTrace); raises ConvergenceError, carrying
        the trace, when max_iters runs out.
    """
    if max_iters < 1:
        raise DomainError("max_iters must be >= 1, got {0!r}".format(max_iters))
    if (gap_tol is None) != (oracle_value is None):
        raise DomainError("gap_tol and oracle_value must be given together")
    size = s.size
    views = [local_view(s, i) for i in range(size)]
    controller = Coordinator(None, size, s.coop_mask, Algorithm.ADMM, _cost_unit(s),
                             rho=rho, auto_rho=auto_rho)
    controller.start(s.arrival_rates())
    trace = SolveTrace("admm-central", units=TRACE_UNITS, timing=timing)

    alloc = None
    for t in range(1, max_iters + 1):
        psi, dual, penalty = controller.psi, controller.admm_dual, controller.rho_effective
        phi = np.zeros((size, size + 1))
        for i, view in enumerate(views):
            phi[:, i] = node_subproblem_admm(i, psi[:, i], dual[:, i], penalty, view)
            phi[i, -1] = node_cloud_admm(float(psi[i, -1]), float(dual[i, -1]), penalty, view)
        primal, dual_residual, dual_norm = controller.update(t, phi)
        alloc = project_feasible(Allocation.from_matrix(controller.psi), s)
        value = coop_objective(alloc, s)
        trace.record(t, value, primal, dual_residual, dual_norm)

        if oracle_value is not None:
            if (value - oracle_value) / abs(oracle_value) <= gap_tol:
                trace.converged_at = t
                break
        elif primal <= eps_pri and dual_residual <= eps_dual:
            trace.converged_at = t
            break

    trace.final_state = {"phi": phi, "psi": controller.psi, "dual": controller.admm_dual,
                         "rho": controller.rho}
    if trace.converged_at is None:
        logger.error("central admm did not converge in %d iterations", max_iters)
        raise ConvergenceError("central admm did not converge", trace=trace,
                               iterations=max_iters)
    logger.info("central admm converged at iteration %d", trace.converged_at)
    return alloc, trace
