# -*- coding: utf-8 -*-

""" Single fog node: how much of its own workload should it keep? """

__all__ = [
    "Binding",
    "SingleSolution",
    "TradeoffPoint",
    "golden_section",
    "optimal_alpha_numeric",
    "max_efficiency_alpha",
    "closed_form_branch",
    "closed_form_alpha",
    "closed_form_audit",
    "tradeoff_curve",
]

import collections
import dataclasses
import enum
import logging
import math
import warnings

from fogopt.exceptions import DomainError, FogOptException, UndefinedBranchError
from fogopt.model import EPS_STAB, power_efficiency, capacity_chi, response_partial

logger = logging.getLogger(__name__)

CONSTRAINTS = ("capacity", "efficiency")

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class Binding(enum.Enum):
    INTERIOR = "interior"
    EFFICIENCY_CAP = "efficiency_cap"
    ALL_LOCAL = "all_local"
    ALL_CLOUD = "all_cloud"
    STABILITY_CAP = "stability_cap"
    DEADLINE = "deadline"


@dataclasses.dataclass(frozen=True)
class SingleSolution(object):
    alpha_star: float
    response_time: float
    efficiency_at_opt: object
    binding: Binding

    def to_dict(self):
        return {
            "alpha_star": self.alpha_star,
            "response_time": self.response_time,
            "efficiency_at_opt": self.efficiency_at_opt,
            "binding": self.binding.value,
        }


TradeoffPoint = collections.namedtuple(
    "TradeoffPoint", "eta_cap alpha_star response_time efficiency_at_opt binding warning")


def golden_section(f, lo, hi, tol=1e-9):
    """ Minimizer of a unimodal function on [lo, hi] to absolute tolerance `tol` """
    a, b = float(lo), float(hi)
    if b - a <= tol:
        return a
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _best_of(f, candidates):
    # first candidate wins ties, so endpoints listed first come out exact
    best, best_val = None, math.inf
    for alpha in candidates:
        val = f(alpha)
        if val < best_val:
            best, best_val = alpha, val
    return best, best_val


def _stability_fraction(n):
    return (1.0 - EPS_STAB) * n.service_rate / n.arrival_rate


def _upper_binding(n, upper):
    if upper == 1.0:
        return Binding.ALL_LOCAL
    if upper == capacity_chi(n.power) / n.arrival_rate:
        return Binding.EFFICIENCY_CAP
    return Binding.STABILITY_CAP


def _solution(n, alpha, value, binding):
    eff = None
    if alpha > 0.0:
        eff = power_efficiency(n.power, alpha * n.arrival_rate)
    return SingleSolution(alpha, value, eff, binding)


def optimal_alpha_numeric(n, cloud_rtt, constraint="capacity", tol=1e-9):
    """ Minimizes the partial-offload response time of one node.

        Parameters:
         - n - NodeParams
         - cloud_rtt - fog to cloud round trip time (seconds)
         - constraint - 'capacity' keeps the processed load at or below chi;
           'efficiency' requires power efficiency at or below the cap, that
           is a processed load of at least chi, or nothing at all
         - tol - absolute tolerance on alpha
    """
    if constraint not in CONSTRAINTS:
        raise DomainError("unknown constraint {0!r}, expected one of {1}".format(
            constraint, CONSTRAINTS))

    def objective(alpha):
        return response_partial(n, alpha, cloud_rtt)

    chi_frac = capacity_chi(n.power) / n.arrival_rate
    stab = _stability_fraction(n)
    if constraint == "capacity":
        upper = min(1.0, chi_frac, stab)
        alpha = golden_section(objective, 0.0, upper, tol)
        alpha, value = _best_of(objective, (0.0, upper, alpha))
        if alpha == 0.0:
            binding = Binding.ALL_CLOUD
        elif alpha == upper:
            binding = _upper_binding(n, upper)
        else:
            binding = Binding.INTERIOR
    else:
        lower, upper = chi_frac, min(1.0, stab)
        if lower > upper:
            logger.debug("node %s cannot reach its efficiency cap locally", n.id)
            alpha, value = 0.0, objective(0.0)
            binding = Binding.ALL_CLOUD
        else:
            alpha = golden_section(objective, lower, upper, tol)
            alpha, value = _best_of(objective, (0.0, lower, upper, alpha))
            if alpha == 0.0:
                binding = Binding.ALL_CLOUD
            elif alpha == lower:
                binding = Binding.EFFICIENCY_CAP
            elif alpha == upper:
                binding = Binding.ALL_LOCAL if upper == 1.0 else Binding.STABILITY_CAP
            else:
                binding = Binding.INTERIOR
    logger.debug("node %s: alpha*=%.9f response=%.6f (%s)", n.id, alpha, value, binding.value)
    return _solution(n, alpha, value, binding)


def max_efficiency_alpha(n, cloud_rtt, deadline, tol=1e-9):
    """ Largest local fraction whose response time still meets `deadline`.

        Since power efficiency improves with load, this is the most power
        efficient operating point a user-facing deadline allows.
    """
    best = optimal_alpha_numeric(n, cloud_rtt, tol=tol)
    if best.response_time > deadline:
        msg = "node {0}: best response {1:.6f}s exceeds the deadline {2:g}s".format(
            n.id, best.response_time, deadline)
        logger.warning(msg)
        warnings.warn(msg, RuntimeWarning)
        return _solution(n, 0.0, response_partial(n, 0.0, cloud_rtt), Binding.ALL_CLOUD)

    upper = min(1.0, capacity_chi(n.power) / n.arrival_rate, _stability_fraction(n))
    top = response_partial(n, upper, cloud_rtt)
    if top <= deadline:
        return _solution(n, upper, top, _upper_binding(n, upper))

    # response time is increasing on [alpha*, upper]
    lo, hi = best.alpha_star, upper
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if response_partial(n, mid, cloud_rtt) <= deadline:
            lo = mid
        else:
            hi = mid
    return _solution(n, lo, response_partial(n, lo, cloud_rtt), Binding.DEADLINE)


def closed_form_branch(n, cloud_rtt):
    """ Which of the three closed-form cases applies to `n` (1, 2 or 3) """
    lam, mu = n.arrival_rate, n.service_rate
    chi = capacity_chi(n.power)
    if mu < lam / (cloud_rtt + 1.0):
        return 1
    denom = 2.0 * chi - lam * (1.0 - cloud_rtt)
    if denom == 0.0:
        raise UndefinedBranchError(node=n.id, branch=2)
    # a negative denominator makes the threshold negative, so mu > 0 clears it
    if denom < 0.0 or mu >= chi / denom:
        return 2
    return 3


def closed_form_alpha(n, cloud_rtt):
    """ Piecewise closed form for the local fraction.

        Each branch is evaluated exactly as stated, for cross-checking;
        optimal_alpha_numeric is the authoritative answer. The result is
        clamped to [0, 1].
    """
    lam, mu = n.arrival_rate, n.service_rate
    branch = closed_form_branch(n, cloud_rtt)
    if branch == 1:
        alpha = 1.0
    elif branch == 2:
        alpha = capacity_chi(n.power) / lam
    else:
        radicand = 1.0 - (lam / mu) * (1.0 - cloud_rtt)
        if radicand < 0.0:
            raise UndefinedBranchError(radicand, node=n.id)
        alpha = mu / lam - (mu / lam) * math.sqrt(radicand)
    return min(1.0, max(0.0, alpha))


def closed_form_audit(nodes, cloud_rtt):
    """ Compares the closed form against the numeric optimum for each node.

        Returns one dict per node with keys id, branch, closed_form,
        numeric, abs_discrepancy and error. Failures are recorded in `error`
        rather than raised.
    """
    rows = []
    for n in nodes:
        row = {"id": n.id, "branch": None, "closed_form": None, "numeric": None,
               "abs_discrepancy": None, "error": None}
        row["numeric"] = optimal_alpha_numeric(n, cloud_rtt).alpha_star
        try:
            row["branch"] = closed_form_branch(n, cloud_rtt)
            row["closed_form"] = closed_form_alpha(n, cloud_rtt)
        except FogOptException as err:
            row["error"] = str(err)
        else:
            row["abs_discrepancy"] = abs(row["closed_form"] - row["numeric"])
        rows.append(row)
    flagged = sum(1 for r in rows if r["error"] or r["abs_discrepancy"] > 1e-4)
    logger.info("closed form audit: %d of %d nodes disagree with the numeric optimum",
                flagged, len(rows))
    return rows


def tradeoff_curve(n, cloud_rtt, eta_grid):
    """ Optimal response time as the efficiency cap varies.

        Each grid value overrides the node's cap and is solved with the
        'efficiency' reading of the constraint, so a looser cap never hurts.
        Grid values at or below pue * dynamic power are returned as points
        carrying a `warning` and no solution.
    """
    floor = n.power.pue * n.power.dynamic_power_per_unit
    points = []
    for eta in eta_grid:
        eta = float(eta)
        if eta <= floor:
            msg = "efficiency cap {0:g} <= pue * dynamic power {1:g}; skipped".format(
                eta, floor)
            logger.warning(msg)
            warnings.warn(msg, RuntimeWarning)
            points.append(TradeoffPoint(eta, None, None, None, None, msg))
            continue
        sol = optimal_alpha_numeric(n.with_efficiency_cap(eta), cloud_rtt,
                                    constraint="efficiency")
        points.append(TradeoffPoint(eta, sol.alpha_star, sol.response_time,
                                    sol.efficiency_at_opt, sol.binding, None))
    return points
