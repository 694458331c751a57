# -*- coding: utf-8 -*-

""" Fog node domain types and the closed-form response-time model """

__all__ = [
    "EPS_STAB",
    "PowerParams",
    "NodeParams",
    "Scenario",
    "Allocation",
    "power_efficiency",
    "capacity_chi",
    "response_cloud_only",
    "response_local_all",
    "response_partial",
    "coop_response",
    "coop_objective",
    "coop_gradient",
    "no_cooperation",
]

import dataclasses
import logging
import math

import numpy as np

from fogopt.exceptions import DomainError, InstabilityError, InvalidParameterError

logger = logging.getLogger(__name__)

# Column loads are kept at or below (1 - EPS_STAB) * mu inside every solver.
EPS_STAB = 1e-3


def _frozen_array(value, dtype=float):
    arr = np.array(value, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(name, value)
    return value


@dataclasses.dataclass(frozen=True)
class PowerParams(object):
    """ Power model of a fog node.

        Parameters:
         - pue - power usage effectiveness, >= 1
         - static_power - idle power in watts, >= 0
         - dynamic_power_per_unit - watts per workload-unit/s, >= 0
         - efficiency_cap - maximum tolerated watts per workload-unit, must
           exceed pue * dynamic_power_per_unit

        The defaults describe a node whose cap only binds at 1e6 units/s.
    """
    pue: float = 1.0
    static_power: float = 1.0
    dynamic_power_per_unit: float = 0.0
    efficiency_cap: float = 1e-6

    def __post_init__(self):
        for field in dataclasses.fields(self):
            object.__setattr__(self, field.name,
                               _finite(field.name, getattr(self, field.name)))
        if self.pue < 1.0:
            raise InvalidParameterError("pue", self.pue, "pue must be >= 1")
        if self.static_power < 0.0:
            raise InvalidParameterError("static_power", self.static_power)
        if self.dynamic_power_per_unit < 0.0:
            raise InvalidParameterError("dynamic_power_per_unit",
                                        self.dynamic_power_per_unit)
        if self.efficiency_cap <= self.pue * self.dynamic_power_per_unit:
            raise InvalidParameterError(
                "efficiency_cap", self.efficiency_cap,
                "efficiency_cap must exceed pue * dynamic_power_per_unit ({0:g})".format(
                    self.pue * self.dynamic_power_per_unit))

    def with_efficiency_cap(self, efficiency_cap):
        return dataclasses.replace(self, efficiency_cap=efficiency_cap)


@dataclasses.dataclass(frozen=True)
class NodeParams(object):
    """ One fog node: arrival rate, service rate, user RTT and power model """
    id: object
    arrival_rate: float
    service_rate: float
    user_rtt: float = 0.0
    power: PowerParams = dataclasses.field(default_factory=PowerParams)

    def __post_init__(self):
        for name in ("arrival_rate", "service_rate", "user_rtt"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.arrival_rate <= 0.0:
            raise InvalidParameterError("arrival_rate", self.arrival_rate)
        if self.service_rate <= 0.0:
            raise InvalidParameterError("service_rate", self.service_rate)
        if self.user_rtt < 0.0:
            raise InvalidParameterError("user_rtt", self.user_rtt)
        if not isinstance(self.power, PowerParams):
            raise InvalidParameterError("power", self.power)

    @property
    def chi(self):
        return capacity_chi(self.power)

    @property
    def capacity(self):
        """ min(chi, (1 - EPS_STAB) * mu), the load the solvers may place here """
        return min(self.chi, (1.0 - EPS_STAB) * self.service_rate)

    def with_arrival_rate(self, arrival_rate):
        return dataclasses.replace(self, arrival_rate=arrival_rate)

    def with_efficiency_cap(self, efficiency_cap):
        return dataclasses.replace(
            self, power=self.power.with_efficiency_cap(efficiency_cap))


@dataclasses.dataclass(frozen=True, eq=False)
class Scenario(object):
    """ A set of cooperating fog nodes.

        `inter_rtt` may be given as a scalar, in which case every
        off-diagonal pair gets that round trip time. `coop_mask` defaults to
        full cooperation. `positions` (metres) and `coop_radius` are kept
        only as metadata for file export.
    """
    nodes: tuple
    inter_rtt: object
    cloud_rtt: float
    deadline: float
    coop_mask: object = None
    positions: object = None
    coop_radius: object = None

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if not nodes:
            raise InvalidParameterError("nodes", nodes, "a scenario needs at least one node")
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise InvalidParameterError("nodes", ids, "node ids must be unique")
        object.__setattr__(self, "nodes", nodes)
        size = len(nodes)

        if np.ndim(self.inter_rtt) == 0:
            rtt = np.full((size, size), float(self.inter_rtt))
            np.fill_diagonal(rtt, 0.0)
        else:
            rtt = np.array(self.inter_rtt, dtype=float)
        if rtt.shape != (size, size):
            raise InvalidParameterError("inter_rtt", rtt.shape)
        if (not np.all(np.isfinite(rtt)) or np.any(rtt < 0.0)
                or np.any(np.diag(rtt) != 0.0) or not np.allclose(rtt, rtt.T, atol=1e-12)):
            raise InvalidParameterError(
                "inter_rtt", rtt,
                "inter_rtt must be symmetric, nonnegative, with a zero diagonal")
        object.__setattr__(self, "inter_rtt", _frozen_array(rtt))

        if self.coop_mask is None:
            mask = np.ones((size, size), dtype=bool)
        else:
            mask = np.array(self.coop_mask, dtype=bool)
        if mask.shape != (size, size) or not np.all(np.diag(mask)):
            raise InvalidParameterError(
                "coop_mask", mask, "coop_mask must be N x N with a true diagonal")
        object.__setattr__(self, "coop_mask", _frozen_array(mask, dtype=bool))

        cloud_rtt = _finite("cloud_rtt", self.cloud_rtt)
        if cloud_rtt < 0.0:
            raise InvalidParameterError("cloud_rtt", cloud_rtt)
        object.__setattr__(self, "cloud_rtt", cloud_rtt)
        deadline = _finite("deadline", self.deadline)
        if deadline <= 0.0:
            raise InvalidParameterError("deadline", deadline)
        object.__setattr__(self, "deadline", deadline)

        if self.positions is not None:
            pos = np.array(self.positions, dtype=float)
            if pos.shape != (size, 2) or not np.all(np.isfinite(pos)):
                raise InvalidParameterError("positions", pos)
            object.__setattr__(self, "positions", _frozen_array(pos))
        if self.coop_radius is not None:
            object.__setattr__(self, "coop_radius", _finite("coop_radius", self.coop_radius))

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        if (self.positions is None) != (other.positions is None):
            return False
        return (self.nodes == other.nodes
                and np.array_equal(self.inter_rtt, other.inter_rtt)
                and np.array_equal(self.coop_mask, other.coop_mask)
                and self.cloud_rtt == other.cloud_rtt
                and self.deadline == other.deadline
                and self.coop_radius == other.coop_radius
                and (self.positions is None
                     or np.array_equal(self.positions, other.positions)))

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    @property
    def size(self):
        return len(self.nodes)

    def arrival_rates(self):
        return np.array([n.arrival_rate for n in self.nodes])

    def service_rates(self):
        return np.array([n.service_rate for n in self.nodes])

    def user_rtts(self):
        return np.array([n.user_rtt for n in self.nodes])

    def chis(self):
        return np.array([n.chi for n in self.nodes])

    def capacities(self):
        return np.array([n.capacity for n in self.nodes])

    def total_arrival(self):
        return float(np.sum(self.arrival_rates()))

    def allowed(self):
        """ N x (N+1) boolean mask of the allocation matrix, cloud column included """
        return np.hstack([self.coop_mask, np.ones((self.size, 1), dtype=bool)])

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_arrival_rates(self, rates):
        rates = np.broadcast_to(np.asarray(rates, dtype=float), (self.size,))
        nodes = tuple(n.with_arrival_rate(float(r)) for n, r in zip(self.nodes, rates))
        return self.replace(nodes=nodes)

    def with_efficiency_caps(self, caps):
        caps = np.broadcast_to(np.asarray(caps, dtype=float), (self.size,))
        nodes = tuple(n.with_efficiency_cap(float(c)) for n, c in zip(self.nodes, caps))
        return self.replace(nodes=nodes)

    def with_coop_mask(self, mask):
        return self.replace(coop_mask=mask)


@dataclasses.dataclass(frozen=True, eq=False)
class Allocation(object):
    """ Workload split: phi[j, i] is the rate of node j's workload served at
        node i, phi_cloud[j] the rate node j forwards to the cloud.
    """
    phi: object
    phi_cloud: object

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        cloud = np.array(self.phi_cloud, dtype=float).reshape(-1)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1] or cloud.shape != (phi.shape[0],):
            raise InvalidParameterError(
                "phi", phi.shape, "phi must be N x N and phi_cloud length N")
        object.__setattr__(self, "phi", _frozen_array(phi))
        object.__setattr__(self, "phi_cloud", _frozen_array(cloud))

    def __eq__(self, other):
        if not isinstance(other, Allocation):
            return NotImplemented
        return (np.array_equal(self.phi, other.phi)
                and np.array_equal(self.phi_cloud, other.phi_cloud))

    __hash__ = None

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix[:, :-1], matrix[:, -1])

    def as_matrix(self):
        return np.hstack([self.phi, self.phi_cloud[:, None]])

    def column_loads(self):
        return self.phi.sum(axis=0)

    def row_totals(self):
        return self.phi.sum(axis=1) + self.phi_cloud

    @property
    def size(self):
        return self.phi.shape[0]


def power_efficiency(p, processed):
    """ Watts drawn per unit of processed workload, pue * (static / load + dynamic) """
    if processed <= 0:
        raise DomainError(
            "power efficiency is undefined at processed load {0!r}".format(processed))
    return p.pue * (p.static_power / processed + p.dynamic_power_per_unit)


def capacity_chi(p):
    """ Load at which power_efficiency equals the efficiency cap """
    return p.static_power * p.pue / (p.efficiency_cap - p.pue * p.dynamic_power_per_unit)


def response_cloud_only(n, cloud_rtt):
    return n.user_rtt + cloud_rtt


def response_local_all(n):
    if n.arrival_rate >= n.service_rate:
        raise InstabilityError(n.id, n.arrival_rate, n.service_rate)
    return n.user_rtt + 1.0 / (n.service_rate - n.arrival_rate)


def response_partial(n, alpha, cloud_rtt):
    """ Mean response time when a fraction `alpha` is served locally and the
        rest goes to the cloud.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1], got {0!r}".format(alpha))
    load = alpha * n.arrival_rate
    if load >= n.service_rate:
        raise InstabilityError(n.id, load, n.service_rate)
    return n.user_rtt + alpha / (n.service_rate - load) + (1.0 - alpha) * cloud_rtt


def _check_allocation(a, s):
    if a.size != s.size:
        raise DomainError("allocation is {0} x {0} but the scenario has {1} nodes".format(
            a.size, s.size))
    outside = (~s.coop_mask) & (a.phi != 0.0)
    if np.any(outside):
        j, i = np.argwhere(outside)[0]
        raise DomainError("node {0} forwards to node {1} outside the cooperation graph".format(
            s.nodes[j].id, s.nodes[i].id))
    loads = a.column_loads()
    mu = s.service_rates()
    unstable = np.flatnonzero(loads >= mu)
    if unstable.size:
        i = unstable[0]
        raise InstabilityError(s.nodes[i].id, loads[i], mu[i])
    return loads, mu


def _row_responses(a, s, loads, mu):
    queue = 1.0 / (mu - loads)
    fog = (a.phi * (s.inter_rtt + queue[None, :])).sum(axis=1) / s.total_arrival()
    cloud = a.phi_cloud / s.arrival_rates() * s.cloud_rtt
    return s.user_rtts() + fog + cloud


def coop_response(j, a, s):
    """ Response time seen by the users of node `j` under allocation `a` """
    loads, mu = _check_allocation(a, s)
    return float(_row_responses(a, s, loads, mu)[j])


def coop_objective(a, s):
    """ Sum of coop_response over every node """
    loads, mu = _check_allocation(a, s)
    return float(np.sum(_row_responses(a, s, loads, mu)))


def coop_gradient(a, s):
    """ Gradient of coop_objective as an N x (N+1) matrix (cloud column last) """
    loads, mu = _check_allocation(a, s)
    marginal = mu / (mu - loads) ** 2
    grad = np.empty((s.size, s.size + 1))
    grad[:, :-1] = (s.inter_rtt + marginal[None, :]) / s.total_arrival()
    grad[:, -1] = s.cloud_rtt / s.arrival_rates()
    return grad


def no_cooperation(s, alphas):
    """ Allocation where node j serves alphas[j] of its own workload and
        sends the rest to the cloud.
    """
    alphas = np.asarray(alphas, dtype=float)
    lam = s.arrival_rates()
    return Allocation(np.diag(alphas * lam), (1.0 - alphas) * lam)
