# -*- coding: utf-8 -*-

""" Scenario files, synthetic topologies, arrival distributions and an M/M/1 simulator """

__all__ = [
    "FRAME_CAPACITY",
    "DEFAULT_DEADLINE",
    "DEFAULT_INTER_RTT",
    "DEFAULT_COOP_RADIUS",
    "DEFAULT_CLOUD_RTT",
    "PROFILES",
    "EmpiricalDist",
    "TopologyFile",
    "radius_mask",
    "nearest_neighbor_mask",
    "cooperation_clusters",
    "load_distribution",
    "write_distribution",
    "load_scenario",
    "write_scenario",
    "sample_arrivals",
    "mm1_simulate",
    "make_dublin_like",
]

import dataclasses
import json
import logging
import math
import os

import networkx as nx
import numpy as np
import simpy

from fogopt.exceptions import DomainError, FogOptException, InstabilityError, ScenarioError
from fogopt.model import NodeParams, PowerParams, Scenario

logger = logging.getLogger(__name__)

FRAME_CAPACITY = 400.0
DEFAULT_DEADLINE = 0.5
DEFAULT_INTER_RTT = 0.020
DEFAULT_COOP_RADIUS = 500.0
DEFAULT_CLOUD_RTT = 0.1
DEFAULT_SERVICE_RATE = 500.0

# pue * w_static / (eta_cap - pue * w_dynamic) == FRAME_CAPACITY
DEFAULT_POWER = PowerParams(pue=1.5, static_power=60.0, dynamic_power_per_unit=0.1,
                            efficiency_cap=0.375)

PROFILES = {
    # a loaded macro site with a lightly loaded small cell next to it
    "urban": {"spacing": 350.0, "jitter": 30.0, "paired": True,
              "heavy": (550.0, 750.0), "light": (50.0, 150.0)},
    "suburban": {"spacing": 450.0, "jitter": 60.0, "paired": False, "load": (150.0, 450.0)},
    "rural": {"spacing": 800.0, "jitter": 100.0, "paired": False, "load": (100.0, 400.0)},
}

COOPERATION_RULES = ("radius", "nearest")

NODE_FIELDS = ("id", "x", "y", "mu", "tau_u", "pue", "w_static", "w_dynamic", "eta_cap")
SCENARIO_UNITS = {
    "x": "metres", "y": "metres", "coop_radius": "metres",
    "mu": "workload-units/s", "lambda": "workload-units/s",
    "tau_u": "seconds", "cloud_rtt": "seconds", "inter_rtt": "seconds", "deadline": "seconds",
    "w_static": "watts", "w_dynamic": "watts per workload-unit/s", "eta_cap": "watts/unit",
}


@dataclasses.dataclass(frozen=True, eq=False)
class EmpiricalDist(object):
    """ A tabulated workload distribution: support values and their weights """
    support: object
    weights: object

    def __post_init__(self):
        support = np.array(self.support, dtype=float).reshape(-1)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if support.shape != weights.shape or support.size == 0:
            raise DomainError("support and weights must be non-empty and of equal length")
        if np.any(support < 0.0) or not np.all(np.isfinite(support)):
            raise DomainError("support values must be finite and nonnegative")
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > 1e-9:
            raise DomainError("weights must be nonnegative and sum to 1 (sum {0!r})".format(
                float(weights.sum())))
        support.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    def mean(self):
        return float(np.dot(self.support, self.weights))

    @classmethod
    def bell(cls, low, high, points=21):
        """ Bell-shaped tabulation over [low, high], a stand-in for a fitted
            kernel density.
        """
        support = np.linspace(low, high, points)
        width = 0.25 * (high - low) if high > low else 1.0
        weights = np.exp(-0.5 * ((support - 0.5 * (low + high)) / width) ** 2)
        return cls(support, weights / weights.sum())


def radius_mask(positions, radius):
    """ j may forward to i when they are at most `radius` metres apart """
    positions = np.asarray(positions, dtype=float)
    size = len(positions)
    graph = nx.Graph()
    graph.add_nodes_from(range(size))
    for j in range(size):
        for i in range(j + 1, size):
            distance = float(np.hypot(*(positions[j] - positions[i])))
            if distance <= radius:
                graph.add_edge(j, i, distance=distance)
    adjacency = nx.to_numpy_array(graph, nodelist=range(size), weight=None) > 0
    return adjacency | np.eye(size, dtype=bool)


def nearest_neighbor_mask(positions, radius):
    """ Links every node to its nearest neighbour within `radius`.

        Links are mutual: a node also serves the peers that picked it, so
        the mask is symmetric.
    """
    positions = np.asarray(positions, dtype=float)
    size = len(positions)
    graph = nx.Graph()
    graph.add_nodes_from(range(size))
    if size > 1:
        diff = positions[:, None, :] - positions[None, :, :]
        distance = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(distance, np.inf)
        for j in range(size):
            nearest = int(np.argmin(distance[j]))
            if distance[j, nearest] <= radius:
                graph.add_edge(j, nearest, distance=float(distance[j, nearest]))
    adjacency = nx.to_numpy_array(graph, nodelist=range(size), weight=None) > 0
    return adjacency | np.eye(size, dtype=bool)


def cooperation_clusters(s):
    """ Groups of nodes that can reach each other through forwarding links """
    graph = nx.from_numpy_array(np.asarray(s.coop_mask, dtype=int))
    clusters = [sorted(c) for c in nx.connected_components(graph)]
    return sorted(clusters, key=lambda c: c[0])


def _cooperation_mask(rule, positions, radius):
    if rule == "nearest":
        return nearest_neighbor_mask(positions, radius)
    return radius_mask(positions, radius)


def load_distribution(path):
    """ Reads a `value,weight` CSV into an EmpiricalDist """
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return EmpiricalDist(table[:, 0], table[:, 1])
    except (IOError, ValueError, IndexError) as error:
        raise ScenarioError("couldn't read distribution: {0}".format(error), path=path)


def write_distribution(d, path):
    np.savetxt(path, np.column_stack([d.support, d.weights]), delimiter=",",
               header="value,weight", comments="", fmt="%.17g")


class TopologyFile(object):
    """
    The JSON scenario format.

    {"globals": {"cloud_rtt", "deadline", "coop_radius", "inter_rtt",
                 "cooperation": "radius" | "nearest"},
     "nodes": [{"id", "x", "y", "mu", "lambda" or "distribution",
                "tau_u", "pue", "w_static", "w_dynamic", "eta_cap"}]}

    A node's "distribution" is a CSV path relative to the scenario file; its
    mean is used as the arrival rate.
    """

    def __init__(self, globals_, nodes, base_dir="."):
        self.globals = dict(globals_)
        self.nodes = [dict(n) for n in nodes]
        self.base_dir = base_dir
        self.path = None

    @classmethod
    def read(cls, path):
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except IOError as error:
            raise ScenarioError("couldn't read scenario: {0}".format(error), path=path)
        except ValueError as error:
            raise ScenarioError("invalid JSON: {0}".format(error), path=path)
        if not isinstance(data, dict) or "globals" not in data or "nodes" not in data:
            raise ScenarioError("expected an object with 'globals' and 'nodes'", path=path)
        topo = cls(data["globals"], data["nodes"], os.path.dirname(os.path.abspath(path)))
        topo.path = path
        return topo

    @classmethod
    def from_scenario(cls, s):
        if s.positions is None or s.coop_radius is None:
            raise ScenarioError("only scenarios with positions and a radius can be written")
        off_diagonal = s.inter_rtt[~np.eye(s.size, dtype=bool)]
        if off_diagonal.size and np.any(off_diagonal != off_diagonal[0]):
            raise ScenarioError("inter_rtt must be one constant to be written")
        for rule in COOPERATION_RULES:
            if np.array_equal(s.coop_mask, _cooperation_mask(rule, s.positions, s.coop_radius)):
                break
        else:
            raise ScenarioError("the cooperation graph follows neither the radius nor the "
                                "nearest neighbour rule")
        globals_ = {
            "cloud_rtt": s.cloud_rtt,
            "deadline": s.deadline,
            "coop_radius": s.coop_radius,
            "inter_rtt": float(off_diagonal[0]) if off_diagonal.size else 0.0,
            "cooperation": rule,
        }
        nodes = []
        for n, (x, y) in zip(s.nodes, s.positions):
            nodes.append({
                "id": n.id, "x": float(x), "y": float(y), "mu": n.service_rate,
                "lambda": n.arrival_rate, "tau_u": n.user_rtt, "pue": n.power.pue,
                "w_static": n.power.static_power, "w_dynamic": n.power.dynamic_power_per_unit,
                "eta_cap": n.power.efficiency_cap,
            })
        return cls(globals_, nodes)

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"units": SCENARIO_UNITS, "globals": self.globals, "nodes": self.nodes},
                      f, indent=2)
            f.write("\n")

    def _global(self, name, strict):
        try:
            value = float(self.globals[name])
        except KeyError:
            raise ScenarioError("missing global {0!r}".format(name), record="globals",
                                path=self.path)
        except (TypeError, ValueError):
            raise ScenarioError("global {0!r} is not a number".format(name),
                                record="globals", path=self.path)
        if not math.isfinite(value) or value < 0.0 or (strict and value == 0.0):
            raise ScenarioError("global {0!r} must be positive, got {1!r}".format(name, value),
                                record="globals", path=self.path)
        return value

    def _arrival_rate(self, record, name):
        if "lambda" in record:
            return float(record["lambda"])
        if "distribution" in record:
            path = os.path.join(self.base_dir, record["distribution"])
            return load_distribution(path).mean()
        raise ScenarioError("needs 'lambda' or 'distribution'", record=name, path=self.path)

    def to_scenario(self):
        cloud_rtt = self._global("cloud_rtt", strict=False)
        deadline = self._global("deadline", strict=True)
        radius = self._global("coop_radius", strict=True)
        inter_rtt = self._global("inter_rtt", strict=False)
        rule = self.globals.get("cooperation", "radius")
        if rule not in COOPERATION_RULES:
            raise ScenarioError("unknown cooperation rule {0!r}".format(rule),
                                record="globals", path=self.path)

        nodes, positions, seen = [], [], set()
        for index, record in enumerate(self.nodes):
            name = record.get("id", index)
            missing = [f for f in NODE_FIELDS if f not in record]
            if missing:
                raise ScenarioError("missing fields {0}".format(", ".join(missing)),
                                    record=name, path=self.path)
            if name in seen:
                raise ScenarioError("duplicate id", record=name, path=self.path)
            seen.add(name)
            try:
                x, y = float(record["x"]), float(record["y"])
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise ScenarioError("coordinates must be finite", record=name,
                                        path=self.path)
                power = PowerParams(record["pue"], record["w_static"], record["w_dynamic"],
                                    record["eta_cap"])
                nodes.append(NodeParams(name, self._arrival_rate(record, name), record["mu"],
                                        record["tau_u"], power))
            except ScenarioError as error:
                if error.record is None:
                    error.record = name
                raise
            except (FogOptException, TypeError, ValueError) as error:
                raise ScenarioError(str(error), record=name, path=self.path)
            positions.append((x, y))

        if not nodes:
            raise ScenarioError("no nodes", path=self.path)
        positions = np.array(positions)
        return Scenario(nodes, inter_rtt, cloud_rtt, deadline,
                        _cooperation_mask(rule, positions, radius), positions, radius)


def load_scenario(path):
    """ Builds a Scenario from a JSON topology file """
    s = TopologyFile.read(path).to_scenario()
    logger.info("loaded %d nodes from %s (%d cooperating pairs)", s.size, path,
                int(s.coop_mask.sum()) - s.size)
    return s


def write_scenario(s, path):
    TopologyFile.from_scenario(s).write(path)


def sample_arrivals(d, n, seed):
    """ `n` draws from `d`, reproducible for a given seed """
    rng = np.random.default_rng(seed)
    return rng.choice(d.support, size=n, p=d.weights)


def mm1_simulate(lam, mu, departures, seed, warmup_fraction=0.1, batches=20,
                 control_variates=True):
    """ Mean sojourn time of a simulated M/M/1 queue.

        Poisson arrivals at rate `lam` feed a single exponential server of
        rate `mu`. The first warmup_fraction * departures completions are
        discarded, then the next `departures` are averaged.

        With control_variates the average is corrected by the batch-means
        regression of sojourn times on the interarrival and service times
        of the same jobs, whose means 1/lam and 1/mu are known. The
        estimator stays unbiased and is much less noisy near saturation.
    """
    if lam >= mu:
        raise InstabilityError("mm1", lam, mu)
    if departures < 1:
        raise DomainError("departures must be >= 1")
    rng = np.random.default_rng(seed)
    env = simpy.Environment()
    store = simpy.Store(env)
    warmup = int(math.ceil(warmup_fraction * departures))
    samples = np.zeros((departures, 3))
    stats = {"count": 0}
    done = env.event()

    def arrival_process():
        while True:
            gap = rng.exponential(1.0 / lam)
            yield env.timeout(gap)
            yield store.put((env.now, gap))

    def service_process():
        while True:
            arrived, gap = yield store.get()
            service = rng.exponential(1.0 / mu)
            yield env.timeout(service)
            stats["count"] += 1
            k = stats["count"] - warmup - 1
            if k >= 0:
                samples[k] = (env.now - arrived, gap, service)
            if k == departures - 1:
                done.succeed()
                return

    env.process(arrival_process())
    env.process(service_process())
    env.run(until=done)
    mean = float(samples[:, 0].mean())
    if control_variates and departures >= 4 * batches:
        mean = _control_variate_mean(samples, batches, 1.0 / lam, 1.0 / mu)
    logger.debug("mm1 lam=%g mu=%g: mean sojourn %.6g over %d jobs", lam, mu, mean, departures)
    return mean


def _control_variate_mean(samples, batches, mean_gap, mean_service):
    size = len(samples) // batches
    means = samples[:size * batches].reshape(batches, size, 3).mean(axis=1)
    controls = means[:, 1:] - (mean_gap, mean_service)
    centred = controls - controls.mean(axis=0)
    beta = np.linalg.lstsq(centred, means[:, 0] - means[:, 0].mean(), rcond=None)[0]
    overall = samples[:, 1:].mean(axis=0) - (mean_gap, mean_service)
    return float(samples[:, 0].mean() - overall @ beta)


def _jittered_grid(rng, count, spacing, jitter):
    side = int(math.ceil(math.sqrt(count)))
    points = []
    for k in range(count):
        row, col = divmod(k, side)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        offset = jitter * math.sqrt(rng.uniform(0.0, 1.0))
        points.append((col * spacing + offset * math.cos(angle),
                       row * spacing + offset * math.sin(angle)))
    return points


def _mean_arrival(rng, dist, draws=50):
    seed = int(rng.integers(2 ** 32))
    return float(np.mean(sample_arrivals(dist, draws, seed)))


def make_dublin_like(density_profile, node_count, seed, cooperation="radius"):
    """ Synthetic city-scale scenario with the case-study defaults.

        Every node serves 500 units/s, can process at most FRAME_CAPACITY
        units/s under its efficiency cap, forwards to peers in 20 ms, reaches
        the cloud in 100 ms and must answer within 0.5 s.

        Parameters:
         - density_profile - 'urban', 'suburban' or 'rural'
         - node_count - number of fog nodes, at least 1
         - seed - makes the scenario reproducible
         - cooperation - 'radius' or 'nearest'
    """
    if density_profile not in PROFILES:
        raise DomainError("unknown profile {0!r}, expected one of {1}".format(
            density_profile, sorted(PROFILES)))
    if node_count < 1:
        raise DomainError("node_count must be >= 1")
    if cooperation not in COOPERATION_RULES:
        raise DomainError("unknown cooperation rule {0!r}".format(cooperation))
    profile = PROFILES[density_profile]
    rng = np.random.default_rng(seed)

    positions, loads = [], []
    if profile["paired"]:
        heavy = EmpiricalDist.bell(*profile["heavy"])
        light = EmpiricalDist.bell(*profile["light"])
        centres = _jittered_grid(rng, (node_count + 1) // 2, profile["spacing"],
                                 profile["jitter"])
        for x, y in centres:
            positions.append((x, y))
            loads.append(_mean_arrival(rng, heavy))
            if len(positions) == node_count:
                break
            angle = rng.uniform(0.0, 2.0 * math.pi)
            distance = rng.uniform(40.0, 80.0)
            positions.append((x + distance * math.cos(angle), y + distance * math.sin(angle)))
            loads.append(_mean_arrival(rng, light))
    else:
        dist = EmpiricalDist.bell(*profile["load"])
        positions = _jittered_grid(rng, node_count, profile["spacing"], profile["jitter"])
        loads = [_mean_arrival(rng, dist) for _ in positions]

    nodes = tuple(
        NodeParams("fog-{0:02d}".format(k), load, DEFAULT_SERVICE_RATE,
                   float(rng.uniform(0.005, 0.01)), DEFAULT_POWER)
        for k, load in enumerate(loads))
    positions = np.array(positions)
    mask = _cooperation_mask(cooperation, positions, DEFAULT_COOP_RADIUS)
    logger.info("%s scenario: %d nodes, %d cooperating pairs", density_profile, node_count,
                int(mask.sum()) - node_count)
    return Scenario(nodes, DEFAULT_INTER_RTT, DEFAULT_CLOUD_RTT, DEFAULT_DEADLINE, mask,
                    positions, DEFAULT_COOP_RADIUS)
