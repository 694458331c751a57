# -*- coding: utf-8 -*-
"""
End-to-end checks over whole scenarios. These run every solver, so they
take a few minutes.
"""

import os
import shutil
import tempfile
import unittest

import numpy as np

from fogopt import ConvergenceError, MemoryTransport
from fogopt.central import check_feasibility, no_cooperation_baseline, solve_centralized
from fogopt.cli import main
from fogopt.dist import run_admm_vs, run_protocol, run_subgradient
from fogopt.model import coop_objective
from fogopt.scenario import cooperation_clusters, make_dublin_like
from fogopt.single import tradeoff_curve
from tests.helpers import random_node, random_scenario

N6 = os.path.join(os.path.dirname(__file__), os.pardir, os.pardir, "fixtures", "n6.json")


class OracleEquivalenceTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        rng = np.random.default_rng(2016)
        cls.cases = []
        for size in rng.integers(2, 11, size=20):
            s = random_scenario(rng, int(size))
            alloc, _ = solve_centralized(s)
            cls.cases.append((s, alloc, coop_objective(alloc, s)))

    def test_subgradient_reaches_gap(self):
        for s, _, optimum in self.cases:
            alloc, trace = run_subgradient(s, max_iters=500, oracle_value=optimum,
                                           gap_tol=1e-2)
            self.assertIsNotNone(trace.converged_at, s.size)
            self.assertTrue(check_feasibility(alloc, s).feasible)

    def test_admm_reaches_gap_and_is_faster(self):
        faster = 0
        for s, _, optimum in self.cases:
            alloc, admm = run_admm_vs(s, max_iters=100, oracle_value=optimum, gap_tol=1e-3)
            self.assertTrue(check_feasibility(alloc, s).feasible)
            _, sub = run_subgradient(s, max_iters=500, oracle_value=optimum, gap_tol=1e-3)
            sub_iters = sub.converged_at if sub.converged_at is not None else len(sub) + 1
            if admm.converged_at <= sub_iters:
                faster += 1
        self.assertGreaterEqual(faster, 18)

    def test_central_outputs_are_feasible(self):
        for s, alloc, _ in self.cases:
            self.assertTrue(check_feasibility(alloc, s).feasible)


class CooperationTest(unittest.TestCase):

    def test_urban_cooperation_halves_latency(self):
        s = make_dublin_like("urban", 20, seed=0)
        alloc, _ = solve_centralized(s)
        _, baseline = no_cooperation_baseline(s)
        self.assertLessEqual(coop_objective(alloc, s), 0.7 * baseline)

    def test_nearest_neighbour_raises_processed_workload(self):
        s = make_dublin_like("urban", 20, seed=0, cooperation="nearest")
        alloc, _ = solve_centralized(s)
        baseline, _ = no_cooperation_baseline(s)
        self.assertGreaterEqual(alloc.phi.sum(), 1.2 * baseline.phi.sum())

    def test_rural_rules_coincide(self):
        radius = make_dublin_like("rural", 12, seed=4)
        nearest = make_dublin_like("rural", 12, seed=4, cooperation="nearest")
        self.assertEqual(cooperation_clusters(radius), [[k] for k in range(12)])
        self.assertEqual(radius, nearest)
        self.assertEqual(solve_centralized(radius)[0], solve_centralized(nearest)[0])


class PrivacyTest(unittest.TestCase):

    def test_no_private_values_in_agent_messages(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            s = random_scenario(rng, int(rng.integers(2, 7)))
            secrets = set()
            for n in s.nodes:
                secrets.update([n.service_rate, n.power.pue, n.power.static_power,
                                n.power.dynamic_power_per_unit, n.power.efficiency_cap])
            traces = [run_protocol(MemoryTransport(), s, "subgradient", max_iters=50)[1]]
            try:
                traces.append(run_protocol(MemoryTransport(), s, "admm", max_iters=50)[1])
            except ConvergenceError as error:
                traces.append(error.trace)
            for trace in traces:
                for message in trace.transcript:
                    if message.receiver != "wfc":
                        continue
                    self.assertLessEqual(set(message.payload),
                                         {"service", "cloud", "arrival_rate"})
                    values = np.concatenate([np.ravel(v) for v in message.payload.values()])
                    self.assertFalse(secrets & set(values.tolist()))


class TradeoffShapeTest(unittest.TestCase):

    def test_non_increasing_in_cap(self):
        rng = np.random.default_rng(50)
        for k in range(50):
            node = random_node(rng, ident=k)
            floor = node.power.pue * node.power.dynamic_power_per_unit
            points = tradeoff_curve(node, 0.2, floor + np.geomspace(0.05, 10.0, 25))
            times = [p.response_time for p in points]
            for before, after in zip(times, times[1:]):
                self.assertGreaterEqual(before, after - 1e-9)


class CompareDeterminismTest(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_repeated_runs_are_identical(self):
        outputs = []
        for name in ("first.csv", "second.csv"):
            path = os.path.join(self.tmp, name)
            self.assertEqual(main(["compare", "--scenario", N6,
                                   "--output", path]), 0)
            with open(path, "rb") as f:
                outputs.append(f.read())
        self.assertEqual(outputs[0], outputs[1])
