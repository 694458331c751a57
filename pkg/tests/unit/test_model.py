# -*- coding: utf-8 -*-
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from fogopt import (Allocation, DomainError, InstabilityError, InvalidParameterError,
                    NodeParams, PowerParams, Scenario)
from fogopt.model import (EPS_STAB, capacity_chi, coop_gradient, coop_objective,
                          coop_response, no_cooperation, power_efficiency,
                          response_cloud_only, response_local_all, response_partial)
from tests.helpers import (central_difference, hand_coop_response, make_node,
                           random_feasible_matrix, random_scenario)


class PowerModelTest(unittest.TestCase):

    def test_power_efficiency_values(self):
        p = PowerParams(pue=2.0, static_power=10.0, dynamic_power_per_unit=1.0,
                        efficiency_cap=4.0)
        self.assertAlmostEqual(power_efficiency(p, 5.0), 6.0, places=12)
        self.assertAlmostEqual(power_efficiency(p, 10.0), 4.0, places=12)

    def test_no_static_power_gives_constant_efficiency(self):
        p = PowerParams(pue=1.0, static_power=0.0, dynamic_power_per_unit=0.5,
                        efficiency_cap=1.0)
        for processed in (0.1, 1.0, 1e4):
            self.assertAlmostEqual(power_efficiency(p, processed), 0.5, places=12)

    def test_efficiency_undefined_without_load(self):
        p = PowerParams()
        self.assertRaises(DomainError, power_efficiency, p, 0.0)
        self.assertRaises(DomainError, power_efficiency, p, -1.0)

    def test_capacity_chi(self):
        self.assertAlmostEqual(capacity_chi(PowerParams(2.0, 10.0, 1.0, 4.0)), 10.0)
        self.assertAlmostEqual(capacity_chi(PowerParams(1.0, 5.0, 0.1, 0.6)), 10.0)

    @given(pue=st.floats(1.0, 3.0), static=st.floats(0.1, 100.0),
           dynamic=st.floats(0.0, 2.0), margin=st.floats(0.01, 5.0))
    def test_efficiency_at_chi_is_the_cap(self, pue, static, dynamic, margin):
        p = PowerParams(pue, static, dynamic, pue * dynamic + margin)
        eta = power_efficiency(p, capacity_chi(p))
        self.assertLessEqual(abs(eta - p.efficiency_cap), 1e-12 * p.efficiency_cap + 1e-15)

    def test_invalid_power_params(self):
        self.assertRaises(InvalidParameterError, PowerParams, 0.9)
        self.assertRaises(InvalidParameterError, PowerParams, 1.0, -1.0)
        self.assertRaises(InvalidParameterError, PowerParams, 1.0, 1.0, -0.1)
        with self.assertRaises(InvalidParameterError) as cm:
            PowerParams(2.0, 1.0, 1.0, 2.0)
        self.assertEqual(cm.exception.field, "efficiency_cap")

    def test_invalid_node_params(self):
        self.assertRaises(InvalidParameterError, NodeParams, "a", 0.0, 1.0)
        self.assertRaises(InvalidParameterError, NodeParams, "a", 1.0, -1.0)
        self.assertRaises(InvalidParameterError, NodeParams, "a", 1.0, 1.0, -0.01)
        self.assertRaises(InvalidParameterError, NodeParams, "a", float("nan"), 1.0)

    def test_node_capacity(self):
        node = make_node(10.0, 5.0, chi=20.0)
        self.assertAlmostEqual(node.chi, 20.0)
        self.assertAlmostEqual(node.capacity, (1.0 - EPS_STAB) * 10.0)
        self.assertAlmostEqual(make_node(10.0, 5.0, chi=3.0).capacity, 3.0)


class ResponseTimeTest(unittest.TestCase):

    def test_cloud_only(self):
        self.assertAlmostEqual(response_cloud_only(make_node(10, 5, 0.01), 0.1), 0.11)
        self.assertEqual(response_cloud_only(make_node(10, 5, 0.0), 0.0), 0.0)
        self.assertAlmostEqual(response_cloud_only(make_node(10, 5, 0.02), 0.1), 0.12)

    def test_local_all(self):
        self.assertAlmostEqual(response_local_all(make_node(10, 5, 0.01)), 0.21)
        self.assertAlmostEqual(response_local_all(make_node(2, 1)), 1.0)
        with self.assertRaises(InstabilityError) as cm:
            response_local_all(make_node(5, 5, ident="edge"))
        self.assertEqual(cm.exception.node, "edge")

    def test_partial(self):
        node = make_node(10, 5, 0.01)
        self.assertAlmostEqual(response_partial(node, 0.5, 0.1), 0.126667, places=6)
        self.assertEqual(response_partial(node, 0.0, 0.1), response_cloud_only(node, 0.1))
        self.assertEqual(response_partial(node, 1.0, 0.1), response_local_all(node))

    def test_partial_domain(self):
        node = make_node(10, 20)
        self.assertRaises(DomainError, response_partial, node, 1.5, 0.1)
        self.assertRaises(DomainError, response_partial, node, -0.1, 0.1)
        self.assertRaises(InstabilityError, response_partial, node, 0.5, 0.1)

    @settings(max_examples=1000)
    @given(mu=st.floats(1.0, 20.0), ratio=st.floats(0.05, 3.0), cloud=st.floats(0.0, 1.0),
           a1=st.floats(0.0, 1.0), a2=st.floats(0.0, 1.0), t=st.floats(0.0, 1.0))
    def test_partial_is_convex(self, mu, ratio, cloud, a1, a2, t):
        node = make_node(mu, mu * ratio, 0.01)
        top = min(1.0, 0.99 * mu / node.arrival_rate)
        a1, a2 = a1 * top, a2 * top
        mid = response_partial(node, t * a1 + (1 - t) * a2, cloud)
        chord = t * response_partial(node, a1, cloud) + (1 - t) * response_partial(
            node, a2, cloud)
        self.assertLessEqual(mid, chord + 1e-9)


class ScenarioTest(unittest.TestCase):

    def _nodes(self, count=2):
        return tuple(make_node(10.0, 4.0, ident=k) for k in range(count))

    def test_scalar_inter_rtt(self):
        s = Scenario(self._nodes(3), 0.02, 0.1, 0.5)
        self.assertEqual(s.inter_rtt.shape, (3, 3))
        self.assertTrue(np.all(np.diag(s.inter_rtt) == 0.0))
        self.assertEqual(s.inter_rtt[0, 2], 0.02)
        self.assertTrue(s.coop_mask.all())

    def test_rejects_bad_matrices(self):
        nodes = self._nodes()
        self.assertRaises(InvalidParameterError, Scenario, nodes, [[0, 1], [2, 0]], 0.1, 0.5)
        self.assertRaises(InvalidParameterError, Scenario, nodes, [[1, 1], [1, 0]], 0.1, 0.5)
        self.assertRaises(InvalidParameterError, Scenario, nodes, 0.02, 0.1, 0.5,
                          [[False, True], [True, True]])
        self.assertRaises(InvalidParameterError, Scenario, nodes, 0.02, 0.1, 0.0)
        self.assertRaises(InvalidParameterError, Scenario, nodes + nodes[:1], 0.02, 0.1, 0.5)
        self.assertRaises(InvalidParameterError, Scenario, (), 0.02, 0.1, 0.5)

    def test_arrays_are_read_only(self):
        s = Scenario(self._nodes(), 0.02, 0.1, 0.5)
        with self.assertRaises(ValueError):
            s.inter_rtt[0, 1] = 1.0

    def test_with_arrival_rates_and_mask(self):
        s = Scenario(self._nodes(), 0.02, 0.1, 0.5)
        scaled = s.with_arrival_rates(s.arrival_rates() * 2)
        np.testing.assert_allclose(scaled.arrival_rates(), [8.0, 8.0])
        isolated = s.with_coop_mask(np.eye(2, dtype=bool))
        self.assertFalse(isolated.coop_mask[0, 1])
        self.assertNotEqual(s, isolated)
        self.assertEqual(s, Scenario(self._nodes(), 0.02, 0.1, 0.5))

    def test_with_efficiency_caps(self):
        s = Scenario(self._nodes(), 0.02, 0.1, 0.5)
        caps = [n.power.efficiency_cap for n in s.nodes]
        looser = s.with_efficiency_caps([caps[0] * 2, caps[1]])
        self.assertEqual(looser.nodes[0].power.efficiency_cap, caps[0] * 2)
        self.assertEqual(looser.nodes[1].power.efficiency_cap, caps[1])
        self.assertAlmostEqual(looser.nodes[0].chi, s.nodes[0].chi / 2)
        self.assertEqual(looser.nodes[1].chi, s.nodes[1].chi)
        self.assertEqual(looser.arrival_rates().tolist(), s.arrival_rates().tolist())

    def test_allowed_includes_cloud(self):
        s = Scenario(self._nodes(), 0.02, 0.1, 0.5, np.eye(2, dtype=bool))
        np.testing.assert_array_equal(s.allowed(), [[True, False, True], [False, True, True]])


class CooperativeResponseTest(unittest.TestCase):

    def test_single_node_reduces_to_partial(self):
        node = make_node(10.0, 5.0, 0.01)
        s = Scenario((node,), 0.0, 0.1, 0.5)
        a = no_cooperation(s, [0.5])
        self.assertAlmostEqual(coop_response(0, a, s), response_partial(node, 0.5, 0.1),
                               places=12)
        self.assertAlmostEqual(coop_objective(a, s), 0.126667, places=6)

    def test_cloud_only_reduction(self):
        s = random_scenario(np.random.default_rng(3), 4)
        a = Allocation(np.zeros((4, 4)), s.arrival_rates())
        for j, node in enumerate(s.nodes):
            self.assertAlmostEqual(coop_response(j, a, s), node.user_rtt + s.cloud_rtt)

    def test_matches_hand_evaluation(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            s = random_scenario(rng, 3)
            matrix = random_feasible_matrix(rng, s)
            a = Allocation.from_matrix(matrix)
            expected = sum(hand_coop_response(j, matrix[:, :3], matrix[:, 3], s)
                           for j in range(3))
            self.assertAlmostEqual(coop_objective(a, s), expected, places=12)

    def test_two_symmetric_nodes(self):
        nodes = (make_node(10.0, 4.0, 0.01, ident="a"), make_node(10.0, 4.0, 0.01, ident="b"))
        s = Scenario(nodes, 0.02, 0.1, 0.5)
        phi = [[3.0, 1.0], [0.0, 2.0]]
        a = Allocation(phi, [0.0, 2.0])
        self.assertAlmostEqual(coop_response(0, a, s),
                               hand_coop_response(0, phi, [0.0, 2.0], s), places=12)
        swapped = Allocation([[2.0, 0.0], [1.0, 3.0]], [2.0, 0.0])
        self.assertAlmostEqual(coop_objective(a, s), coop_objective(swapped, s), places=12)

    def test_instability_names_the_node(self):
        nodes = (make_node(5.0, 4.0, ident="a"), make_node(5.0, 4.0, ident="b"))
        s = Scenario(nodes, 0.02, 0.1, 0.5)
        a = Allocation([[1.0, 3.0], [0.0, 4.0]], [0.0, 0.0])
        with self.assertRaises(InstabilityError) as cm:
            coop_objective(a, s)
        self.assertEqual(cm.exception.node, "b")

    def test_masked_entry_rejected(self):
        nodes = (make_node(10.0, 4.0, ident="a"), make_node(10.0, 4.0, ident="b"))
        s = Scenario(nodes, 0.02, 0.1, 0.5, np.eye(2, dtype=bool))
        a = Allocation([[3.0, 1.0], [0.0, 4.0]], [0.0, 0.0])
        self.assertRaises(DomainError, coop_objective, a, s)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        s = random_scenario(rng, 4, density=1.0)
        matrix = random_feasible_matrix(rng, s, fill=0.5)
        numeric = central_difference(
            lambda m: coop_objective(Allocation.from_matrix(m), s), matrix)
        np.testing.assert_allclose(coop_gradient(Allocation.from_matrix(matrix), s),
                                   numeric, rtol=1e-5, atol=1e-8)

    def test_objective_is_convex_on_chords(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            s = random_scenario(rng, 3)
            m1 = random_feasible_matrix(rng, s)
            m2 = random_feasible_matrix(rng, s)
            t = rng.uniform()
            mid = coop_objective(Allocation.from_matrix(t * m1 + (1 - t) * m2), s)
            chord = (t * coop_objective(Allocation.from_matrix(m1), s)
                     + (1 - t) * coop_objective(Allocation.from_matrix(m2), s))
            self.assertLessEqual(mid, chord + 1e-9)

    def test_allocation_matrix_views(self):
        matrix = np.array([[1.0, 2.0, 3.0], [0.0, 4.0, 1.0]])
        a = Allocation.from_matrix(matrix)
        np.testing.assert_array_equal(a.as_matrix(), matrix)
        np.testing.assert_array_equal(a.column_loads(), [1.0, 6.0])
        np.testing.assert_array_equal(a.row_totals(), [6.0, 5.0])
        self.assertRaises(InvalidParameterError, Allocation, np.zeros((2, 3)), [0, 0])
