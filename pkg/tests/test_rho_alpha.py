import math
import unittest

import numpy as np

from rigidity_lab.errors import ConstraintViolationError, DegenerateInputError, GroupTypeError
from rigidity_lab.lie import PSL2_SQUARED, GroupElement, boundary_angle_action, random_group_element
from rigidity_lab.rho_alpha import (CHAMBER_CENTER, HALF_PI, ChamberCoordinate, action_property_check,
                                   build_rho_alpha, chamber_cocycle, chamber_collapse_witness, continuity_defect,
                                   first_monotone_index, kappa_arrays, random_chamber_points, standard_stabilizer, tau,
                                   tau_inverse)


class ChartCase(unittest.TestCase):
    def test_tau(self):
        self.assertAlmostEqual(float(tau(CHAMBER_CENTER)), 0.0, places=15)
        self.assertEqual(float(tau(0.0)), -math.inf)
        self.assertEqual(float(tau(HALF_PI)), math.inf)
        theta = np.linspace(0.05, 1.5, 20)
        np.testing.assert_allclose(tau_inverse(tau(theta)), theta, atol=1e-14)
        self.assertEqual(float(tau_inverse(-math.inf)), 0.0)

    def test_chamber_coordinates(self):
        point = ChamberCoordinate(7.0, -1.0, 0.5)
        self.assertAlmostEqual(point.xi, 7.0 - 2 * math.pi, places=12)
        self.assertAlmostEqual(point.eta, 2 * math.pi - 1.0, places=12)
        self.assertTrue(ChamberCoordinate(0.0, 0.0, HALF_PI).on_face)
        with self.assertRaises(ConstraintViolationError):
            ChamberCoordinate(0.0, 0.0, -0.1)


class DeformationCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(43)

    def test_cocycle_identity(self):
        for _ in range(50):
            g = random_group_element(self.rng, PSL2_SQUARED)
            h = random_group_element(self.rng, PSL2_SQUARED)
            xi, eta = self.rng.uniform(0.0, 2 * math.pi, 2)
            moved = (float(boundary_angle_action(h.factors[0], xi)), float(boundary_angle_action(h.factors[1], eta)))
            lhs = float(chamber_cocycle(g @ h, xi, eta))
            rhs = float(chamber_cocycle(g, *moved)) * float(chamber_cocycle(h, xi, eta))
            self.assertLess(abs(lhs - rhs) / lhs, 1e-10)

    def test_cocycle_needs_the_product_group(self):
        with self.assertRaises(GroupTypeError):
            chamber_cocycle(GroupElement.identity("PSL2"), 0.0, 0.0)

    def test_deformed_maps_form_an_action(self):
        for alpha in (0.0, 0.5, 1.0):
            with self.subTest(alpha=alpha):
                check = action_property_check(alpha, self.rng, 200)
                self.assertLess(check.residual, 1e-9)
                self.assertEqual(check.face_residual, 0.0)

    def test_alpha_zero_is_the_standard_action(self):
        g = random_group_element(self.rng, PSL2_SQUARED)
        xi, eta, theta = random_chamber_points(self.rng, 32)
        new_xi, new_eta, new_theta = kappa_arrays(g, 0.0, xi, eta, theta)
        np.testing.assert_array_equal(new_xi, boundary_angle_action(g.factors[0], xi))
        np.testing.assert_array_equal(new_eta, boundary_angle_action(g.factors[1], eta))
        np.testing.assert_array_equal(new_theta, theta)

    def test_continuity_in_alpha(self):
        generators = {f"s{i}": random_group_element(self.rng, PSL2_SQUARED) for i in range(2)}
        self.assertEqual(continuity_defect(0.0, generators, 12), 0.0)
        small = continuity_defect(1e-3, generators, 12)
        self.assertLess(small, 0.01)
        self.assertLess(small, continuity_defect(1.0, generators, 12))
        halving = [continuity_defect(alpha, generators, 12) for alpha in (0.1, 0.05, 0.025, 0.0125)]
        for larger, smaller in zip(halving, halving[1:]):
            self.assertLess(smaller, larger)

    def test_words_and_relations(self):
        a = GroupElement.psl2_squared(np.diag([2.0, 0.5]), [[1.0, 1.0], [0.0, 1.0]])
        action = build_rho_alpha(0.7, {"a": a, "A": a.inverse()}, [("a", "A")])
        xi, eta, _ = random_chamber_points(self.rng, 20)
        thetas = self.rng.uniform(0.3, 1.2, 20)
        points = [ChamberCoordinate(float(x), float(e), float(t)) for x, e, t in zip(xi, eta, thetas)]
        self.assertLess(action.relation_residual(points), 1e-12)
        p = points[0]
        self.assertLess(action.apply_word(("a", "a"), p).distance(action.kappa(action.word_element(("a", "a")), p)),
                        1e-12)

    def test_action_arguments_are_checked(self):
        with self.assertRaises(ConstraintViolationError):
            build_rho_alpha(-0.5)
        with self.assertRaises(GroupTypeError):
            build_rho_alpha(1.0, {"s": GroupElement.identity("SL", 2)})


class CollapseWitnessCase(unittest.TestCase):
    def test_contracting_cocycle_pulls_angles_to_the_center(self):
        gamma, xi, eta = standard_stabilizer()
        for theta0 in (0.3, 1.2):
            with self.subTest(theta0=theta0):
                trace = chamber_collapse_witness(1.0, gamma, xi, eta, theta0, 50)
                self.assertAlmostEqual(trace.cocycle, math.exp(-2.0), places=12)
                self.assertEqual(trace.limit, CHAMBER_CENTER)
                self.assertLess(trace.final_gap, 1e-12)
                self.assertEqual(trace.monotone_from, 0)
                self.assertEqual(len(trace.rows()), 51)

    def test_expanding_cocycle_pushes_angles_to_the_faces(self):
        gamma, xi, eta = standard_stabilizer()
        for theta0, face in ((0.3, 0.0), (1.2, HALF_PI)):
            with self.subTest(theta0=theta0):
                trace = chamber_collapse_witness(1.0, gamma.inverse(), xi, eta, theta0, 50)
                self.assertEqual(trace.limit, face)
                self.assertLess(trace.final_gap, 1e-12)

    def test_alpha_zero_keeps_the_angle(self):
        gamma, xi, eta = standard_stabilizer()
        trace = chamber_collapse_witness(0.0, gamma, xi, eta, 0.3, 20)
        self.assertEqual(set(trace.thetas), {0.3})
        self.assertEqual(trace.final_gap, 0.0)

    def test_first_monotone_index(self):
        self.assertEqual(first_monotone_index([0.3, 0.3, 0.3]), 0)
        self.assertEqual(first_monotone_index([0.1, 0.2, 0.3]), 0)
        self.assertEqual(first_monotone_index([0.3, 0.5, 0.4, 0.45, 0.5]), 2)
        self.assertEqual(first_monotone_index([0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.6]), 5)

    def test_witness_needs_a_stabilizer_with_non_trivial_cocycle(self):
        gamma, _, _ = standard_stabilizer()
        with self.assertRaises(ConstraintViolationError):
            chamber_collapse_witness(1.0, gamma, 1.0, 0.0, 0.3)
        balanced = GroupElement.psl2_squared(np.diag([math.e, 1.0 / math.e]), np.diag([1.0 / math.e, math.e]))
        with self.assertRaises(DegenerateInputError):
            chamber_collapse_witness(1.0, balanced, 0.0, 0.0, 0.3)


if __name__ == '__main__':
    unittest.main()
