import unittest

import numpy as np

from rigidity_lab.chamber_bundle import (ChamberBundlePoint, SymmetricSpacePoint, a_q_basis, backward_face,
                                         chamber_flow, fiber_distance, fiber_isometry_residual, flow_for_time,
                                         flow_orbit, forward_face, leaf_intersection_defect, leaf_membership,
                                         opposite_face, orthogonality_report, parallel_set_sample, project,
                                         random_bundle_point, random_fiber_point, retraction_non_expansion,
                                         trivialize, unstable_leaf_membership, untrivialize)
from rigidity_lab.errors import ConstraintViolationError, DegenerateInputError, MembershipError
from rigidity_lab.lie import (PSL2_SQUARED, SL, ParabolicData, flag_action, flag_distance, q_minus,
                              random_group_element)

CASES = (ParabolicData.minimal(SL, 3), q_minus(), ParabolicData.minimal(PSL2_SQUARED))


class ChamberBundleCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(23)

    def test_symmetric_space_points_are_checked(self):
        with self.assertRaises(ConstraintViolationError):
            SymmetricSpacePoint(SL, (np.diag([2.0, 1.0, 1.0]),))
        with self.assertRaises(ConstraintViolationError):
            SymmetricSpacePoint(SL, (np.diag([-1.0, -1.0, 1.0]),))

    def test_trivialization_round_trip(self):
        for parabolic in CASES:
            with self.subTest(parabolic=parabolic.to_dict()):
                for _ in range(10):
                    v = random_bundle_point(self.rng, parabolic)
                    x, xi = trivialize(v)
                    w = untrivialize(x, xi, parabolic)
                    self.assertLess(project(w).distance(x), 1e-8)
                    self.assertLess(flag_distance(forward_face(w), xi), 1e-8)
                    self.assertTrue(v.same_as(w))

    def test_projection_and_face_are_equivariant(self):
        for parabolic in CASES:
            with self.subTest(parabolic=parabolic.to_dict()):
                v = random_bundle_point(self.rng, parabolic)
                g = random_group_element(self.rng, parabolic.group, parabolic.n)
                self.assertLess(project(v.act(g)).distance(project(v).act(g)), 1e-8)
                self.assertTrue(forward_face(v.act(g)).same_as(flag_action(g, forward_face(v)), 1e-8))

    def test_flow_keeps_the_face_at_infinity(self):
        for parabolic in CASES:
            with self.subTest(parabolic=parabolic.to_dict()):
                v = random_bundle_point(self.rng, parabolic)
                rows = flow_orbit(v, np.linspace(0.0, 3.0, 7))
                self.assertLess(max(drift for _, _, drift in rows), 1e-8)
                self.assertAlmostEqual(rows[0][1].distance(project(v)), 0.0, places=9)
                self.assertGreater(rows[-1][1].distance(project(v)), 1.0)

    def test_flow_refuses_elements_outside_a_prime(self):
        v = ChamberBundlePoint.base(q_minus())
        with self.assertRaises(MembershipError):
            chamber_flow(v, ParabolicData.minimal(SL, 3).random_a(self.rng))

    def test_leaves(self):
        v = random_bundle_point(self.rng, q_minus())
        self.assertTrue(leaf_membership(flow_for_time(v, 2.0), forward_face(v)).holds)
        self.assertTrue(unstable_leaf_membership(flow_for_time(v, -2.0), backward_face(v)).holds)
        other = random_bundle_point(self.rng, q_minus())
        self.assertFalse(leaf_membership(other, forward_face(v)).holds)

    def test_fibers(self):
        for parabolic in CASES:
            with self.subTest(parabolic=parabolic.to_dict()):
                v = random_bundle_point(self.rng, parabolic)
                w = random_fiber_point(self.rng, v)
                self.assertLess(project(w).distance(project(v)), 1e-8)
                self.assertLess(fiber_distance(v, v), 1e-9)
                self.assertGreater(fiber_distance(v, w), 0.0)
        far = flow_for_time(v, 2.0)
        with self.assertRaises(ConstraintViolationError):
            fiber_distance(v, far)

    def test_group_acts_isometrically_on_fibers(self):
        for parabolic in CASES:
            with self.subTest(parabolic=parabolic.to_dict()):
                for _ in range(5):
                    v = random_bundle_point(self.rng, parabolic)
                    w = random_fiber_point(self.rng, v)
                    g = random_group_element(self.rng, parabolic.group, parabolic.n)
                    self.assertLess(abs(fiber_distance(v.act(g), w.act(g)) - fiber_distance(v, w)), 1e-9)
                    self.assertLess(fiber_isometry_residual(v, w, g), 1e-9)

    def test_flow_orbit_lies_in_the_stable_and_opposite_unstable_leaves(self):
        parabolic = ParabolicData.minimal(PSL2_SQUARED)
        v = random_bundle_point(self.rng, parabolic)
        xi = forward_face(v)
        xi_star = opposite_face(project(v), xi, parabolic)
        self.assertLess(flag_distance(xi_star, backward_face(v)), 1e-9)
        self.assertGreater(flag_distance(xi_star, xi), 1e-6)
        for t, base, _ in flow_orbit(v, np.linspace(-2.0, 2.0, 9)):
            w = flow_for_time(v, t)
            self.assertLess(project(w).distance(base), 1e-9)
            self.assertTrue(leaf_membership(w, xi).holds)
            self.assertTrue(unstable_leaf_membership(w, xi_star).holds)
        self.assertLess(leaf_intersection_defect(v, np.linspace(-2.0, 2.0, 9)), 1e-9)
        for parabolic in CASES[:2]:
            with self.subTest(parabolic=parabolic.to_dict()):
                u = random_bundle_point(self.rng, parabolic)
                self.assertLess(leaf_intersection_defect(u, [-1.0, 0.0, 1.0]), 1e-9)

    def test_fiber_directions_are_orthogonal_to_p(self):
        expected = {0: (3, 5), 1: (2, 5), 2: (2, 4)}
        for i, parabolic in enumerate(CASES):
            with self.subTest(parabolic=parabolic.to_dict()):
                report = orthogonality_report(parabolic)
                self.assertEqual(report.horizontal_defect, 0.0)
                self.assertEqual((report.fiber_dimension, report.horizontal_dimension), expected[i])

    def test_parallel_set_is_fixed_by_the_retraction(self):
        for parabolic in CASES:
            with self.subTest(parabolic=parabolic.to_dict()):
                grid = self.rng.normal(size=(5, len(a_q_basis(parabolic))))
                self.assertLess(parallel_set_sample(parabolic, grid).fixed_point_defect, 1e-8)
        with self.assertRaises(DegenerateInputError):
            parallel_set_sample(q_minus(), np.zeros((2, 7)))

    def test_retraction_does_not_expand(self):
        for parabolic in CASES:
            with self.subTest(parabolic=parabolic.to_dict()):
                report = retraction_non_expansion(self.rng, parabolic, 20)
                self.assertTrue(report.holds, report.to_dict())
                self.assertLessEqual(report.worst_ratio, 1.0 + 1e-6)


if __name__ == '__main__':
    unittest.main()
