import math
import unittest

import numpy as np

from rigidity_lab.errors import GroupTypeError, MembershipError
from rigidity_lab.lie import (PSL2, PSL2_SQUARED, SL, BoundaryPoint, GroupElement, ParabolicData, block_pattern,
                              boundary_angle_action, boundary_angle_derivative, cartan, cocycle, exp_diagonal,
                              flag_action, generalized_iwasawa, iwasawa, q_minus, q_plus, random_flag,
                              random_group_element, reverse_generalized_iwasawa)


def wrapped(delta):
    return np.angle(np.exp(1j * np.asarray(delta)))


class GroupElementCase(unittest.TestCase):
    def test_determinant_is_checked(self):
        with self.assertRaises(MembershipError):
            GroupElement.sl(np.diag([2.0, 1.0, 1.0]))
        with self.assertRaises(GroupTypeError):
            GroupElement.psl2(np.eye(3))
        with self.assertRaises(GroupTypeError):
            GroupElement("GL", (np.eye(2),))

    def test_projective_elements_forget_the_sign(self):
        g = GroupElement.psl2(-np.eye(2))
        np.testing.assert_allclose(g.factors[0], np.eye(2))
        h = GroupElement.psl2([[2.0, 1.0], [1.0, 1.0]])
        minus_h = GroupElement.psl2([[-2.0, -1.0], [-1.0, -1.0]])
        self.assertEqual(h.distance_to(minus_h), 0.0)

    def test_incompatible_products_are_refused(self):
        with self.assertRaises(GroupTypeError):
            GroupElement.identity(SL, 3) @ GroupElement.identity(SL, 2)
        with self.assertRaises(GroupTypeError):
            GroupElement.identity(PSL2) @ GroupElement.identity(PSL2_SQUARED)

    def test_dict_round_trip(self):
        g = random_group_element(np.random.default_rng(1), PSL2_SQUARED)
        self.assertLess(GroupElement.from_dict(g.to_dict()).distance_to(g), 1e-15)


class DecompositionCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(13)

    def test_iwasawa_reconstructs(self):
        for group, n in ((SL, 2), (SL, 3), (SL, 4), (PSL2, 2), (PSL2_SQUARED, 2)):
            with self.subTest(group=group, n=n):
                minimal = ParabolicData.minimal(group, n)
                for _ in range(10):
                    g = random_group_element(self.rng, group, n)
                    k, a, u = iwasawa(g)
                    self.assertLess((k @ a @ u).distance_to(g), 1e-9)
                    for m in k.factors:
                        np.testing.assert_allclose(m.T @ m, np.eye(len(m)), atol=1e-10)
                    self.assertTrue(minimal.in_a(a))
                    self.assertTrue(minimal.in_n(u))

    def test_upper_triangular_input_has_trivial_k(self):
        g = GroupElement.sl([[2.0, 1.0, -3.0], [0.0, 0.5, 4.0], [0.0, 0.0, 1.0]])
        k, a, u = iwasawa(g)
        np.testing.assert_allclose(k.factors[0], np.eye(3), atol=1e-12)
        np.testing.assert_allclose(np.diag(a.factors[0]), [2.0, 0.5, 1.0], atol=1e-12)

    def test_generalized_iwasawa_lands_in_the_right_subgroups(self):
        for parabolic in (q_minus(), q_plus(), ParabolicData.sl(4, {2}), ParabolicData.psl2_squared({1})):
            with self.subTest(parabolic=parabolic.to_dict()):
                for _ in range(10):
                    g = random_group_element(self.rng, parabolic.group, parabolic.n)
                    k, a, u = generalized_iwasawa(g, parabolic)
                    self.assertLess((k @ a @ u).distance_to(g), 1e-9)
                    self.assertTrue(parabolic.in_a(a))
                    self.assertTrue(parabolic.in_n(u))
                    n_, a_, k_ = reverse_generalized_iwasawa(g, parabolic)
                    self.assertLess((n_ @ a_ @ k_).distance_to(g), 1e-9)
                    self.assertTrue(parabolic.in_n(n_))

    def test_cartan_reconstructs_with_decreasing_exponents(self):
        for _ in range(10):
            g = random_group_element(self.rng, SL, 3)
            k1, hs, k2 = cartan(g)
            self.assertLess((k1 @ exp_diagonal(g, hs) @ k2).distance_to(g), 1e-9)
            self.assertTrue(np.all(np.diff(hs[0]) <= 1e-12))
            self.assertAlmostEqual(float(np.sum(hs[0])), 0.0, places=10)


class ParabolicCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(17)

    def test_theta_must_be_simple_roots(self):
        with self.assertRaises(GroupTypeError):
            ParabolicData.sl(3, {3})
        with self.assertRaises(GroupTypeError):
            ParabolicData.psl2_squared({0})

    def test_partitions(self):
        self.assertEqual(q_minus().partitions, ((2, 1),))
        self.assertEqual(q_plus().partitions, ((1, 2),))
        self.assertEqual(ParabolicData.psl2_squared({1}).partitions, ((1, 1), (2,)))
        self.assertEqual(q_minus().opposite(), q_plus())

    def test_langlands_decomposition_of_parabolic_elements(self):
        for parabolic in (q_minus(), q_plus(), ParabolicData.minimal(SL, 3), ParabolicData.psl2_squared({2})):
            with self.subTest(parabolic=parabolic.to_dict()):
                q = parabolic.random_parabolic(self.rng)
                self.assertTrue(parabolic.in_parabolic(q))
                m, a, u = parabolic.decompose(q)
                self.assertLess((m @ a @ u).distance_to(q), 1e-9)
                self.assertTrue(parabolic.in_m(m))
                self.assertTrue(parabolic.in_a(a))
                self.assertTrue(parabolic.in_n(u))
                u_, a_, m_ = parabolic.decompose_reversed(q)
                self.assertLess((u_ @ a_ @ m_).distance_to(q), 1e-9)

    def test_generic_elements_are_not_parabolic(self):
        g = random_group_element(self.rng, SL, 3)
        self.assertFalse(q_minus().in_parabolic(g))
        with self.assertRaises(MembershipError):
            q_minus().levi_projection(g)

    def test_a_prime_elements_are_block_scalar(self):
        for parabolic in (q_minus(), q_plus()):
            with self.subTest(parabolic=parabolic.to_dict()):
                self.assertTrue(parabolic.in_a_prime(parabolic.random_a_prime(self.rng)))
                self.assertTrue(parabolic.in_a_prime(parabolic.flow_element(1.5)))
        self.assertFalse(q_minus().in_a_prime(ParabolicData.minimal(SL, 3).random_a(self.rng)))

    def test_block_patterns(self):
        expected_minus = [['1', '0', '*'], ['0', '1', '*'], ['0', '0', '1']]
        expected_plus = [['1', '*', '*'], ['0', '1', '0'], ['0', '0', '1']]
        for parabolic, expected in ((q_minus(), expected_minus), (q_plus(), expected_plus)):
            with self.subTest(parabolic=parabolic.to_dict()):
                u = parabolic.random_n(self.rng)
                self.assertEqual(block_pattern(parabolic, u).tolist(), expected)

    def test_parabolic_fixes_its_base_flag(self):
        for parabolic in (q_minus(), q_plus(), ParabolicData.minimal(SL, 3)):
            with self.subTest(parabolic=parabolic.to_dict()):
                base = parabolic.base_flag()
                q = parabolic.random_parabolic(self.rng)
                self.assertTrue(flag_action(q, base).same_as(base))
                g = random_group_element(self.rng, SL, 3)
                self.assertFalse(flag_action(g, base).same_as(base))


class CircleActionCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(19)

    def test_angles_round_trip(self):
        point = BoundaryPoint.from_angles([1.0, None])
        self.assertAlmostEqual(point.angles[0], 1.0, places=12)
        self.assertIsNone(point.angles[1])

    def test_rotation_acts_by_translation(self):
        c, s = math.cos(0.3), math.sin(0.3)
        rotation = np.array([[c, -s], [s, c]])
        psi = np.linspace(0.0, 6.0, 7)
        np.testing.assert_allclose(wrapped(boundary_angle_action(rotation, psi) - psi), 0.6, atol=1e-12)
        np.testing.assert_allclose(boundary_angle_derivative(rotation, psi), 1.0, atol=1e-12)

    def test_derivative_matches_finite_differences(self):
        h = 1e-6
        for _ in range(5):
            m = random_group_element(self.rng, PSL2).factors[0]
            psi = self.rng.uniform(0.0, 2 * math.pi, size=8)
            numeric = wrapped(boundary_angle_action(m, psi + h) - boundary_angle_action(m, psi - h)) / (2 * h)
            np.testing.assert_allclose(boundary_angle_derivative(m, psi), numeric, rtol=1e-6)

    def test_cocycle_chain_rule(self):
        for group, angles in ((PSL2, [0.4]), (PSL2_SQUARED, [0.4, 2.5])):
            with self.subTest(group=group):
                g = random_group_element(self.rng, group)
                h = random_group_element(self.rng, group)
                x = BoundaryPoint.from_angles(angles)
                product = cocycle(g @ h, x)
                chained = cocycle(g, flag_action(h, x)) * cocycle(h, x)
                self.assertAlmostEqual(product, chained, delta=1e-9 * max(1.0, product))

    def test_cocycle_needs_circle_points(self):
        g = random_group_element(self.rng, PSL2_SQUARED)
        with self.assertRaises(GroupTypeError):
            cocycle(g, BoundaryPoint.from_angles([0.4, None]))

    def test_cocycle_at_random_flags(self):
        parabolic = ParabolicData.minimal(PSL2_SQUARED)
        for _ in range(5):
            x = random_flag(self.rng, parabolic)
            self.assertEqual(x.dims, parabolic.flag_dims)
            g = random_group_element(self.rng, PSL2_SQUARED)
            expected = 1.0
            for m, psi in zip(g.factors, x.angles):
                expected *= float(boundary_angle_derivative(m, psi))
            self.assertAlmostEqual(cocycle(g, x), expected, delta=1e-12 * max(1.0, expected))

    def test_random_flags_have_the_parabolic_type(self):
        for parabolic in (q_minus(), q_plus(), ParabolicData.minimal(SL, 3)):
            with self.subTest(parabolic=parabolic.to_dict()):
                x = random_flag(self.rng, parabolic)
                self.assertEqual(x.dims, parabolic.flag_dims)
                self.assertFalse(x.same_as(parabolic.base_flag()))


if __name__ == '__main__':
    unittest.main()
