import math
import unittest

import numpy as np

from rigidity_lab.circle import FiniteAction, circle_distance, rotation
from rigidity_lab.equivariant_map import (FTilde, build_f_tilde, busemann, direction_to_ideal_point,
                                          endpoint_of, equivariance_report, fiber_angle, graph_slope,
                                          leaf_proximity_report, perturbed_action, section_deviation,
                                          tangent_tilt_report, tilt_oracle)
from rigidity_lab.errors import ModelMismatchError
from rigidity_lab.fuchsian import H2, build_partition, genus_two_lattice, point_at
from rigidity_lab.manifolds import minkowski


class IdealPointCase(unittest.TestCase):
    def test_busemann_vanishes_at_the_origin(self):
        self.assertAlmostEqual(busemann(H2.origin(), 1.3), 0.0, places=14)
        z = point_at(1.3, 2.0)
        self.assertAlmostEqual(busemann(z, 1.3), -2.0, places=10)

    def test_direction_to_an_ideal_point_is_a_unit_tangent(self):
        z = point_at(0.4, 1.5)
        v = direction_to_ideal_point(z, 2.0)
        self.assertAlmostEqual(minkowski(v, v), 1.0, places=12)
        self.assertAlmostEqual(minkowski(z, v), 0.0, places=12)

    def test_fiber_angle_and_endpoint_are_inverse(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            z = H2.random_point(rng, 2.0)
            psi = float(rng.uniform(0.0, 2 * math.pi))
            self.assertLess(float(circle_distance(endpoint_of(z, fiber_angle(z, psi)), psi)), 1e-10)


class FTildeCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.lattice = genus_two_lattice()
        cls.partition = build_partition(cls.lattice, 0.5)
        cls.rho, _ = perturbed_action(cls.lattice, 0.02)
        cls.f = build_f_tilde(cls.lattice, cls.partition, cls.rho)

    def test_labels_must_match_the_lattice(self):
        action = FiniteAction({"r": rotation(0.1)})
        with self.assertRaises(ModelMismatchError):
            FTilde(self.lattice, self.partition, action)

    def test_unperturbed_action_gives_the_tautological_section(self):
        f0 = build_f_tilde(self.lattice, self.partition, self.lattice.boundary_action())
        rng = np.random.default_rng(53)
        points = self.lattice.sample_domain(rng, 10)
        xis = rng.uniform(0.0, 2 * math.pi, 10)
        self.assertLess(section_deviation(f0, points, xis), 1e-9)

    def test_equivariance(self):
        report = equivariance_report(self.f, np.random.default_rng(59), 10)
        self.assertLess(report.residual, 1e-8)
        self.assertLess(report.max_atom_diameter, 0.5 * math.pi)
        self.assertLess(report.section_deviation, 0.5)

    def test_slope_matches_finite_differences(self):
        rng = np.random.default_rng(61)
        for x in self.lattice.sample_domain(rng, 3):
            xi = float(rng.uniform(0.0, 2 * math.pi))
            slope, _, _ = graph_slope(self.f, x, xi)
            np.testing.assert_allclose(slope, tilt_oracle(self.f, x, xi), atol=1e-6)

    def test_tangent_tilt_stays_within_budget(self):
        report = tangent_tilt_report(self.f, np.random.default_rng(67), 10)
        self.assertTrue(report.within_budget, report.worst_slack)
        self.assertEqual(len(report.rows), 10)

    def test_leaf_proximity(self):
        report = leaf_proximity_report(self.f, 1.0, H2.origin(), 1.0, rings=2, spokes=6)
        self.assertEqual(len(report.rows), 1 + 2 * 6)
        self.assertLess(report.sup_distance, 0.5)


if __name__ == '__main__':
    unittest.main()
