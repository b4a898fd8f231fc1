import math
import unittest

import numpy as np

from rigidity_lab.errors import ConstraintViolationError
from rigidity_lab.fuchsian import (H2, IN_RADIUS, SIDES, build_partition, bump, bump_derivative, genus_two_lattice,
                                   label, partition_report, point_at)
from rigidity_lab.manifolds import mobius_on_hyperboloid


class LatticeCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.lattice = genus_two_lattice()

    def test_relator_and_side_pairings(self):
        self.assertEqual(len(self.lattice.relator), SIDES)
        self.assertLess(self.lattice.relator_defect(), 1e-9)
        self.assertLess(self.lattice.side_pairing_defect(), 1e-8)

    def test_generators_come_in_inverse_pairs(self):
        for k in range(SIDES):
            with self.subTest(k=k):
                m = self.lattice.matrix((label(k), self.lattice.inverse_labels[label(k)]))
                np.testing.assert_allclose(m, np.eye(2), atol=1e-10)

    def test_generators_translate_the_origin_by_twice_the_in_radius(self):
        distances = [H2.dist(H2.origin(), p) for p in self.lattice.orbit_points()]
        np.testing.assert_allclose(distances, 2 * IN_RADIUS, atol=1e-9)

    def test_reduce_to_domain(self):
        self.assertTrue(self.lattice.in_domain(H2.origin()))
        rng = np.random.default_rng(31)
        for _ in range(10):
            x = point_at(rng.uniform(0.0, 2 * math.pi), rng.uniform(2.0, 5.0))
            y, word = self.lattice.reduce_to_domain(x)
            self.assertTrue(self.lattice.in_domain(y, 1e-9))
            back = mobius_on_hyperboloid(self.lattice.matrix(word), y)
            np.testing.assert_allclose(back, x, rtol=1e-9, atol=1e-9)

    def test_tiles(self):
        self.assertEqual([w for w, _ in self.lattice.tiles(0.1)], [()])
        words = [w for w, _ in self.lattice.tiles(2 * IN_RADIUS + 0.01)]
        self.assertEqual(len(words), 1 + SIDES)
        self.assertTrue(all(len(w) <= 1 for w in words))

    def test_boundary_action_satisfies_the_relator(self):
        self.assertLess(self.lattice.boundary_action().relation_residual(1000), 1e-8)


class PartitionCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.lattice = genus_two_lattice()
        cls.partition = build_partition(cls.lattice, 0.5)

    def test_bump(self):
        self.assertAlmostEqual(float(bump(0.0)), math.exp(-1.0), places=15)
        self.assertEqual(float(bump(1.0)), 0.0)
        self.assertEqual(float(bump(1.5)), 0.0)
        h = 1e-6
        for t in (0.3, 0.7):
            numeric = (float(bump(t + h)) - float(bump(t - h))) / (2 * h)
            self.assertAlmostEqual(float(bump_derivative(t)), numeric, places=7)

    def test_chart_radius_must_lift(self):
        for radius in (0.0, 0.8):
            with self.subTest(radius=radius):
                with self.assertRaises(ConstraintViolationError):
                    build_partition(self.lattice, radius)

    def test_weights_form_a_partition_of_unity(self):
        rng = np.random.default_rng(37)
        for x in self.lattice.sample_domain(rng, 20) + [point_at(0.4, 3.5)]:
            terms, weights = self.partition.weights(x)
            self.assertAlmostEqual(float(weights.sum()), 1.0, places=12)
            self.assertTrue(np.all(weights >= 0.0))
            gradients = self.partition.weight_gradients(x, terms)
            np.testing.assert_allclose(gradients.sum(axis=0), 0.0, atol=1e-10)

    def test_partition_report(self):
        report = partition_report(self.partition, np.random.default_rng(41), samples=200, lift_pairs=20)
        self.assertTrue(report.holds, report.to_dict())
        self.assertGreaterEqual(report.max_multiplicity, 1)
        self.assertGreater(report.translates, 1)


if __name__ == '__main__':
    unittest.main()
