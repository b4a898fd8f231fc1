import unittest

import numpy as np

from rigidity_lab.errors import ConstraintViolationError, DiameterGuardError
from rigidity_lab.metric_family import (MetricFamilyInstance, d_bar_d_metric, d_bar_total, graph_tilt_trend,
                                        random_instance, resolve_derivative)


def relative_error(value, reference) -> float:
    return float(np.linalg.norm(value - reference) / max(float(np.linalg.norm(reference)), 1e-6))


def two_atoms(kind: str, radius_rate: float, points, point_rates=None) -> MetricFamilyInstance:
    point_rates = np.zeros((2, 2)) if point_rates is None else point_rates
    return MetricFamilyInstance(kind, 1.0, radius_rate, np.array([0.5, 0.5]), np.zeros(2), np.asarray(points),
                                np.asarray(point_rates))


class MetricFamilyCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_constant_family_does_not_move(self):
        instance = two_atoms("hyperbolic", 0.0, [[0.3, 0.1], [0.35, 0.0]])
        np.testing.assert_allclose(d_bar_d_metric(instance).chart, np.zeros(2), atol=1e-12)

    def test_symmetric_pair_stays_at_the_midpoint(self):
        instance = two_atoms("sphere", 0.1, [[0.1, 0.0], [-0.1, 0.0]])
        np.testing.assert_allclose(d_bar_d_metric(instance).chart, np.zeros(2), atol=1e-8)

    def test_flat_family_moves_with_the_weighted_velocity(self):
        instance = random_instance("flat", self.rng, 0.1, vary_weights=False)
        total = d_bar_total(instance)
        expected = instance.weights0 @ instance.point_rates
        np.testing.assert_allclose(total.derivative.chart, expected, atol=1e-8)
        self.assertTrue(total.certificate.holds)
        self.assertLess(total.certificate.lhs, 1e-8)

    def test_metric_derivative_matches_re_solving(self):
        for kind in ("sphere", "hyperbolic"):
            with self.subTest(kind=kind):
                for _ in range(5):
                    instance = random_instance(kind, self.rng, 0.1)
                    analytic = d_bar_d_metric(instance).chart
                    oracle = resolve_derivative(instance, freeze_measure=True)
                    self.assertLess(relative_error(analytic, oracle), 1e-4)

    def test_total_derivative_matches_re_solving(self):
        for kind in ("flat", "sphere", "hyperbolic"):
            with self.subTest(kind=kind):
                for _ in range(5):
                    instance = random_instance(kind, self.rng, 0.1)
                    analytic = d_bar_total(instance).derivative.chart
                    self.assertLess(relative_error(analytic, resolve_derivative(instance)), 1e-4)

    def test_velocity_bound_holds_on_hyperbolic_families(self):
        for _ in range(20):
            certificate = d_bar_total(random_instance("hyperbolic", self.rng, 0.1)).certificate
            self.assertTrue(certificate.holds, certificate.to_dict())

    def test_graph_tilt_shrinks_with_the_diameter(self):
        rows = graph_tilt_trend([0.2, 0.1, 0.05, 0.025], self.rng, 5)
        means = [row.mean_tilt for row in rows]
        for a, b in zip(means, means[1:]):
            self.assertLessEqual(b, a)
        self.assertLess(means[-1], 0.5 * means[0])

    def test_guard_radius_is_enforced(self):
        instance = two_atoms("sphere", 0.0, [[0.0, 0.0], [0.5, 0.0]])
        with self.assertRaises(DiameterGuardError):
            d_bar_d_metric(instance)

    def test_weight_paths_must_sum_to_one(self):
        with self.assertRaises(ConstraintViolationError):
            MetricFamilyInstance("flat", 1.0, 0.0, np.array([0.5, 0.6]), np.zeros(2), np.zeros((2, 2)),
                                 np.zeros((2, 2)))
        with self.assertRaises(ConstraintViolationError):
            MetricFamilyInstance("torus", 1.0, 0.0, np.array([1.0]), np.zeros(1), np.zeros((1, 2)), np.zeros((1, 2)))


if __name__ == '__main__':
    unittest.main()
