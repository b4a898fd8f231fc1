import unittest

import numpy as np

from rigidity_lab.barycenter import (WeightedDirac, affine_equivariance_check, containment_check, d_bar_d_point,
                                     d_bar_d_weight, hessian_Q, hessian_bounds, random_measure, resolve_point_oracle,
                                     resolve_weight_oracle, solve)
from rigidity_lab.errors import ConstraintViolationError, DiameterGuardError, ModelMismatchError
from rigidity_lab.manifolds import ModelPoint, Sphere, model_by_name, random_isometry, standard_models


def relative_error(value, reference) -> float:
    return float(np.linalg.norm(value - reference) / max(float(np.linalg.norm(reference)), 1e-6))


class BarycenterCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_solver_reaches_tolerance(self):
        for name, model in standard_models().items():
            with self.subTest(model=name):
                for _ in range(10):
                    mu = random_measure(model, self.rng, 4, 0.4 * model.barycenter_guard_radius)
                    result = solve(mu)
                    self.assertLess(result.gradient_residual, 1e-10)
                    self.assertGreater(result.hessian_min_eigenvalue, 0.75)

    def test_single_atom_is_its_own_barycenter(self):
        model = model_by_name("H2")
        z = model.random_point(self.rng, 1.0)
        mu = WeightedDirac.from_arrays(model, [1.0], [z])
        np.testing.assert_allclose(solve(mu).point.coords, z, atol=1e-12)

    def test_flat_barycenter_is_the_weighted_mean(self):
        model = model_by_name("flat")
        points = [np.array([0.0, 0.0]), np.array([0.1, 0.0]), np.array([0.0, 0.2])]
        weights = [0.5, 0.3, 0.2]
        mu = WeightedDirac.from_arrays(model, weights, points)
        np.testing.assert_allclose(solve(mu).point.coords, [0.03, 0.04], atol=1e-12)

    def test_two_equal_atoms_meet_at_the_midpoint(self):
        model = model_by_name("H2")
        x = model.origin()
        y = model.exp(x, np.array([0.2, 0.1, 0.0]))
        mu = WeightedDirac.from_arrays(model, [0.5, 0.5], [x, y])
        midpoint = model.exp(x, 0.5 * model.log(x, y))
        self.assertLess(model.dist(solve(mu).point.coords, midpoint), 1e-10)

    def test_hessian_of_the_variance(self):
        flat = model_by_name("flat")
        mu = WeightedDirac.from_arrays(flat, [0.5, 0.5], [np.array([0.0, 0.0]), np.array([1.0, 2.0])])
        x = ModelPoint(flat, np.array([3.0, -1.0]))
        np.testing.assert_allclose(hessian_Q(mu, x).matrix, np.eye(2), atol=1e-12)

        model = model_by_name("H2")
        mu = random_measure(model, self.rng, 4, 0.4 * model.barycenter_guard_radius)
        result = solve(mu)
        q = hessian_Q(mu, result.point)
        np.testing.assert_allclose(q.matrix, q.matrix.T, atol=1e-10)
        self.assertGreaterEqual(q.eigenvalues().min(), 1.0 - 1e-9)
        self.assertAlmostEqual(q.eigenvalues().min(), result.hessian_min_eigenvalue, places=8)
        with self.assertRaises(ModelMismatchError):
            hessian_Q(mu, x)

    def test_weights_must_sum_to_one(self):
        model = model_by_name("H2")
        with self.assertRaises(ConstraintViolationError):
            WeightedDirac.from_arrays(model, [0.5, 0.6], [model.origin(), model.origin()])

    def test_guard_radius_is_enforced(self):
        sphere = Sphere(2)
        north = sphere.origin()
        far = sphere.exp(north, np.array([0.5, 0.0, 0.0]))
        mu = WeightedDirac.from_arrays(sphere, [0.5, 0.5], [north, far])
        with self.assertRaises(DiameterGuardError):
            solve(mu)

    def test_hessian_bounds_hold(self):
        for name, model in standard_models().items():
            with self.subTest(model=name):
                for _ in range(10):
                    radius = float(self.rng.uniform(0.05, 0.45)) * model.barycenter_guard_radius
                    mu = random_measure(model, self.rng, 4, radius)
                    bounds = hessian_bounds(mu)
                    self.assertTrue(bounds.holds, bounds.to_dict())

    def test_barycenter_stays_in_the_doubled_ball(self):
        for name, model in standard_models().items():
            with self.subTest(model=name):
                center = model.random_point(self.rng, 1.0)
                radius = 0.3 * model.barycenter_guard_radius
                mu = random_measure(model, self.rng, 5, radius, center)
                self.assertTrue(containment_check(mu, ModelPoint(model, center), radius).holds)

    def test_barycenter_commutes_with_isometries(self):
        for name, model in standard_models().items():
            with self.subTest(model=name):
                mu = random_measure(model, self.rng, 4, 0.3 * model.barycenter_guard_radius)
                self.assertLess(affine_equivariance_check(mu, random_isometry(model, self.rng)), 1e-8)

    def test_weight_derivative_matches_re_solving(self):
        for name, model in standard_models().items():
            with self.subTest(model=name):
                mu = random_measure(model, self.rng, 4, 0.1)
                result = solve(mu)
                analytic = d_bar_d_weight(mu, 1, result).frame_coords()
                self.assertLess(relative_error(analytic, resolve_weight_oracle(mu, 1, result)), 1e-4)

    def test_point_derivative_matches_re_solving(self):
        for name, model in standard_models().items():
            with self.subTest(model=name):
                mu = random_measure(model, self.rng, 4, 0.1)
                result = solve(mu)
                direction = self.rng.normal(size=model.dimension)
                direction /= np.linalg.norm(direction)
                analytic = d_bar_d_point(mu, 2, result).matrix @ direction
                oracle = resolve_point_oracle(mu, 2, direction, result)
                self.assertLess(relative_error(analytic, oracle), 1e-4)


if __name__ == '__main__':
    unittest.main()
