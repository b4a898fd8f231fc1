import unittest

import numpy as np

from rigidity_lab.comparison import half_squared_hessian_check, mixed_derivative_check, mixed_log_operator
from rigidity_lab.errors import ModelMismatchError
from rigidity_lab.manifolds import (EuclideanSpace, ModelPoint, ModelTangent, distance, parallel_transport,
                                    standard_models)


class ComparisonCase(unittest.TestCase):
    def test_half_squared_hessian_is_near_identity(self):
        rng = np.random.default_rng(3)
        for name, model in standard_models().items():
            with self.subTest(model=name):
                for _ in range(50):
                    x = model.random_point(rng, 1.0)
                    z = model.sample_ball(rng, x, 0.5, 1)[0]
                    check = half_squared_hessian_check(model, x, z)
                    self.assertTrue(check.holds, f"{check.defect} > {check.bound}")

    def test_mixed_derivative_is_near_minus_transport(self):
        rng = np.random.default_rng(4)
        for name, model in standard_models().items():
            with self.subTest(model=name):
                for _ in range(20):
                    x = model.random_point(rng, 1.0)
                    z = model.sample_ball(rng, x, 0.5, 1)[0]
                    check = mixed_derivative_check(model, x, z)
                    self.assertTrue(check.holds, f"{check.defect} > {check.bound}")

    def test_defect_vanishes_at_the_point(self):
        model = standard_models()["H2"]
        o = model.origin()
        check = half_squared_hessian_check(model, o, o)
        self.assertEqual(check.distance, 0.0)
        self.assertTrue(check.holds)

    def test_mixed_log_operator_on_points(self):
        flat = EuclideanSpace(2)
        x = ModelPoint(flat, np.array([0.5, -1.0]))
        z = ModelPoint(flat, np.array([2.0, 0.3]))
        operator = mixed_log_operator(x, z)
        image = operator.apply(ModelTangent(z, np.array([0.4, -0.7])))
        self.assertTrue(image.base.same_as(x))
        np.testing.assert_allclose(image.vector, [-0.4, 0.7], atol=1e-8)
        self.assertAlmostEqual(operator.norm(), 1.0, places=8)
        with self.assertRaises(ModelMismatchError):
            operator.apply(ModelTangent(x, np.array([1.0, 0.0])))

        model = standard_models()["H2"]
        x = ModelPoint(model, model.origin())
        z = ModelPoint(model, model.exp(model.origin(), np.array([0.3, 0.2, 0.0])))
        t = distance(x, z)
        v = ModelTangent.from_frame(z, np.array([1.0, 0.0]))
        image = mixed_log_operator(x, z).apply(v)
        gap = ModelTangent(x, image.vector + parallel_transport(z, x, v).vector)
        self.assertLessEqual(gap.norm(), 2.0 * t * t + 1e-6)


if __name__ == '__main__':
    unittest.main()
