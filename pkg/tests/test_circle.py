import math
import unittest

import numpy as np

from rigidity_lab.circle import (FiniteAction, circle_distance, identity_map, mobius_map, rotation, rotation_number,
                                 trig_homeomorphism, unwrap_near)
from rigidity_lab.errors import ConstraintViolationError, ModelMismatchError
from rigidity_lab.lie import boundary_angle_action

TWO_PI = 2 * math.pi


def rotations(a: float, b: float, check_relations: bool = True) -> FiniteAction:
    return FiniteAction({"a": rotation(a, label="a"), "b": rotation(b, label="b")}, [("a", "b", "A", "B")],
                        {"a": "A", "b": "B"}, check_relations)


class CircleMapCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(29)
        self.m = np.array([[2.0, 1.0], [1.0, 1.0]])

    def test_distance_and_unwrapping(self):
        self.assertAlmostEqual(float(circle_distance(0.1, TWO_PI - 0.1)), 0.2, places=12)
        self.assertAlmostEqual(float(unwrap_near(TWO_PI - 0.1, 0.0)), -0.1, places=12)

    def test_rotation_number(self):
        self.assertAlmostEqual(rotation_number(rotation(0.25 * TWO_PI)), 0.25, places=9)
        self.assertAlmostEqual(rotation_number(identity_map()), 0.0, places=12)

    def test_mobius_lift_matches_the_boundary_action(self):
        f = mobius_map("m", self.m)
        psi = self.rng.uniform(0.0, TWO_PI, 100)
        np.testing.assert_allclose(circle_distance(f(psi), boundary_angle_action(self.m, psi)), 0.0, atol=1e-12)
        np.testing.assert_allclose(f.lift(psi + TWO_PI) - f.lift(psi), TWO_PI, atol=1e-12)
        self.assertTrue(np.all(np.diff(f.lift(np.linspace(0.0, 2 * TWO_PI, 1000))) > 0))

    def test_mobius_inverse(self):
        f = mobius_map("m", self.m)
        y = np.linspace(0.0, TWO_PI, 50, endpoint=False)
        np.testing.assert_allclose(f.lift(f.inverse_lift(y)), y, atol=1e-9)

    def test_trig_homeomorphism(self):
        h = trig_homeomorphism(0.2, 2, 0.3)
        x = np.linspace(0.0, TWO_PI, 200)
        self.assertLessEqual(float(np.max(np.abs(h.lift(x) - x))), 0.2 + 1e-12)
        np.testing.assert_allclose(h.inverse_lift(h.lift(x)), x, atol=1e-12)
        with self.assertRaises(ConstraintViolationError):
            trig_homeomorphism(0.6, 2)

    def test_composition_derivative(self):
        f = mobius_map("m", self.m).compose(trig_homeomorphism(0.3))
        x = np.linspace(0.1, 6.0, 20)
        h = 1e-6
        numeric = (f.lift(x + h) - f.lift(x - h)) / (2 * h)
        np.testing.assert_allclose(f.derivative_at(x), numeric, rtol=1e-6)

    def test_composition_needs_matching_periods(self):
        with self.assertRaises(ModelMismatchError):
            rotation(0.1).compose(rotation(0.1, period=1.0))

    def test_negative_iterates_use_the_inverse(self):
        f = rotation(0.3)
        self.assertAlmostEqual(float(f.iterate(1.0, -3)), 0.1, places=12)
        g = trig_homeomorphism(0.1)
        self.assertAlmostEqual(float(g.iterate(g.iterate(0.7, 4), -4)), 0.7, places=10)


class FiniteActionCase(unittest.TestCase):
    def test_relations_are_checked(self):
        self.assertLess(rotations(0.3, 1.1).relation_residual(), 1e-12)
        with self.assertRaises(ConstraintViolationError):
            FiniteAction({"a": rotation(0.3)}, [("a", "a")], {"a": "A"})
        self.assertGreater(FiniteAction({"a": rotation(0.3)}, [("a", "a")], {"a": "A"}, False).relation_residual(),
                           0.5)

    def test_words_act_right_to_left(self):
        action = FiniteAction({"m": mobius_map("m", np.array([[2.0, 1.0], [1.0, 1.0]])), "r": rotation(0.5)},
                              inverse_labels={"m": "M", "r": "R"})
        x = np.array([0.2, 1.3, 4.0])
        expected = action.letter_map("m")(action.letter_map("r")(x))
        np.testing.assert_allclose(circle_distance(action.evaluate(("m", "r"), x), expected), 0.0, atol=1e-12)
        np.testing.assert_allclose(circle_distance(action.evaluate(("m", "M"), x), x), 0.0, atol=1e-9)
        self.assertEqual(action.inverse_word(("m", "r")), ("R", "M"))

    def test_reduced_words(self):
        words = list(rotations(0.3, 1.1).reduced_words(2))
        self.assertEqual(len(words), 4 + 4 * 3)
        self.assertNotIn(("a", "A"), words)
        self.assertEqual(len(set(words)), len(words))

    def test_unknown_letters_and_periods(self):
        action = rotations(0.3, 1.1)
        with self.assertRaises(ModelMismatchError):
            action.letter_map("c")
        with self.assertRaises(ModelMismatchError):
            FiniteAction({"a": rotation(0.3), "b": rotation(0.1, period=1.0)})
        with self.assertRaises(ConstraintViolationError):
            FiniteAction({})

    def test_conjugate_action(self):
        action = rotations(0.3, 1.1)
        h = trig_homeomorphism(0.2, 1, 0.4)
        conjugated = action.conjugate(h)
        x = np.linspace(0.0, TWO_PI, 64, endpoint=False)
        word = ("a", "B", "b")
        expected = h.inverse()(action.evaluate(word, h(x)))
        np.testing.assert_allclose(circle_distance(conjugated.evaluate(word, x), expected), 0.0, atol=1e-10)
        self.assertLess(conjugated.relation_residual(), 1e-8)


if __name__ == '__main__':
    unittest.main()
