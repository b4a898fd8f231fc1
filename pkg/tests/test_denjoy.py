import math
import unittest

import numpy as np

from rigidity_lab.boundary_actions import semiconjugacy_residual, sup_distance
from rigidity_lab.circle import FiniteAction, rotation
from rigidity_lab.denjoy import (collapse_from_tree, denjoy_blowup, geometric_schedule, inverse_square_schedule,
                                 invariance_check, monotonicity_defect, orbit)
from rigidity_lab.errors import ConstraintViolationError, DegenerateInputError

TWO_PI = 2 * math.pi
GOLDEN = TWO_PI * (math.sqrt(5.0) - 1.0) / 2.0


def rotation_action(angle: float = GOLDEN) -> FiniteAction:
    return FiniteAction({"r": rotation(angle, label="r")}, inverse_labels={"r": "R"})


class ScheduleCase(unittest.TestCase):
    def test_schedules(self):
        self.assertEqual(geometric_schedule(3), [1 / 16, 1 / 32, 1 / 64])
        schedule = inverse_square_schedule(10, 0.5)
        self.assertAlmostEqual(sum(schedule), 0.5, places=12)
        self.assertTrue(all(a > b for a, b in zip(schedule, schedule[1:])))


class OrbitCase(unittest.TestCase):
    def test_breadth_first_orbit_of_a_rotation(self):
        points, depths, images = orbit(rotation_action(), 0.0, 9)
        self.assertEqual(len(points), 9)
        self.assertEqual(depths[:3], [0, 1, 1])
        self.assertEqual(max(depths), 4)
        for i, j in enumerate(images["r"]):
            if j >= 0:
                self.assertAlmostEqual(float(np.mod(points[i] + GOLDEN - points[j] + 1.0, TWO_PI)), 1.0, places=9)
        self.assertIn(-1, images["r"])

    def test_finite_orbits_are_refused(self):
        with self.assertRaises(ConstraintViolationError):
            orbit(rotation_action(0.25 * TWO_PI), 0.0, 10)


class BlowupCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.base = rotation_action()
        cls.blowup = denjoy_blowup(cls.base, 0.0, geometric_schedule(32))

    def test_period_grows_by_the_inserted_length(self):
        self.assertAlmostEqual(self.blowup.inserted_length, sum(geometric_schedule(32)), places=14)
        self.assertAlmostEqual(self.blowup.period, TWO_PI + self.blowup.inserted_length, places=12)

    def test_collapse_semi_conjugates_onto_the_base(self):
        self.assertLess(semiconjugacy_residual(self.blowup.action, self.base, self.blowup.collapse), 1e-9)
        self.assertLess(monotonicity_defect(self.blowup.collapse), 1e-9)
        self.assertLess(sup_distance(self.blowup.collapse, collapse_from_tree(self.blowup)), 1e-9)

    def test_inserted_intervals(self):
        for i in (0, 1, 7):
            with self.subTest(i=i):
                begin, end = self.blowup.interval_bounds(i)
                self.assertAlmostEqual(end - begin, self.blowup.lengths[i], places=14)
                self.assertEqual(self.blowup.interval_at(0.5 * (begin + end)), i)
                collapsed = self.blowup.collapse(np.array([begin, 0.5 * (begin + end), end]))
                np.testing.assert_allclose(collapsed, self.blowup.points[i], atol=1e-12)
        self.assertIsNone(self.blowup.interval_at(self.blowup.interval_bounds(0)[1] + 1e-3))

    def test_generators_are_affine_on_inserted_intervals(self):
        f = self.blowup.action.letter_map("r")
        i = 0
        j = self.blowup.images["r"][i]
        begin, end = self.blowup.interval_bounds(i)
        mid = 0.5 * (begin + end)
        self.assertAlmostEqual(float(f.derivative_at(mid)), self.blowup.lengths[j] / self.blowup.lengths[i],
                               places=12)
        self.assertEqual(self.blowup.interval_at(float(f.lift(np.float64(mid)))), j)

    def test_interior_points_follow_the_orbit(self):
        report = invariance_check(self.blowup, "r", 100)
        self.assertGreaterEqual(report.steps_inside, 10)
        self.assertEqual(report.left_at, report.steps_inside + 1)
        self.assertEqual(report.numeric_agreement, report.numeric_steps)
        self.assertFalse(report.holds)


class DegenerateBlowupCase(unittest.TestCase):
    def test_empty_schedule_returns_the_base(self):
        base = rotation_action()
        blowup = denjoy_blowup(base, 0.0, [0.0, 0.0])
        self.assertIs(blowup.action, base)
        self.assertEqual(blowup.inserted_length, 0.0)
        with self.assertRaises(DegenerateInputError):
            invariance_check(blowup)

    def test_negative_lengths_are_refused(self):
        with self.assertRaises(DegenerateInputError):
            denjoy_blowup(rotation_action(), 0.0, [0.1, -0.1])

    def test_oversized_schedule_is_halved(self):
        blowup = denjoy_blowup(rotation_action(), 0.0, [4.0])
        self.assertAlmostEqual(blowup.inserted_length, 2.0, places=14)


if __name__ == '__main__':
    unittest.main()
