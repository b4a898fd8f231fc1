import csv
import json
import os
import tempfile
import unittest
from contextlib import redirect_stdout
from io import StringIO

from rigidity_lab.config import build_config
from rigidity_lab.runner import SUITES, get_arguments, main, non_increasing, relative_error, run, summary_table


class ArgumentCase(unittest.TestCase):
    def test_every_suite_has_a_subcommand(self):
        for name in SUITES:
            with self.subTest(subcommand=name):
                self.assertEqual(get_arguments([name]).subcommand, name)

    def test_flags_reach_the_namespace(self):
        args = get_arguments(["rho-alpha", "--alpha", "0,1", "--trials", "5", "-s", "9"])
        self.assertEqual(args.alphas, "0,1")
        self.assertEqual(args.trials, 5)
        self.assertEqual(args.seed, 9)

    def test_unknown_flag_exits_with_usage_error(self):
        with redirect_stdout(StringIO()), self.assertRaises(SystemExit) as context:
            get_arguments(["denjoy", "--no-such-flag", "1"])
        self.assertEqual(context.exception.code, 2)

    def test_bad_config_file_exits_with_usage_error(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "bad.conf")
            with open(path, 'w', encoding='utf-8') as f:
                f.write("unknown_key=1\n")
            with self.assertRaises(SystemExit) as context:
                main(["denjoy", "-q", "-c", path])
            self.assertEqual(context.exception.code, 2)


class HelperCase(unittest.TestCase):
    def test_helpers(self):
        self.assertTrue(non_increasing([3.0, 2.0, 2.0, 1.0]))
        self.assertFalse(non_increasing([1.0, 2.0]))
        self.assertAlmostEqual(relative_error([1.0, 1.0], [1.0, 0.0]), 1.0)


class RunCase(unittest.TestCase):
    def test_collapse_witness_run_writes_report_and_scans(self):
        with tempfile.TemporaryDirectory() as directory:
            config = build_config("collapse-witness", {"out": directory, "iterations": 40})
            config.quiet = True
            config.csv = True
            with redirect_stdout(StringIO()) as printed:
                report = run(config)
            self.assertTrue(report.passed, summary_table(report))
            self.assertIn("PASS", printed.getvalue())
            with open(os.path.join(directory, "collapse-witness-seed0.json"), encoding='utf-8') as f:
                written = json.load(f)
            self.assertTrue(written["passed"])
            self.assertEqual(written["parameters"]["iterations"], 40)
            self.assertNotIn("runtime", written)
            with open(os.path.join(directory, "collapse-witness-seed0-traces.csv"), newline='') as f:
                rows = list(csv.reader(f))
            self.assertEqual(rows[0], ["theta0", "n", "theta", "xi", "eta"])
            self.assertEqual(len(rows), 1 + 2 * 41)
            monotone = report.assertion("theta0=0.3: monotone from step")
            self.assertEqual((monotone.value, monotone.bound), (0.0, 20.0))

    def test_chamber_suite_checks_fiber_isometry_and_leaves(self):
        with tempfile.TemporaryDirectory() as directory:
            config = build_config("chamber-suite", {"out": directory, "points": 4, "pairs": 20, "horizon": 3.0,
                                                    "round_trip_bound": 1e-8, "drift_bound": 1e-8})
            config.quiet = True
            with redirect_stdout(StringIO()):
                report = run(config)
            for label in ("SL(3) minimal", "Q-", "PSL2^2 minimal"):
                with self.subTest(parabolic=label):
                    self.assertTrue(report.assertion(f"{label}: G acts isometrically on the fibers").holds)
                    leaves = report.assertion(f"{label}: flow orbit in the stable and opposite unstable leaves")
                    self.assertTrue(leaves.holds, leaves.value)
                    self.assertIsNone(report.assertion(f"{label}: fiber directions orthogonal to p"))
                    self.assertIn(f"{label}_orthogonality", report.results)

    def test_rho_alpha_suite_scans_shrinking_alphas(self):
        with tempfile.TemporaryDirectory() as directory:
            config = build_config("rho-alpha", {"out": directory, "trials": 20, "grid": 8})
            config.quiet = True
            with redirect_stdout(StringIO()):
                report = run(config)
            self.assertTrue(report.assertion("continuity defect strictly decreasing as alpha -> 0").holds)
            alphas = [row[0] for row in report.results["continuity"]]
            self.assertEqual(alphas[-4:], [0.1, 0.05, 0.025, 0.0125])

    def test_main_exit_code_follows_the_report(self):
        with tempfile.TemporaryDirectory() as directory:
            with redirect_stdout(StringIO()), self.assertRaises(SystemExit) as context:
                main(["collapse-witness", "-q", "-o", directory, "--iterations", "30"])
            self.assertEqual(context.exception.code, 0)
            self.assertTrue(os.path.exists(os.path.join(directory, "collapse-witness-seed0.json")))


if __name__ == '__main__':
    unittest.main()
