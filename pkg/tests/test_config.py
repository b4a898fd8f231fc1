import os
import tempfile
import unittest

from rigidity_lab.config import (DEFAULT_TOLERANCE, SUBCOMMAND_PARAMETERS, ExperimentConfig, as_floats, build_config,
                                 coerce, load_parameter_file)
from rigidity_lab.errors import ConfigError


class BuildConfigCase(unittest.TestCase):
    def test_defaults(self):
        config = build_config("rho-alpha", {})
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.tol, DEFAULT_TOLERANCE)
        self.assertEqual(config.out, "out")
        self.assertEqual(config.get("trials"), 1000)
        self.assertEqual(config.floats("alphas"), [0.0, 0.5, 1.0, 2.0])
        self.assertEqual(config.resolved(), SUBCOMMAND_PARAMETERS["rho-alpha"])

    def test_flags_override_the_file(self):
        config = build_config("rho-alpha", {"trials": 20, "seed": 3}, {"trials": "10", "grid": 8})
        self.assertEqual(config.get("trials"), 20)
        self.assertEqual(config.get("grid"), 8)
        self.assertEqual(config.seed, 3)
        self.assertEqual(config.resolved()["residual_bound"], 1e-9)

    def test_dashed_keys_are_accepted(self):
        config = build_config("expansion", {"max-word-length": "4"})
        self.assertEqual(config.get("max_word_length"), 4)

    def test_unknown_names_are_refused(self):
        with self.assertRaises(ConfigError):
            build_config("no-such-suite", {})
        with self.assertRaises(ConfigError):
            build_config("denjoy", {"alphas": "0,1"})
        with self.assertRaises(ConfigError):
            ExperimentConfig("denjoy", parameters={"trials": 3})

    def test_seed_must_be_unsigned(self):
        with self.assertRaises(ConfigError):
            build_config("denjoy", {"seed": -1})


class CoercionCase(unittest.TestCase):
    def test_values_take_the_type_of_the_default(self):
        self.assertEqual(coerce("n", "12", 100), 12)
        self.assertEqual(coerce("window", "2.5", 10.0), 2.5)
        self.assertEqual(coerce("models", ["S2", "H2"], "S2,H2,SPD2"), "S2,H2")
        with self.assertRaises(ConfigError):
            coerce("n", 1.5, 100)
        with self.assertRaises(ConfigError):
            coerce("window", "wide", 10.0)

    def test_float_lists(self):
        self.assertEqual(as_floats("2, 4,8"), [2.0, 4.0, 8.0])
        self.assertEqual(as_floats([1, 2]), [1.0, 2.0])
        with self.assertRaises(ConfigError):
            as_floats("2,x")


class ParameterFileCase(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.directory.cleanup()

    def write(self, text: str) -> str:
        path = os.path.join(self.directory.name, "params.conf")
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path

    def test_key_value_lines(self):
        path = self.write("# trial count\n\ntrials=5\nseed=7\n")
        values = load_parameter_file(path)
        self.assertEqual(values, {"trials": 5, "seed": 7})
        config = build_config("rho-alpha", {}, values)
        self.assertEqual(config.get("trials"), 5)
        self.assertEqual(config.seed, 7)

    def test_malformed_lines_are_refused(self):
        with self.assertRaises(ConfigError):
            load_parameter_file(self.write("trials 5\n"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_parameter_file(os.path.join(self.directory.name, "missing.conf"))


if __name__ == '__main__':
    unittest.main()
