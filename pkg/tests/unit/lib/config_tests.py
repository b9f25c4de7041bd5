import unittest

from unittest.mock import patch

from liras.lib import config


HEURISTIC = config.OneOf(none="none", manhattan="manhattan")


class ScalarParserTests(unittest.TestCase):
    def test_string(self):
        self.assertEqual(config.String("claude-model"), "claude-model")
        with self.assertRaises(ValueError):
            config.String("")

    def test_integer(self):
        self.assertEqual(config.Integer("50000"), 50000)
        for text in ("", "lots", "1.5"):
            with self.subTest(text=text):
                with self.assertRaises(ValueError):
                    config.Integer(text)

    def test_float(self):
        self.assertEqual(config.Float("0.7"), 0.7)
        for text in ("", "warm", "nan", "inf"):
            with self.subTest(text=text):
                with self.assertRaises(ValueError):
                    config.Float(text)


class PositiveTests(unittest.TestCase):
    def test_accepts_values_above_zero(self):
        self.assertEqual(config.Positive(config.Integer)("5000"), 5000)
        self.assertAlmostEqual(config.Positive(config.Float)("0.25"), 0.25)

    def test_refuses_zero_and_below(self):
        with self.assertRaises(ValueError):
            config.Positive(config.Integer)("0")
        with self.assertRaises(ValueError):
            config.Positive(config.Float)("-1.5")


class OneOfTests(unittest.TestCase):
    def test_known_choice(self):
        self.assertEqual(HEURISTIC("manhattan"), "manhattan")

    def test_unknown_choice_lists_the_options(self):
        with self.assertRaises(ValueError) as context:
            HEURISTIC("euclidean")
        self.assertIn("'manhattan'", str(context.exception))


class OptionalTests(unittest.TestCase):
    def test_blank_gives_default(self):
        self.assertIsNone(config.Optional(config.Integer)(""))
        self.assertEqual(config.Optional(config.Integer, default=8)(""), 8)

    def test_present_value_is_still_checked(self):
        self.assertEqual(config.Optional(config.Integer)("3"), 3)
        with self.assertRaises(ValueError):
            config.Optional(config.Positive(config.Integer))("-3")


@patch.dict("os.environ", {"LIRAS_TEST_KEY": "sekrit", "NOT_PROVIDED": ""})
class DefaultFromEnvTests(unittest.TestCase):
    def test_falls_back_to_environment(self):
        parser = config.DefaultFromEnv(config.String, "LIRAS_TEST_KEY")
        self.assertEqual(parser(""), "sekrit")

    def test_configured_value_wins(self):
        parser = config.DefaultFromEnv(config.String, "LIRAS_TEST_KEY")
        self.assertEqual(parser("explicit"), "explicit")

    def test_nothing_anywhere(self):
        parser = config.DefaultFromEnv(config.String, "NOT_PROVIDED")
        with self.assertRaises(ValueError) as context:
            parser("")
        self.assertIn("$NOT_PROVIDED", str(context.exception))

    def test_fallback(self):
        parser = config.DefaultFromEnv(config.Integer, "NOT_PROVIDED", 5)
        self.assertEqual(parser(""), 5)

    def test_environment_read_at_parse_time(self):
        parser = config.DefaultFromEnv(config.String, "LIRAS_LATE_KEY")
        with patch.dict("os.environ", {"LIRAS_LATE_KEY": "late"}):
            self.assertEqual(parser(""), "late")


class ParseConfigTests(unittest.TestCase):
    LAYOUT = {
        "planner": {
            "node_budget": config.Optional(config.Positive(config.Integer), default=10 ** 6),
            "heuristic": config.Optional(HEURISTIC, default="none"),
        },
        "synthesis": {
            "model": config.String,
            "budget": config.Optional(config.Positive(config.Float)),
        },
    }

    def test_nested_namespace(self):
        result = config.parse_config(
            {"planner.heuristic": "manhattan", "synthesis.model": "drafter"}, self.LAYOUT
        )
        self.assertEqual(result.planner.heuristic, "manhattan")
        self.assertEqual(result.planner.node_budget, 10 ** 6)
        self.assertEqual(result.synthesis.model, "drafter")
        self.assertIsNone(result.synthesis.budget)
        self.assertEqual(result["planner"]["heuristic"], "manhattan")

    def test_missing_required_setting(self):
        with self.assertRaises(config.ConfigurationError) as context:
            config.parse_config({}, self.LAYOUT)
        self.assertEqual(context.exception.key, "synthesis.model")

    def test_bad_value_names_the_key(self):
        raw = {"synthesis.model": "drafter", "planner.node_budget": "0"}
        with self.assertRaises(config.ConfigurationError) as context:
            config.parse_config(raw, self.LAYOUT)
        self.assertEqual(context.exception.key, "planner.node_budget")
        self.assertIsInstance(context.exception.error, ValueError)

    def test_misspelt_setting_is_refused(self):
        raw = {"synthesis.model": "drafter", "planner.heurstic": "manhattan"}
        with self.assertRaises(config.ConfigurationError) as context:
            config.parse_config(raw, self.LAYOUT)
        self.assertEqual(context.exception.key, "planner.heurstic")
        self.assertIn("unknown setting", str(context.exception))

    def test_layout_mistakes_are_programming_errors(self):
        with self.assertRaises(AssertionError):
            config.parse_config({}, {"planner.node_budget": config.Integer})
        with self.assertRaises(AssertionError):
            config.parse_config({}, {"planner": 37})
