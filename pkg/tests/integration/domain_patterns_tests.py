import unittest

from liras import pipeline
from liras.domains import resolve_bundle

from . import recorded
from . import scene
from . import scene_bundle
from . import walk


def run_walk(bundle, rows, steps, stimulus_id):
    stimulus, env, start = scene(bundle, rows, stimulus_id)
    states = walk(env, start, steps)
    return pipeline.run_stimulus(recorded(stimulus, env, states, bundle.legend), bundle)


def astronaut(**options):
    return resolve_bundle(
        "astronaut", cost_levels=[1.0, 4.0], reward_levels=[1.0, 5.0], **options
    )


class FoodtruckPatternTests(unittest.TestCase):
    """Both spots sit behind buildings; the lebanese truck is parked in the left one."""

    ROWS = [
        "S+L # . # S+K",
        ". # @ # .",
        ". . . . .",
    ]
    # the left spot comes into view on the third step, then the student heads back
    STEPS = [
        ("down", "student"),
        ("left", "student"),
        ("left", "student"),
        ("right", "student"),
        ("right", "student"),
        ("right", "student"),
    ]
    KOREAN = "(at student korean)"

    def test_turning_back_reveals_the_unseen_truck(self):
        report = run_walk(scene_bundle("foodtruck"), self.ROWS, self.STEPS, "turn-back")
        korean = [snapshot["goal"][self.KOREAN] for snapshot in report.marginals]
        self.assertAlmostEqual(korean[0], 0.5)
        self.assertGreater(report.ratings()[f"goal:{self.KOREAN}"], 0.9)
        self.assertGreater(korean[-1], korean[3])


class AstronautPatternTests(unittest.TestCase):
    def test_detour_around_rock(self):
        rows = [
            "s s s",
            "s+@ r s+F",
            "s s s",
        ]
        steps = [
            ("up-sand", "astronaut"),
            ("right-sand", "astronaut"),
            ("right-sand", "astronaut"),
            ("down-sand", "astronaut"),
        ]
        ratings = run_walk(astronaut(packages=["food"]), rows, steps, "detour").ratings()
        self.assertGreater(ratings["cost:rock"], ratings["cost:sand"])

    def test_skipped_package_is_worth_less(self):
        rows = ["s s+F s+@ s s+T"]
        steps = [("right-sand", "astronaut"), ("right-sand", "astronaut")]
        bundle = astronaut(packages=["food", "tools"])
        report = run_walk(bundle, rows, steps, "skip-food")
        answers = dict(report.answers)
        self.assertEqual(answers["reward"].labels, ("food", "tools"))
        food, tools = answers["reward"].ratings
        # levels 1 and 5 are equally likely a priori
        self.assertLess(food, 3.0)
        self.assertGreater(tools, 3.0)

    def test_symmetric_map_rates_terrains_alike(self):
        # every step's likelihood depends only on the summed terrain costs
        rows = ["r+@ s r+F"]
        steps = [("right-rock", "astronaut"), ("right-sand", "astronaut")]
        ratings = run_walk(astronaut(packages=["food"]), rows, steps, "symmetric").ratings()
        self.assertAlmostEqual(ratings["cost:rock"], ratings["cost:sand"], places=9)
        self.assertGreater(ratings["cost:rock"], 2.5)


class AssistantPatternTests(unittest.TestCase):
    """Gem A is behind a locked red door; gem B is as close and open."""

    ROWS = [
        "A D_r @ . B",
        "# # k_r+& # #",
    ]
    # the principal waits at the door while the assistant takes the red key
    STEPS = [
        ("wait", "principal"),
        ("pickup-key", "assistant", "key1", "red"),
    ]
    GEM_A = "(has principal gem_a)"

    def test_fetching_a_key_points_at_the_gem_behind_its_door(self):
        report = run_walk(scene_bundle("m-dkg"), self.ROWS, self.STEPS, "fetch-key")
        gem_a = [snapshot["goal"][self.GEM_A] for snapshot in report.marginals]
        self.assertAlmostEqual(gem_a[0], 0.5)
        self.assertGreater(gem_a[2], gem_a[1])
        self.assertGreater(report.ratings()[f"goal:{self.GEM_A}"], 0.8)
