import unittest

from liras import pipeline

from . import dkg_variant
from . import recorded
from . import scene
from . import walk


GEM_A = "goal:(has player gem_a)"

# every step is the only shortest way to gem A
HALLWAY = ["A . @ . B"]
STEPS = [("left", "player"), ("left", "player"), ("pickup-gem", "player", "gem_a")]


class RationalityLimitTests(unittest.TestCase):
    def setUp(self):
        self.bundle = dkg_variant("single")
        stimulus, env, start = scene(self.bundle, HALLWAY, "hallway")
        self.stimulus = recorded(stimulus, env, walk(env, start, STEPS), self.bundle.legend)

    def posterior(self, beta):
        report = pipeline.run_stimulus(
            self.stimulus, self.bundle, pipeline.RunSettings(beta=beta)
        )
        return report.ratings()[GEM_A]

    def test_near_optimal_agent(self):
        self.assertGreaterEqual(self.posterior(100.0), 0.99)

    def test_near_random_agent(self):
        self.assertAlmostEqual(self.posterior(1e-6), 0.5, delta=1e-3)

    def test_confidence_grows_with_beta(self):
        posteriors = [self.posterior(beta) for beta in (0.1, 0.5, 1.0, 2.0, 5.0)]
        self.assertEqual(posteriors, sorted(posteriors))
        self.assertGreater(posteriors[0], 0.5)
