import unittest

from liras.domains import astronaut
from liras.lib import LirasError
from liras.world import apply
from liras.world import state_from_init


SAND_THEN_ROCK = (
    "(= (xloc astronaut) 1) (= (yloc astronaut) 1)",
    "(= (xloc food) 2) (= (yloc food) 1)",
    "(= (sand) (bit-matrix (1 0 0 0 0) (1 1 1 1 1) (1 1 1 1 1) (1 1 1 1 1) (1 1 1 1 1)))",
    "(= (rock) (bit-matrix (0 1 1 1 1) (0 0 0 0 0) (0 0 0 0 0) (0 0 0 0 0) (0 0 0 0 0)))",
)


class AstronautTests(unittest.TestCase):
    def test_hypothesis_grids(self):
        cfg = astronaut.build_astronaut().config
        self.assertEqual(len(cfg.costs), len(astronaut.DEFAULT_COST_LEVELS) ** 2)
        self.assertEqual(len(cfg.rewards), len(astronaut.DEFAULT_REWARD_LEVELS) ** 2)
        self.assertEqual(cfg.query, ("cost", "reward"))

        cheap_sand = cfg.costs[len(astronaut.DEFAULT_COST_LEVELS) - 1]
        self.assertEqual(cheap_sand.cost("up-sand"), 0.1)
        self.assertEqual(cheap_sand.cost("left-rock"), 8.0)
        self.assertEqual(cheap_sand.cost("pickup"), astronaut.PICKUP_COST)
        self.assertEqual(len(cheap_sand.costs), 9)

    def test_composite_goal(self):
        cfg = astronaut.build_astronaut(composite=True, reward_levels=(1.0, 5.0)).config
        self.assertEqual(
            cfg.goals[2].literals, ("(has astronaut food)", "(has astronaut water)")
        )
        # food worth 1, water worth 5
        self.assertEqual(cfg.rewards[1].values, (1.0, 5.0, 6.0))
        self.assertEqual(cfg.rewards[1].items, (("food", 1.0), ("water", 5.0)))
        self.assertEqual(cfg.rewards[1].item("water"), 5.0)
        self.assertIsNone(cfg.rewards[1].item("tools"))

    def test_costs_are_grouped_by_terrain(self):
        cfg = astronaut.build_astronaut(terrains=["sand", "rock"]).config
        self.assertEqual([name for name, _ in cfg.cost_groups], ["rock", "sand"])
        self.assertEqual(
            dict(cfg.cost_groups)["sand"], ("up-sand", "down-sand", "left-sand", "right-sand")
        )

    def test_moves_are_priced_by_the_cell_left(self):
        bundle = astronaut.build_astronaut()
        env = bundle.ground_template()
        state = state_from_init(env, " ".join(SAND_THEN_ROCK))
        self.assertNotIn(("right", ("astronaut",)), env.action_index)
        self.assertTrue(env.action("right-sand", "astronaut").precondition.holds(state))
        self.assertFalse(env.action("right-rock", "astronaut").precondition.holds(state))

        on_rock = apply(env, state, env.action("right-sand", "astronaut"))
        self.assertTrue(env.action("down-rock", "astronaut").precondition.holds(on_rock))
        holding = apply(env, on_rock, env.action("pickup", "astronaut", "food"))
        self.assertIn(env.fact_slot[("has", ("astronaut", "food"))], holding.facts)

    def test_legend(self):
        legend = astronaut.build_astronaut(terrains=["sand", "snow", "ice"]).legend
        self.assertEqual(legend.entry("sand").terrain, ("sand",))
        self.assertEqual(legend.entry("i").terrain, ("ice",))
        self.assertEqual(legend.entry("F").name, "food")

    def test_invalid(self):
        cases = [
            {"terrains": ["sand"]},
            {"packages": []},
            {"cost_levels": (0.0, 1.0)},
            {"cost_levels": ()},
            {"terrains": ["sand", "Sand"]},
        ]
        for kwargs in cases:
            with self.subTest(**kwargs):
                with self.assertRaises(LirasError):
                    astronaut.build_astronaut(**kwargs)
