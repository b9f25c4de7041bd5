import random
import unittest

from liras.agent import CostProfile
from liras.oracle import exact_cost_to_go
from liras.oracle import ReachableGraph
from liras.planner import ManhattanHeuristic
from liras.planner import Planner

from . import dkg_variant
from . import scene


MAPS = 50
SHUFFLES = 3
INSTANCES = 1000
STATES_PER_MAP = 10


def random_rows(rng, rows=3, cols=4):
    """A DKG map with two gems, scattered walls and sometimes a key and its door."""
    cells = [["."] * cols for _ in range(rows)]
    free = [(row, col) for row in range(rows) for col in range(cols)]
    rng.shuffle(free)
    (pr, pc), (ar, ac), (br, bc), (kr, kc), (dr, dc) = free[:5]
    cells[pr][pc] = "@"
    cells[ar][ac] = "A"
    cells[br][bc] = "B"
    rest = free[5:]
    if rng.random() < 0.5:
        cells[kr][kc] = "k_b"
        cells[dr][dc] = "D_b"
    else:
        rest += [(kr, kc), (dr, dc)]
    for row, col in rest:
        if rng.random() < 0.25:
            cells[row][col] = "#"
    return [" ".join(row) for row in cells]


class PlannerExactnessTests(unittest.TestCase):
    def setUp(self):
        self.bundle = dkg_variant("single")
        (self.costs,) = self.bundle.config.costs
        rng = random.Random(2024)
        self.maps = [random_rows(rng) for _ in range(MAPS)]

    def graph_for(self, rows, index):
        _, env, start = scene(self.bundle, rows, f"map-{index}")
        return env, ReachableGraph(env, start)

    def test_matches_bellman_everywhere(self):
        for index, rows in enumerate(self.maps):
            env, graph = self.graph_for(rows, index)
            planner = Planner(env, heuristic=("manhattan", "none")[index % 2])
            for goal in self.bundle.config.goals:
                exact = exact_cost_to_go(graph, goal, self.costs)
                for state in graph.states:
                    self.assertEqual(
                        planner.path_cost(state, goal, self.costs),
                        exact[state],
                        msg=f"map {index} {rows}, {goal.label}, {state.digest()}",
                    )

    def test_query_order_does_not_matter(self):
        rng = random.Random(11)
        for index, rows in enumerate(self.maps[:5]):
            env, graph = self.graph_for(rows, index)
            queries = [(state, goal) for state in graph.states for goal in self.bundle.config.goals]
            answers = []
            for _ in range(SHUFFLES):
                rng.shuffle(queries)
                planner = Planner(env, heuristic="manhattan")
                first = {
                    (state, goal): planner.path_cost(state, goal, self.costs)
                    for state, goal in queries
                }
                cached = len(planner.cache)
                again = {
                    (state, goal): planner.path_cost(state, goal, self.costs)
                    for state, goal in reversed(queries)
                }
                self.assertEqual(again, first)
                self.assertEqual(len(planner.cache), cached)
                answers.append(first)
            for other in answers[1:]:
                self.assertEqual(other, answers[0], msg=f"map {index} {rows}")


class ManhattanAdmissibilityTests(unittest.TestCase):
    def test_never_overestimates(self):
        bundle = dkg_variant("single")
        (base,) = bundle.config.costs
        rng = random.Random(31337)
        checked = 0
        index = 0
        while checked < INSTANCES:
            rows = random_rows(rng)
            _, env, start = scene(bundle, rows, f"admissible-{index}")
            index += 1
            graph = ReachableGraph(env, start)
            costs = CostProfile(
                0, tuple((name, price * rng.uniform(0.2, 5.0)) for name, price in base.costs)
            )
            exact = {
                goal: exact_cost_to_go(graph, goal, costs) for goal in bundle.config.goals
            }
            for _ in range(STATES_PER_MAP):
                state = rng.choice(graph.states)
                goal = rng.choice(bundle.config.goals)
                heuristic = ManhattanHeuristic.build(env, goal, costs)
                self.assertIsNotNone(heuristic)
                self.assertLessEqual(
                    heuristic(state),
                    exact[goal][state] + 1e-9,
                    msg=f"{rows}, {goal.label}, {state.digest()}",
                )
                checked += 1
