"""Shortest-path costs and Q-values for the agent model.

The planner answers one question, "what is the cheapest way from this state
to a state satisfying this goal under this cost profile", with exact A*
search, and memoizes every answer. Q-values and belief-space Q-values are
derived from those costs.

"""
import heapq
import itertools
import logging
import math
import threading

from typing import Callable
from typing import Dict
from typing import Hashable
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import TYPE_CHECKING

from liras.lib import LirasError
from liras.pddl.formula import PredicateAtom
from liras.pddl.grounding import GNumeric
from liras.pddl.grounding import GroundAction
from liras.pddl.grounding import GroundCondition
from liras.pddl.grounding import GroundedEnvironment
from liras.pddl.grounding import GroundingError
from liras.pddl.grounding import GSlot
from liras.pddl.grounding import GWhen
from liras.pddl.grounding import NOOP
from liras.pddl.reader import parse_condition
from liras.world import apply
from liras.world import successors
from liras.world import WorldState

if TYPE_CHECKING:
    from liras.agent import CostProfile  # noqa: F401
    from liras.agent import GoalSpec  # noqa: F401
    from liras.agent import Hypothesis  # noqa: F401


logger = logging.getLogger(__name__)


DEFAULT_NODE_BUDGET = 10 ** 6
HEURISTICS = ("none", "manhattan")
INVALID_ACTION_POLICIES = ("eliminate", "skip")
COORDINATES = ("xloc", "yloc")

Heuristic = Callable[[WorldState], float]


class PlannerBudgetError(LirasError):
    """A search expanded more nodes than the configured budget."""

    def __init__(self, goal: str, budget: int):
        super().__init__(
            f"search for {goal} exceeded the node budget of {budget}; "
            "raise planner.node_budget or shrink the environment"
        )
        self.goal = goal
        self.budget = budget


class UndefinedActionError(LirasError):
    """An action was scored under a belief in which no particle allows it."""

    def __init__(self, action: GroundAction):
        super().__init__(f"{action} is not valid in any particle of the belief")
        self.action = action


class QEstimate(NamedTuple):
    value: float
    reachable: bool = True

    @property
    def utility(self) -> float:
        return self.value if self.reachable else -math.inf


class PathCostCache:
    """Memo of optimal costs-to-go keyed by (state, goal, cost profile).

    Readers never block each other for long: a lookup either sees a committed
    value or misses and computes one itself. Two threads computing the same
    key store equal values.

    """

    def __init__(self) -> None:
        self._values: Dict[Hashable, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[float]:
        with self._lock:
            value = self._values.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def put(self, key: Hashable, value: float) -> None:
        with self._lock:
            self._values[key] = value

    def __len__(self) -> int:
        return len(self._values)

    def clear(self) -> None:
        with self._lock:
            self._values.clear()
            self.hits = 0
            self.misses = 0


def action_cost(cost: "CostProfile", action: GroundAction) -> float:
    value = cost.cost(action.cost_key)
    if value is None:
        raise LirasError(f"cost profile {cost.index} has no cost for {action.cost_key!r}")
    return value


class ManhattanHeuristic:
    """Grid distance between the objects named in location and possession goals.

    Only built when every coordinate effect in the environment moves an
    object by one cell, picks it up (coordinate -1), or copies another
    coordinate. Each remaining unit of distance then needs at least one move
    costing ``scale``. A goal literal ``(p a b)`` is estimated as
    ``scale * max(0, |dx| + |dy| - slack)`` where ``slack`` allows goals that
    hold from an adjacent cell.

    """

    def __init__(
        self,
        env: GroundedEnvironment,
        literals: Sequence[Tuple[str, str]],
        scale: float,
        slack: int = 1,
    ):
        self.env = env
        self.scale = scale
        self.slack = slack
        self.pairs: List[Tuple[int, int, int, int]] = []
        for first, second in literals:
            self.pairs.append(
                (
                    env.int_slot[("xloc", (first,))],
                    env.int_slot[("yloc", (first,))],
                    env.int_slot[("xloc", (second,))],
                    env.int_slot[("yloc", (second,))],
                )
            )

    def __call__(self, state: WorldState) -> float:
        best = 0.0
        ints = state.ints
        for ax, ay, bx, by in self.pairs:
            if min(ints[ax], ints[ay], ints[bx], ints[by]) <= 0:
                continue
            distance = abs(ints[ax] - ints[bx]) + abs(ints[ay] - ints[by]) - self.slack
            best = max(best, self.scale * max(0, distance))
        return best

    @classmethod
    def build(
        cls, env: GroundedEnvironment, goal: "GoalSpec", cost: "CostProfile"
    ) -> Optional["ManhattanHeuristic"]:
        if env.is_multi_agent:
            return None
        coordinate_slots = {
            slot for slot, (name, _) in enumerate(env.int_terms) if name in COORDINATES
        }
        movers = set()
        for action in env.actions:
            for effect in _flatten(action.effects):
                if not isinstance(effect, GNumeric) or effect.slot not in coordinate_slots:
                    continue
                step = effect.amount.constant
                if effect.op in ("increase", "decrease") and step == 1:
                    movers.add(action.cost_key)
                elif effect.op == "assign" and (
                    step == -1 or isinstance(effect.amount, GSlot)
                ):
                    continue
                else:
                    logger.info("manhattan heuristic disabled: %s moves objects freely", action)
                    return None
        if not movers:
            return None

        literals = []
        for text in goal.literals:
            node = parse_condition(text, env.domain)
            if not isinstance(node, PredicateAtom) or len(node.args) != 2:
                continue
            names = tuple(arg.to_pddl() for arg in node.args)
            if all(("xloc", (name,)) in env.int_slot for name in names):
                literals.append((names[0], names[1]))
        if not literals:
            return None
        scale = min(action_cost(cost, GroundAction(name)) for name in movers)
        return cls(env, literals, scale)


def _flatten(effects: Sequence[object]) -> List[object]:
    result: List[object] = []
    for effect in effects:
        if isinstance(effect, GWhen):
            result.extend(_flatten(effect.effects))
        else:
            result.append(effect)
    return result


class Planner:
    """Memoized exact shortest-path search over one grounded environment."""

    def __init__(
        self,
        env: GroundedEnvironment,
        node_budget: int = DEFAULT_NODE_BUDGET,
        heuristic: str = "none",
        invalid_action: str = "eliminate",
        cache: Optional[PathCostCache] = None,
    ):
        if heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {heuristic!r}")
        if invalid_action not in INVALID_ACTION_POLICIES:
            raise ValueError(f"unknown invalid-action policy {invalid_action!r}")
        self.env = env
        self.node_budget = node_budget
        self.heuristic = heuristic
        self.invalid_action = invalid_action
        self.cache = cache or PathCostCache()
        self.expansions = 0
        self._goals: Dict[Tuple[str, ...], GroundCondition] = {}
        self._heuristics: Dict[Hashable, Optional[Heuristic]] = {}
        self._lock = threading.Lock()

    def goal_condition(self, goal: "GoalSpec") -> GroundCondition:
        with self._lock:
            compiled = self._goals.get(goal.literals)
            if compiled is None:
                try:
                    node = parse_condition(goal.condition_text, self.env.domain)
                    compiled = self.env.compile_condition(node)
                except GroundingError as exc:
                    raise LirasError(f"goal {goal.label} does not ground: {exc}")
                self._goals[goal.literals] = compiled
            return compiled

    def _heuristic_for(self, goal: "GoalSpec", cost: "CostProfile") -> Optional[Heuristic]:
        if self.heuristic == "none":
            return None
        key = (goal.literals, cost.costs)
        with self._lock:
            if key not in self._heuristics:
                self._heuristics[key] = ManhattanHeuristic.build(self.env, goal, cost)
            return self._heuristics[key]

    def path_cost(self, state: WorldState, goal: "GoalSpec", cost: "CostProfile") -> float:
        """Optimal cost from ``state`` to any goal state; ``inf`` when unreachable.

        :raises: :py:exc:`PlannerBudgetError` when the search outgrows the
            node budget.

        """
        key = (state, goal.literals, cost.costs)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        value = self._search(state, goal, cost)
        self.cache.put(key, value)
        return value

    def _search(self, start: WorldState, goal: "GoalSpec", cost: "CostProfile") -> float:
        condition = self.goal_condition(goal)
        heuristic = self._heuristic_for(goal, cost)
        h = heuristic or (lambda state: 0.0)
        counter = itertools.count()
        best: Dict[WorldState, float] = {start: 0.0}
        frontier: List[Tuple[float, float, int, WorldState]] = [
            (h(start), 0.0, next(counter), start)
        ]
        expanded = 0
        while frontier:
            _, g, _, state = heapq.heappop(frontier)
            if g > best.get(state, math.inf):
                continue
            if condition.holds(state):
                self.expansions += expanded
                return g
            expanded += 1
            if expanded > self.node_budget:
                self.expansions += expanded
                raise PlannerBudgetError(goal.label, self.node_budget)
            for action, successor in successors(self.env, state):
                candidate = g + action_cost(cost, action)
                if candidate < best.get(successor, math.inf):
                    best[successor] = candidate
                    heapq.heappush(
                        frontier, (candidate + h(successor), candidate, next(counter), successor)
                    )
        self.expansions += expanded
        return math.inf

    def q_value(
        self, hypothesis: "Hypothesis", state: WorldState, action: GroundAction
    ) -> QEstimate:
        """``r_g - cost(a) - path_cost(apply(s, a))`` for an action valid in ``state``."""
        if action == NOOP:
            noop_cost = hypothesis.cost.cost(NOOP.name)
            step = 0.0 if noop_cost is None else noop_cost
            successor = state
        else:
            step = action_cost(hypothesis.cost, action)
            successor = apply(self.env, state, action)
        remaining = self.path_cost(successor, hypothesis.goal, hypothesis.cost)
        if math.isinf(remaining):
            return QEstimate(-math.inf, False)
        return QEstimate(hypothesis.goal_reward - step - remaining)

    def belief_q_value(
        self,
        hypothesis: "Hypothesis",
        particles: Sequence[Tuple[WorldState, float]],
        action: GroundAction,
    ) -> QEstimate:
        """The weighted mean of per-particle Q-values.

        Particles where ``action`` is invalid contribute -inf under the
        ``eliminate`` policy, or are dropped (and the rest renormalized)
        under ``skip``.

        :raises: :py:exc:`UndefinedActionError` if no particle allows ``action``.

        """
        scored: List[Tuple[float, QEstimate]] = []
        invalid_weight = 0.0
        for particle, weight in particles:
            if action != NOOP and not action.precondition.holds(particle):
                invalid_weight += weight
                continue
            scored.append((weight, self.q_value(hypothesis, particle, action)))
        if not scored:
            raise UndefinedActionError(action)
        if invalid_weight > 0 and self.invalid_action == "eliminate":
            return QEstimate(-math.inf, False)
        if not all(estimate.reachable for _, estimate in scored):
            return QEstimate(-math.inf, False)
        total = math.fsum(weight for weight, _ in scored)
        value = math.fsum(weight * estimate.value for weight, estimate in scored) / total
        return QEstimate(value)

    def stats(self) -> Dict[str, int]:
        return {
            "cache_entries": len(self.cache),
            "cache_hits": self.cache.hits,
            "cache_misses": self.cache.misses,
            "expansions": self.expansions,
        }
