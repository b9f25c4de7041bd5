"""Brute-force cross-checks for the planner and the inference engine.

Everything here is deliberately naive: the full reachable state graph is
enumerated, costs-to-go come from repeated Bellman sweeps over it, and the
posterior is a direct product of priors and action likelihoods computed in
linear space. Only the data types are shared with :py:mod:`liras.siam`.

"""
import logging
import math

from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from liras.agent import AgentConfig
from liras.agent import Belief
from liras.agent import BeliefSpace
from liras.agent import CostProfile
from liras.agent import GoalSpec
from liras.agent import Hypothesis
from liras.agent import NOOP_COST_KEY
from liras.agent import RewardProfile
from liras.lib import LirasError
from liras.pddl.grounding import GroundAction
from liras.pddl.grounding import GroundCondition
from liras.pddl.grounding import GroundedEnvironment
from liras.pddl.grounding import NOOP
from liras.pddl.reader import parse_condition
from liras.siam import PosteriorTable
from liras.world import apply
from liras.world import WorldState


logger = logging.getLogger(__name__)


DEFAULT_STATE_CAP = 5000
DEFAULT_HYPOTHESIS_CAP = 200


class OracleCapError(LirasError):
    def __init__(self, what: str, count: int, cap: int):
        super().__init__(f"oracle {what} exceeds the cap: more than {cap} (reached {count})")
        self.what = what
        self.count = count
        self.cap = cap


class ReachableGraph:
    """Every state reachable from ``start``, with labelled edges."""

    def __init__(self, env: GroundedEnvironment, start: WorldState, cap: int = DEFAULT_STATE_CAP):
        self.env = env
        self.states: List[WorldState] = [start]
        self.index: Dict[WorldState, int] = {start: 0}
        self.edges: List[List[Tuple[str, int]]] = []
        cursor = 0
        while cursor < len(self.states):
            state = self.states[cursor]
            out = []
            for action in env.actions:
                if not action.precondition.holds(state):
                    continue
                nxt = apply(env, state, action)
                if nxt not in self.index:
                    if len(self.states) >= cap:
                        raise OracleCapError("reachable state graph", len(self.states) + 1, cap)
                    self.index[nxt] = len(self.states)
                    self.states.append(nxt)
                out.append((action.cost_key, self.index[nxt]))
            self.edges.append(out)
            cursor += 1

    def __len__(self) -> int:
        return len(self.states)

    def __contains__(self, state: object) -> bool:
        return state in self.index


def _goal(env: GroundedEnvironment, goal: GoalSpec) -> GroundCondition:
    return env.compile_condition(parse_condition(goal.condition_text, env.domain))


def exact_cost_to_go(
    graph: ReachableGraph, goal: GoalSpec, costs: CostProfile
) -> Dict[WorldState, float]:
    """Bellman sweeps to the fixed point; unreachable states map to ``inf``."""
    condition = _goal(graph.env, goal)
    price = costs.as_dict()
    values = [0.0 if condition.holds(state) else math.inf for state in graph.states]
    changed = True
    while changed:
        changed = False
        for node, out in enumerate(graph.edges):
            if values[node] == 0.0 and condition.holds(graph.states[node]):
                continue
            best = values[node]
            for name, target in out:
                candidate = price[name] + values[target]
                if candidate < best:
                    best = candidate
            if best < values[node]:
                values[node] = best
                changed = True
    return dict(zip(graph.states, values))


class CostToGoTable:
    """Lazily enumerated cost-to-go values for any state, per (goal, cost profile)."""

    def __init__(self, env: GroundedEnvironment, state_cap: int = DEFAULT_STATE_CAP):
        self.env = env
        self.state_cap = state_cap
        self._values: Dict[Tuple[Tuple[str, ...], Tuple[Tuple[str, float], ...]], Dict] = {}

    def __call__(self, state: WorldState, goal: GoalSpec, costs: CostProfile) -> float:
        table = self._values.setdefault((goal.literals, costs.costs), {})
        if state not in table:
            graph = ReachableGraph(self.env, state, self.state_cap)
            table.update(exact_cost_to_go(graph, goal, costs))
        return table[state]


def _log_normalizer(values: Sequence[float]) -> float:
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(sum(math.exp(value - top) for value in values))


class _ExhaustiveModel:
    def __init__(
        self,
        cfg: AgentConfig,
        env: GroundedEnvironment,
        cost_to_go: CostToGoTable,
        invalid_action: str,
    ):
        self.cfg = cfg
        self.env = env
        self.cost_to_go = cost_to_go
        self.invalid_action = invalid_action

    def q(
        self,
        goal: GoalSpec,
        reward: Optional[RewardProfile],
        costs: CostProfile,
        state: WorldState,
        action: GroundAction,
    ) -> float:
        r = reward.values[goal.index] if reward is not None else 0.0
        if action == NOOP:
            step = costs.as_dict()[NOOP_COST_KEY]
            nxt = state
        else:
            step = costs.as_dict()[action.cost_key]
            nxt = apply(self.env, state, action)
        remaining = self.cost_to_go(nxt, goal, costs)
        return -math.inf if remaining == math.inf else r - step - remaining

    def likelihood(
        self,
        goal: GoalSpec,
        reward: Optional[RewardProfile],
        costs: CostProfile,
        particles: List[Tuple[WorldState, float]],
        observed: GroundAction,
    ) -> float:
        priced_noop = NOOP_COST_KEY in costs.as_dict()
        if observed == NOOP and not priced_noop:
            return 1.0
        candidates = set()
        for state, _ in particles:
            candidates.update(a for a in self.env.actions if a.precondition.holds(state))
        options = sorted(candidates)
        if priced_noop:
            options.append(NOOP)
        utilities = {}
        for action in options:
            total, mass, blocked = 0.0, 0.0, False
            for state, weight in particles:
                if action != NOOP and not action.precondition.holds(state):
                    if self.invalid_action == "eliminate":
                        blocked = True
                    continue
                total += weight * self.q(goal, reward, costs, state, action)
                mass += weight
            utilities[action] = -math.inf if blocked else total / mass
        if observed not in utilities:
            return 0.0
        beta = self.cfg.beta
        scaled = {action: beta * value for action, value in utilities.items()}
        top = max(scaled.values())
        if top == -math.inf:
            return 1.0 / len(scaled)
        return math.exp(scaled[observed] - top) / sum(
            math.exp(value - top) for value in scaled.values()
        )


def exact_posterior(
    cfg: AgentConfig,
    env: GroundedEnvironment,
    states: Sequence[WorldState],
    actions: Sequence[GroundAction],
    state_cap: int = DEFAULT_STATE_CAP,
    hypothesis_cap: int = DEFAULT_HYPOTHESIS_CAP,
    invalid_action: str = "eliminate",
) -> PosteriorTable:
    """The exhaustive posterior over every hypothesis after ``actions``.

    :raises: :py:exc:`OracleCapError` when the hypothesis space or a state
        graph is too large.

    """
    if len(actions) != len(states) - 1:
        raise LirasError(f"{len(states)} states need {len(states) - 1} actions")
    start = states[0]
    space = None
    placements = [0]
    if cfg.partial:
        assert cfg.belief_config is not None
        space = BeliefSpace(env, cfg.belief_config, start)
        placements = list(range(len(space)))

    rewards: List[Optional[RewardProfile]] = list(cfg.rewards) or [None]
    count = len(cfg.goals) * len(rewards) * len(cfg.costs) * len(placements)
    if count > hypothesis_cap:
        raise OracleCapError("hypothesis space", count, hypothesis_cap)

    cost_to_go = CostToGoTable(env, state_cap)
    model = _ExhaustiveModel(cfg, env, cost_to_go, invalid_action)

    def weights_for(anchor: int) -> List[float]:
        if space is None:
            return [1.0]
        n = len(space)
        if n == 1:
            return [1.0]
        other = (1.0 - space.cfg.confidence) / (n - 1)
        return [space.cfg.confidence if i == anchor else other for i in range(n)]

    def observe(weights: List[float], state: WorldState) -> Optional[List[float]]:
        if space is None:
            return weights
        seen = space.observe(state)
        kept = [
            w if w > 0 and space.observe(space.overlay(state, i)) == seen else 0.0
            for i, w in enumerate(weights)
        ]
        total = math.fsum(kept)
        if total == 0:
            return None
        return [w / total for w in kept]

    def particles(weights: List[float], state: WorldState) -> List[Tuple[WorldState, float]]:
        if space is None:
            return [(state, 1.0)]
        return [(space.overlay(state, i), w) for i, w in enumerate(weights) if w > 0]

    hypotheses: List[Hypothesis] = []
    log_prior: List[float] = []
    belief_weights: List[Optional[List[float]]] = []
    utilities: Dict[int, float] = {}
    for goal in cfg.goals:
        for reward in rewards:
            for costs in cfg.costs:
                for anchor in placements:
                    weights = observe(weights_for(anchor), start)
                    belief = None
                    if space is not None:
                        belief = Belief(space, anchor, tuple(weights or weights_for(anchor)))
                    hypotheses.append(Hypothesis(goal, reward, costs, belief))
                    belief_weights.append(weights)
                    if reward is not None and weights is not None:
                        expected = sum(
                            w * cost_to_go(s, goal, costs) for s, w in particles(weights, start)
                        )
                        utilities[len(hypotheses) - 1] = (
                            cfg.beta * (reward.values[goal.index] - expected)
                            if expected != math.inf
                            else -math.inf
                        )
                    log_prior.append(0.0)

    slices = len(rewards) * len(cfg.costs) * len(placements)
    for index, hyp in enumerate(hypotheses):
        if belief_weights[index] is None:
            log_prior[index] = -math.inf
            continue
        base = -math.log(len(rewards)) - math.log(len(cfg.costs)) - math.log(len(placements))
        if hyp.reward is None:
            log_prior[index] = base - math.log(len(cfg.goals))
            continue
        offset = index % slices
        same_slice = [utilities.get(g * slices + offset, -math.inf) for g in range(len(cfg.goals))]
        norm = _log_normalizer(same_slice)
        log_prior[index] = -math.inf if norm == -math.inf else utilities[index] - norm + base

    log_weights = list(log_prior)
    for t, (before, action, after) in enumerate(zip(states, actions, states[1:]), start=1):
        for index, hyp in enumerate(hypotheses):
            weights = belief_weights[index]
            if log_weights[index] == -math.inf or weights is None:
                log_weights[index] = -math.inf
                continue
            weights = observe(weights, after)
            belief_weights[index] = weights
            if weights is None:
                log_weights[index] = -math.inf
                continue
            p = model.likelihood(hyp.goal, hyp.reward, hyp.cost, particles(weights, before), action)
            log_weights[index] = log_weights[index] + math.log(p) if p > 0 else -math.inf

    return PosteriorTable(tuple(hypotheses), np.array(log_weights, dtype=float), len(actions))
