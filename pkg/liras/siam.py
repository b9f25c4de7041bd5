"""Sequential inverse agent modeling: exact Bayesian filtering over mental states.

:py:class:`Siam` enumerates every hypothesis (goal, reward profile, cost
profile, initial belief), then folds observed transitions into unnormalized
log-weights, one action likelihood at a time. Queries normalize on demand.

At step ``t`` each hypothesis's belief is first updated with what the agent
sees in the new frame, then the observed action is scored from the previous
state under that updated belief.

"""
import logging
import math

from typing import Callable
from typing import Dict
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from scipy.special import logsumexp

from liras.agent import action_log_distribution
from liras.agent import AgentConfig
from liras.agent import Belief
from liras.agent import BeliefSpace
from liras.agent import Hypothesis
from liras.agent import ImpossibleObservationError
from liras.agent import initial_hypotheses
from liras.agent import NOOP_COST_KEY
from liras.agent import QUERY_ALIASES
from liras.agent import QUERY_KINDS
from liras.lib import InvariantViolation
from liras.lib import LirasError
from liras.pddl.grounding import GroundAction
from liras.pddl.grounding import GroundedEnvironment
from liras.pddl.grounding import NOOP
from liras.planner import Planner
from liras.world import reconstruct_action
from liras.world import WorldState


logger = logging.getLogger(__name__)


DEFAULT_HYPOTHESIS_CAP = 10 ** 5
MARGINAL_TOLERANCE = 1e-9


class HypothesisCapError(LirasError):
    def __init__(self, count: int, cap: int):
        super().__init__(
            f"the hypothesis space has {count} members, over the cap of {cap}; "
            "reduce the goals, cost profiles or belief objects, or raise siam.hypothesis_cap"
        )
        self.count = count
        self.cap = cap


class DegeneratePosteriorError(LirasError):
    """Every hypothesis reached zero probability."""

    def __init__(self, step: int, last_log_likelihoods: Dict[str, float]):
        rendered = ", ".join(f"{key}: {value}" for key, value in last_log_likelihoods.items())
        super().__init__(
            f"every hypothesis was eliminated at step {step}; "
            f"log-likelihoods of the last survivors: {{{rendered}}}"
        )
        self.step = step
        self.last_log_likelihoods = last_log_likelihoods


class QueryError(LirasError):
    pass


class PosteriorTable(NamedTuple):
    """Hypotheses, their unnormalized log-weights and belief trajectories at step ``t``."""

    hypotheses: Tuple[Hypothesis, ...]
    log_weights: np.ndarray
    t: int = 0
    beliefs: Tuple[Tuple[Optional[Belief], ...], ...] = ()

    def current_belief(self, index: int) -> Optional[Belief]:
        return self.beliefs[index][-1] if self.beliefs else None

    def probabilities(self) -> np.ndarray:
        finite = np.isfinite(self.log_weights)
        if not finite.any():
            raise DegeneratePosteriorError(self.t, {})
        return np.exp(self.log_weights - logsumexp(self.log_weights[finite]))

    def snapshot(self, kinds: Sequence[str]) -> Dict[str, object]:
        """Per-kind marginals at this step, for trace output."""
        result: Dict[str, object] = {"t": self.t}
        for kind in kinds:
            if kind == "cost":
                continue
            answer = marginal(self, kind)
            result[kind] = dict(zip(answer.labels, answer.ratings))
        return result


class QuerySpec(NamedTuple):
    """One question: the kinds it asks about and, optionally, which labels in which order.

    For joint questions, items are written ``kind:label``.

    """

    kinds: Tuple[str, ...]
    items: Tuple[str, ...] = ()

    @classmethod
    def of(cls, kinds: Sequence[str], items: Sequence[str] = ()) -> "QuerySpec":
        canonical = tuple(QUERY_ALIASES.get(kind, kind) for kind in kinds)
        for kind in canonical:
            if kind not in QUERY_KINDS:
                raise QueryError(f"unknown query kind {kind!r}")
        return cls(canonical, tuple(items))


class QueryResult(NamedTuple):
    kind: str
    labels: Tuple[str, ...]
    ratings: Tuple[float, ...]

    def to_json(self) -> Dict[str, object]:
        return {"kind": self.kind, "ratings": dict(zip(self.labels, self.ratings))}


# dimensions of a hypothesis


def _goal_key(hyp: Hypothesis) -> Tuple[int, str]:
    return hyp.goal.index, hyp.goal.label


def _reward_key(hyp: Hypothesis) -> Tuple[int, str]:
    if hyp.reward is None:
        return 0, "none"
    return hyp.reward.index, hyp.reward.label


def _cost_key(hyp: Hypothesis) -> Tuple[int, str]:
    return hyp.cost.index, hyp.cost.label


def _belief_key(hyp: Hypothesis) -> Tuple[int, str]:
    if hyp.belief is None:
        return 0, "full"
    return hyp.belief.anchor, hyp.belief.label


DIMENSIONS: Dict[str, Callable[[Hypothesis], Tuple[int, str]]] = {
    "goal": _goal_key,
    "reward": _reward_key,
    "cost": _cost_key,
    "belief": _belief_key,
}


def marginal(table: PosteriorTable, dimension: str) -> QueryResult:
    """The normalized posterior marginal over one hypothesis dimension."""
    dimension = QUERY_ALIASES.get(dimension, dimension)
    try:
        key_of = DIMENSIONS[dimension]
    except KeyError:
        raise QueryError(f"unknown dimension {dimension!r}")
    probabilities = table.probabilities()
    totals: Dict[Tuple[int, str], List[float]] = {}
    for hyp, probability in zip(table.hypotheses, probabilities):
        totals.setdefault(key_of(hyp), []).append(float(probability))
    keys = sorted(totals)
    ratings = tuple(math.fsum(totals[key]) for key in keys)
    if abs(math.fsum(ratings) - 1.0) > MARGINAL_TOLERANCE:
        raise InvariantViolation(f"{dimension} marginal sums to {math.fsum(ratings)!r}")
    return QueryResult(dimension, tuple(label for _, label in keys), ratings)


def expectation(table: PosteriorTable, functional: Callable[[Hypothesis], float]) -> float:
    """The posterior expectation of ``functional``."""
    probabilities = table.probabilities()
    return math.fsum(
        float(probability) * functional(hyp)
        for hyp, probability in zip(table.hypotheses, probabilities)
        if probability > 0
    )


def expected_costs(
    table: PosteriorTable, groups: Sequence[Tuple[str, Sequence[str]]] = ()
) -> QueryResult:
    """One expected cost per action name priced in the cost profiles.

    With ``groups``, one expected cost per group instead: the mean price of
    its actions, so moves that share a terrain are rated once.

    """
    if groups:
        ratings = []
        for _, actions in groups:

            def group_cost(hyp: Hypothesis, actions: Sequence[str] = actions) -> float:
                prices = [hyp.cost.cost(action) for action in actions]
                known = [price for price in prices if price is not None]
                if len(known) != len(prices):
                    return math.nan
                return math.fsum(known) / len(known)

            ratings.append(expectation(table, group_cost))
        return QueryResult("cost", tuple(name for name, _ in groups), tuple(ratings))

    names: List[str] = []
    for hyp in table.hypotheses:
        for name, _ in hyp.cost.costs:
            if name not in names and name != NOOP_COST_KEY:
                names.append(name)
    ratings = []
    for name in names:

        def cost_of(hyp: Hypothesis, name: str = name) -> float:
            value = hyp.cost.cost(name)
            return math.nan if value is None else value

        ratings.append(expectation(table, cost_of))
    return QueryResult("cost", tuple(names), tuple(ratings))


def expected_rewards(table: PosteriorTable, cfg: AgentConfig) -> QueryResult:
    """The posterior expected reward of every rewarded item, or of every goal.

    Profiles that break down into items (packages, say) are rated per item;
    otherwise each goal is rated by the reward it would earn.

    :raises: :py:exc:`QueryError` when no reward profiles are configured.

    """
    if not cfg.rewards:
        raise QueryError("the reward query needs reward profiles in the agent configuration")
    items = [name for name, _ in cfg.rewards[0].items]
    if items:
        ratings = []
        for name in items:

            def item_reward(hyp: Hypothesis, name: str = name) -> float:
                value = None if hyp.reward is None else hyp.reward.item(name)
                return math.nan if value is None else value

            ratings.append(expectation(table, item_reward))
        return QueryResult("reward", tuple(items), tuple(ratings))

    ratings = []
    for goal in cfg.goals:

        def goal_reward(hyp: Hypothesis, index: int = goal.index) -> float:
            return math.nan if hyp.reward is None else hyp.reward.values[index]

        ratings.append(expectation(table, goal_reward))
    return QueryResult("reward", tuple(goal.label for goal in cfg.goals), tuple(ratings))


def _select(result: QueryResult, items: Sequence[str]) -> QueryResult:
    if not items:
        return result
    lookup = {label: rating for label, rating in zip(result.labels, result.ratings)}
    missing = [item for item in items if item not in lookup]
    if missing:
        raise QueryError(f"unknown {result.kind} items {missing}; expected some of {list(lookup)}")
    return QueryResult(result.kind, tuple(items), tuple(lookup[item] for item in items))


def answer_query(table: PosteriorTable, query: QuerySpec, cfg: AgentConfig) -> QueryResult:
    """Answer ``query`` from ``table``; joint queries concatenate their parts.

    :raises: :py:exc:`QueryError` when a kind is not configured or an item
        is unknown.

    """
    for kind in query.kinds:
        if kind not in cfg.query:
            configured = list(cfg.query)
            raise QueryError(f"query kind {kind!r} is not configured (configured: {configured})")

    def answer(kind: str) -> QueryResult:
        if kind == "cost":
            return expected_costs(table, cfg.cost_groups)
        if kind == "reward":
            return expected_rewards(table, cfg)
        return marginal(table, kind)

    if len(query.kinds) == 1:
        return _select(answer(query.kinds[0]), query.items)

    labels: List[str] = []
    ratings: List[float] = []
    for kind in query.kinds:
        part = answer(kind)
        labels.extend(f"{kind}:{label}" for label in part.labels)
        ratings.extend(part.ratings)
    joint = QueryResult("+".join(query.kinds), tuple(labels), tuple(ratings))
    return _select(joint, query.items)


# inference


class Siam:
    """Exact filtering over the hypothesis space of one stimulus.

    :param cfg: The agent configuration defining the hypothesis spaces.
    :param env: The grounded environment.
    :param planner: Shared planner; one is created when omitted.
    :param hypothesis_cap: Refuse to enumerate more hypotheses than this.
    :param beta: Overrides the configuration's inverse temperature.

    """

    def __init__(
        self,
        cfg: AgentConfig,
        env: GroundedEnvironment,
        planner: Optional[Planner] = None,
        hypothesis_cap: int = DEFAULT_HYPOTHESIS_CAP,
        beta: Optional[float] = None,
    ):
        self.cfg = cfg if beta is None else cfg.with_beta(beta)
        self.env = env
        self.planner = planner or Planner(env)
        self.hypothesis_cap = hypothesis_cap
        self.space: Optional[BeliefSpace] = None

    @property
    def beta(self) -> float:
        return self.cfg.beta

    def init(self, initial: WorldState) -> PosteriorTable:
        """Enumerate hypotheses with their prior log-weights.

        :raises: :py:exc:`HypothesisCapError` before enumerating an
            oversized space.

        """
        beliefs = 1
        if self.cfg.partial:
            assert self.cfg.belief_config is not None
            self.space = BeliefSpace(self.env, self.cfg.belief_config, initial)
            beliefs = len(self.space)
        count = (
            len(self.cfg.goals) * max(1, len(self.cfg.rewards)) * len(self.cfg.costs) * beliefs
        )
        if count > self.hypothesis_cap:
            raise HypothesisCapError(count, self.hypothesis_cap)

        priors = initial_hypotheses(self.cfg, self.env, initial, self.planner, self.space)
        hypotheses = tuple(hyp for hyp, _ in priors)
        logger.debug("enumerated %d hypotheses", len(hypotheses))
        return PosteriorTable(
            hypotheses,
            np.array([weight for _, weight in priors], dtype=float),
            0,
            tuple((hyp.belief,) for hyp in hypotheses),
        )

    def log_likelihood(
        self,
        hyp: Hypothesis,
        belief: Optional[Belief],
        previous: WorldState,
        action: GroundAction,
    ) -> float:
        if action == NOOP and hyp.cost.cost(NOOP_COST_KEY) is None:
            return 0.0
        distribution = action_log_distribution(hyp, previous, self.planner, self.beta, belief)
        return distribution.get(action, -math.inf)

    def step(
        self,
        table: PosteriorTable,
        previous: WorldState,
        action: GroundAction,
        current: WorldState,
    ) -> PosteriorTable:
        """Fold one observed transition into ``table``.

        :raises: :py:exc:`DegeneratePosteriorError` when no hypothesis survives.

        """
        t = table.t + 1
        observation = self.space.observe(current) if self.space is not None else None
        log_weights = table.log_weights.copy()
        increments = np.zeros(len(table.hypotheses))
        trajectories = []
        for index, hyp in enumerate(table.hypotheses):
            belief = table.current_belief(index)
            alive = math.isfinite(log_weights[index])
            if belief is not None and observation is not None and alive:
                try:
                    belief = belief.update(observation, current)
                except ImpossibleObservationError as exc:
                    logger.debug("hypothesis %s eliminated at step %d: %s", hyp.key, t, exc)
                    increments[index] = -math.inf
            trajectories.append(table.beliefs[index] + (belief,))
            if not math.isfinite(log_weights[index]) or increments[index] == -math.inf:
                continue
            increments[index] = self.log_likelihood(hyp, belief, previous, action)

        log_weights = log_weights + increments
        if not np.isfinite(log_weights).any():
            survivors = {
                str(hyp.key): float(increments[index])
                for index, hyp in enumerate(table.hypotheses)
                if math.isfinite(table.log_weights[index])
            }
            raise DegeneratePosteriorError(t, survivors)
        return PosteriorTable(table.hypotheses, log_weights, t, tuple(trajectories))

    def run(
        self,
        states: Sequence[WorldState],
        actions: Optional[Sequence[GroundAction]] = None,
    ) -> Tuple[PosteriorTable, List[Dict[str, object]]]:
        """Filter a whole state sequence, reconstructing actions when not given.

        Returns the final table and per-step marginal snapshots.

        """
        if not states:
            raise LirasError("a stimulus needs at least one state")
        if actions is None:
            actions = [
                reconstruct_action(self.env, before, after, index)
                for index, (before, after) in enumerate(zip(states, states[1:]), start=1)
            ]
        if len(actions) != len(states) - 1:
            raise LirasError(f"{len(states)} states need {len(states) - 1} actions")

        table = self.init(states[0])
        kinds = [kind for kind in self.cfg.query if kind != "cost"]
        trace = [table.snapshot(kinds)]
        for previous, action, current in zip(states, actions, states[1:]):
            table = self.step(table, previous, action, current)
            trace.append(table.snapshot(kinds))
        return table, trace
