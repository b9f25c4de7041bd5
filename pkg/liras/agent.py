"""The generative model of a rational agent.

An :py:class:`AgentConfig` (parsed from the JSON document the synthesis step
produces) fixes the hypothesis spaces: goals, reward profiles, cost profiles
and, under partial observability, initial beliefs. This module builds those
spaces, simulates what the agent can see and how its beliefs change, and
turns planner Q-values into a Boltzmann-rational action distribution.

Beliefs are particle sets over *placements* of the hidden objects: every
particle world is the true state with the hidden objects moved into the
containers the agent thinks they are in. Because particles are overlays of
the current state, the agent's own actions carry over to every particle.

"""
import itertools
import json
import logging
import math
import warnings

from collections import deque
from typing import Any
from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import List
from typing import Mapping
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Set
from typing import Tuple
from typing import TYPE_CHECKING
from typing import Union

import numpy as np

from scipy.special import logsumexp

from liras.lib import LirasError
from liras.pddl.domain import DomainSpec
from liras.pddl.domain import GridDims
from liras.pddl.grounding import GroundAction
from liras.pddl.grounding import GroundedEnvironment
from liras.pddl.grounding import NOOP
from liras.world import update_state
from liras.world import valid_actions
from liras.world import WorldState

if TYPE_CHECKING:
    from liras.planner import Planner  # noqa: F401


logger = logging.getLogger(__name__)


QUERY_KINDS = ("goal", "belief", "reward", "cost")
QUERY_ALIASES = {"goals": "goal", "beliefs": "belief", "rewards": "reward", "costs": "cost"}
OBSERVABILITIES = ("full", "partial")
VISIBILITY_MODELS = ("line_of_sight", "region")
NOOP_COST_KEY = "no-op"
ABSENT = None


class AgentConfigError(LirasError):
    """The agent configuration document violates its schema."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ImpossibleObservationError(LirasError):
    """Every particle of a belief contradicts what the agent observed."""


class DegenerateDistributionWarning(UserWarning):
    """Every action had utility -inf; the distribution fell back to uniform."""


# configuration


class GoalSpec(NamedTuple):
    """A conjunction of ground literals, e.g. ``("(has player gem1)",)``."""

    index: int
    literals: Tuple[str, ...]

    @property
    def label(self) -> str:
        return " & ".join(self.literals)

    @property
    def condition_text(self) -> str:
        if len(self.literals) == 1:
            return self.literals[0]
        return "(and {})".format(" ".join(self.literals))


class RewardProfile(NamedTuple):
    """One reward per goal, in goal order.

    ``items`` optionally breaks the profile down into the rewards of the
    things the goals are made of (packages, say), sorted by name; a goal is
    then worth the sum of its items.

    """

    index: int
    values: Tuple[float, ...]
    items: Tuple[Tuple[str, float], ...] = ()

    def item(self, name: str) -> Optional[float]:
        for item, value in self.items:
            if item == name:
                return value
        return None

    @property
    def label(self) -> str:
        return json.dumps(list(self.values))


class CostProfile(NamedTuple):
    index: int
    costs: Tuple[Tuple[str, float], ...]

    def cost(self, action_name: str) -> Optional[float]:
        for name, value in self.costs:
            if name == action_name:
                return value
        return None

    def as_dict(self) -> Dict[str, float]:
        return dict(self.costs)

    @property
    def label(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


class BeliefConfig(NamedTuple):
    belief_object: str
    belief_container: str
    barrier: str
    agent: str
    confidence: float = 0.75
    allow_absent: bool = False
    visibility: str = "line_of_sight"


class AgentConfig(NamedTuple):
    grid: GridDims
    observability: str
    belief_config: Optional[BeliefConfig]
    goals: Tuple[GoalSpec, ...]
    rewards: Tuple[RewardProfile, ...]
    costs: Tuple[CostProfile, ...]
    query: Tuple[str, ...]
    temperature: float = 1.0
    beta: float = 1.0
    # label -> action names priced alike, e.g. every move across one terrain
    cost_groups: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()

    @property
    def partial(self) -> bool:
        return self.observability == "partial"

    def with_beta(self, beta: float) -> "AgentConfig":
        if not beta > 0:
            raise AgentConfigError("beta", f"must be greater than 0, got {beta!r}")
        return self._replace(beta=float(beta), temperature=1.0 / float(beta))

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "grid_size": [self.grid.rows, self.grid.cols],
            "observability": self.observability,
            "belief_config": {},
            "goals": [list(goal.literals) for goal in self.goals],
            "costs": [profile.as_dict() for profile in self.costs],
            "query": list(self.query),
            "temperature": self.temperature,
        }
        if self.belief_config is not None:
            doc["belief_config"] = self.belief_config._asdict()
        if self.rewards:
            doc["rewards"] = [list(profile.values) for profile in self.rewards]
            if any(profile.items for profile in self.rewards):
                doc["reward_items"] = [dict(profile.items) for profile in self.rewards]
        if self.cost_groups:
            doc["cost_groups"] = {name: list(actions) for name, actions in self.cost_groups}
        return doc


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _positive(value: Any, field: str) -> float:
    if not _is_number(value) or not math.isfinite(value):
        raise AgentConfigError(field, f"expected a number, got {value!r}")
    if not value > 0:
        raise AgentConfigError(field, f"must be greater than 0, got {value!r}")
    return float(value)


def _parse_goals(raw: Any) -> Tuple[GoalSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise AgentConfigError("goals", "expected a non-empty list")
    goals = []
    for index, item in enumerate(raw):
        literals = [item] if isinstance(item, str) else item
        if (
            not isinstance(literals, list)
            or not literals
            or not all(isinstance(lit, str) and lit.strip() for lit in literals)
        ):
            raise AgentConfigError(f"goals[{index}]", "expected a literal or a list of literals")
        goals.append(GoalSpec(index, tuple(" ".join(lit.split()) for lit in literals)))
    return tuple(goals)


def _parse_rewards(raw: Any, goal_count: int) -> Tuple[RewardProfile, ...]:
    if raw is None or raw == []:
        return ()
    if not isinstance(raw, list):
        raise AgentConfigError("rewards", "expected a list")
    profiles = [raw] if all(_is_number(value) for value in raw) else raw
    result = []
    for index, profile in enumerate(profiles):
        field = f"rewards[{index}]"
        if not isinstance(profile, list) or not all(_is_number(value) for value in profile):
            raise AgentConfigError(field, "expected a list of numbers")
        if len(profile) != goal_count:
            raise AgentConfigError(field, f"expected {goal_count} rewards, one per goal")
        if not all(math.isfinite(value) for value in profile):
            raise AgentConfigError(field, "rewards must be finite")
        result.append(RewardProfile(index, tuple(float(value) for value in profile)))
    return tuple(result)


def _parse_costs(raw: Any) -> Tuple[CostProfile, ...]:
    if not isinstance(raw, list) or not raw:
        raise AgentConfigError("costs", "expected a non-empty list of cost profiles")
    profiles = []
    for index, profile in enumerate(raw):
        if not isinstance(profile, dict) or not profile:
            raise AgentConfigError(f"costs[{index}]", "expected a non-empty object")
        items = tuple(
            (str(name), _positive(value, f"costs[{index}].{name}"))
            for name, value in sorted(profile.items())
        )
        profiles.append(CostProfile(index, items))
    return tuple(profiles)


def _parse_reward_items(
    raw: Any, profiles: Tuple[RewardProfile, ...]
) -> Tuple[RewardProfile, ...]:
    if raw is None or raw == []:
        return profiles
    if not isinstance(raw, list) or len(raw) != len(profiles):
        raise AgentConfigError("reward_items", "expected one object per reward profile")
    names = None
    result = []
    for profile, items in zip(profiles, raw):
        field = f"reward_items[{profile.index}]"
        if not isinstance(items, dict) or not items:
            raise AgentConfigError(field, "expected a non-empty object")
        for name, value in items.items():
            if not _is_number(value) or not math.isfinite(value):
                raise AgentConfigError(f"{field}.{name}", f"expected a number, got {value!r}")
        if names is None:
            names = sorted(items)
        elif sorted(items) != names:
            raise AgentConfigError(field, f"expected the items {names}")
        parsed = tuple((str(name), float(items[name])) for name in sorted(items))
        result.append(profile._replace(items=parsed))
    return tuple(result)


def _parse_cost_groups(
    raw: Any, costs: Tuple[CostProfile, ...]
) -> Tuple[Tuple[str, Tuple[str, ...]], ...]:
    if raw is None or raw == {}:
        return ()
    if not isinstance(raw, dict):
        raise AgentConfigError("cost_groups", "expected an object of label -> action names")
    priced = set.intersection(*(set(profile.as_dict()) for profile in costs))
    groups = []
    for name in sorted(raw):
        actions = raw[name]
        field = f"cost_groups.{name}"
        if (
            not isinstance(actions, list)
            or not actions
            or not all(isinstance(action, str) for action in actions)
        ):
            raise AgentConfigError(field, "expected a non-empty list of action names")
        unpriced = sorted(set(actions) - priced)
        if unpriced:
            raise AgentConfigError(field, f"actions {unpriced} are not priced in every profile")
        groups.append((str(name), tuple(actions)))
    return tuple(groups)


def _parse_query(raw: Any) -> Tuple[str, ...]:
    if isinstance(raw, str):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise AgentConfigError("query", "expected a non-empty list")
    kinds: List[str] = []
    for item in raw:
        kind = QUERY_ALIASES.get(str(item).lower(), str(item).lower())
        if kind not in QUERY_KINDS:
            raise AgentConfigError("query", f"unknown query kind {item!r}")
        if kind not in kinds:
            kinds.append(kind)
    return tuple(kinds)


def _parse_belief_config(raw: Any, observability: str) -> Optional[BeliefConfig]:
    if observability == "full":
        if raw not in (None, {}):
            raise AgentConfigError("belief_config", "must be empty under full observability")
        return None
    if not isinstance(raw, dict) or not raw:
        raise AgentConfigError("belief_config", "required under partial observability")
    values = {}
    for key in ("belief_object", "belief_container", "barrier", "agent"):
        value = raw.get(key)
        if not isinstance(value, str) or not value:
            raise AgentConfigError(f"belief_config.{key}", "expected a non-empty string")
        values[key] = value.lower()
    confidence = raw.get("confidence", 0.75)
    if not _is_number(confidence) or not 0 < confidence <= 1:
        raise AgentConfigError("belief_config.confidence", "expected a number in (0, 1]")
    allow_absent = raw.get("allow_absent", False)
    if not isinstance(allow_absent, bool):
        raise AgentConfigError("belief_config.allow_absent", "expected true or false")
    visibility = raw.get("visibility", "line_of_sight")
    if visibility not in VISIBILITY_MODELS:
        raise AgentConfigError(
            "belief_config.visibility", f"expected one of {list(VISIBILITY_MODELS)}"
        )
    return BeliefConfig(
        confidence=float(confidence),
        allow_absent=allow_absent,
        visibility=visibility,
        **values,
    )


def parse_agent_config(doc: Union[str, Mapping[str, Any]]) -> AgentConfig:
    """Validate an agent configuration document and fill in defaults.

    :raises: :py:exc:`AgentConfigError` naming the offending field.

    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise AgentConfigError("document", f"not valid JSON: {exc}")
    if not isinstance(doc, Mapping):
        raise AgentConfigError("document", "expected a JSON object")

    size = doc.get("grid_size")
    if (
        not isinstance(size, list)
        or len(size) != 2
        or not all(isinstance(value, int) and not isinstance(value, bool) for value in size)
        or min(size) < 1
    ):
        raise AgentConfigError("grid_size", "expected [rows, cols] with positive integers")

    observability = doc.get("observability")
    if observability not in OBSERVABILITIES:
        raise AgentConfigError("observability", 'expected "full" or "partial"')

    goals = _parse_goals(doc.get("goals"))
    rewards = _parse_rewards(doc.get("rewards"), len(goals))
    if doc.get("reward_items") and not rewards:
        raise AgentConfigError("reward_items", "given without any reward profiles")
    costs = _parse_costs(doc.get("costs"))
    temperature = _positive(doc.get("temperature", 1.0), "temperature")
    return AgentConfig(
        grid=GridDims(size[0], size[1]),
        observability=observability,
        belief_config=_parse_belief_config(doc.get("belief_config"), observability),
        goals=goals,
        rewards=_parse_reward_items(doc.get("reward_items"), rewards),
        costs=costs,
        query=_parse_query(doc.get("query", ["goal"])),
        temperature=temperature,
        beta=1.0 / temperature,
        cost_groups=_parse_cost_groups(doc.get("cost_groups"), costs),
    )


def check_config_against_domain(cfg: AgentConfig, spec: DomainSpec) -> None:
    """Cost profiles must price exactly the domain's actions (plus an optional no-op)."""
    expected = set(spec.action_names)
    for profile in cfg.costs:
        keys = set(profile.as_dict()) - {NOOP_COST_KEY}
        missing = sorted(expected - keys)
        extra = sorted(keys - expected)
        if missing or extra:
            details = []
            if missing:
                details.append(f"missing {missing}")
            if extra:
                details.append(f"unknown actions {extra}")
            raise AgentConfigError(f"costs[{profile.index}]", "; ".join(details))


# hypotheses


class Hypothesis(NamedTuple):
    """One candidate mental state: goal, reward profile, cost profile, initial belief."""

    goal: GoalSpec
    reward: Optional[RewardProfile]
    cost: CostProfile
    belief: Optional["Belief"] = None

    @property
    def key(self) -> Tuple[int, int, int, int]:
        return (
            self.goal.index,
            -1 if self.reward is None else self.reward.index,
            self.cost.index,
            -1 if self.belief is None else self.belief.anchor,
        )

    @property
    def goal_reward(self) -> float:
        if self.reward is None:
            return 0.0
        return self.reward.values[self.goal.index]


# observation


class Observation(NamedTuple):
    """What the agent perceives: the fluents it can see plus container contents."""

    facts: FrozenSet[str]
    visible: FrozenSet[str] = frozenset()
    contents: Tuple[Tuple[str, FrozenSet[str]], ...] = ()


def all_fluents(
    env: GroundedEnvironment, state: WorldState, hidden: Iterable[str] = ()
) -> FrozenSet[str]:
    """Render ``state`` as fluent strings, leaving out the positions of ``hidden`` objects."""
    skip = set(hidden)
    facts = {env.fact_name(slot) for slot in state.facts}
    for slot, value in enumerate(state.ints):
        name, args = env.int_terms[slot]
        if name in ("xloc", "yloc") and args and args[0] in skip:
            continue
        facts.add(f"(= {env.int_name(slot)} {value})")
    for slot, matrix in enumerate(state.terrain):
        bits = "".join("1" if cell else "0" for row in matrix for cell in row)
        facts.add(f"(= ({env.matrix_names[slot]}) {bits})")
    return frozenset(facts)


def position(env: GroundedEnvironment, state: WorldState, name: str) -> Tuple[int, int]:
    """The (x, y) cell of an object; (-1, -1) when held, (0, 0) when absent."""
    x = state.ints[env.int_slot[("xloc", (name,))]]
    y = state.ints[env.int_slot[("yloc", (name,))]]
    return int(x), int(y)


def _crosses_cell(
    start: Tuple[int, int], end: Tuple[int, int], cell: Tuple[int, int]
) -> bool:
    """Whether the segment between two cell centres passes through the open square of ``cell``."""
    (ax, ay), (bx, by) = start, end
    cx, cy = cell
    low, high = 0.0, 1.0
    for p, q in (
        (-(bx - ax), ax - (cx - 0.5)),
        (bx - ax, (cx + 0.5) - ax),
        (-(by - ay), ay - (cy - 0.5)),
        (by - ay, (cy + 0.5) - ay),
    ):
        if p == 0:
            if q <= 0:
                return False
            continue
        bound = q / p
        if p < 0:
            low = max(low, bound)
        else:
            high = min(high, bound)
    return low < high


def line_of_sight(
    start: Tuple[int, int], end: Tuple[int, int], blocked: Set[Tuple[int, int]]
) -> bool:
    """True when no blocked cell lies strictly between two cells."""
    (ax, ay), (bx, by) = start, end
    for cx in range(min(ax, bx), max(ax, bx) + 1):
        for cy in range(min(ay, by), max(ay, by) + 1):
            if (cx, cy) in (start, end) or (cx, cy) not in blocked:
                continue
            if _crosses_cell(start, end, (cx, cy)):
                return False
    return True


def _region(
    start: Tuple[int, int], blocked: Set[Tuple[int, int]], grid: GridDims
) -> Set[Tuple[int, int]]:
    seen = {start}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        for nxt in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if nxt in seen or nxt in blocked:
                continue
            if 1 <= nxt[0] <= grid.cols and 1 <= nxt[1] <= grid.rows:
                seen.add(nxt)
                queue.append(nxt)
    return seen


class BeliefSpace:
    """Hidden-object placements for one grounded environment.

    The hidden objects are the ``belief_object`` instances sitting in a
    ``belief_container`` cell in the initial state. A placement maps each of
    them to a container (or to absent when allowed); placements are injective
    whenever there are at least as many containers as hidden objects.

    """

    def __init__(self, env: GroundedEnvironment, cfg: BeliefConfig, initial: WorldState):
        self.env = env
        self.cfg = cfg
        for type_name in (cfg.belief_object, cfg.belief_container):
            if not env.domain.is_declared_type(type_name):
                raise AgentConfigError("belief_config", f"unknown type {type_name!r}")
        if cfg.agent not in env.object_types:
            raise AgentConfigError("belief_config.agent", f"unknown agent {cfg.agent!r}")
        if cfg.barrier in env.matrix_slot:
            self.barrier_kind = "matrix"
        elif env.domain.is_declared_type(cfg.barrier):
            self.barrier_kind = "type"
        else:
            raise AgentConfigError(
                "belief_config.barrier", f"{cfg.barrier!r} is neither a terrain nor a type"
            )

        self.containers: Tuple[str, ...] = tuple(sorted(env.objects_of_type(cfg.belief_container)))
        cells = {position(env, initial, name): name for name in self.containers}
        self.objects: Tuple[str, ...] = tuple(
            sorted(
                name
                for name in env.objects_of_type(cfg.belief_object)
                if position(env, initial, name) in cells
            )
        )
        options: List[Optional[str]] = list(self.containers)
        if cfg.allow_absent:
            options.append(ABSENT)
        injective = len(self.objects) <= len(self.containers)
        placements = []
        for combo in itertools.product(options, repeat=len(self.objects)):
            placed = [item for item in combo if item is not ABSENT]
            if injective and len(placed) != len(set(placed)):
                continue
            placements.append(tuple(combo))
        if not placements:
            raise AgentConfigError("belief_config", "no placement of hidden objects is possible")
        self.placements: Tuple[Tuple[Optional[str], ...], ...] = tuple(placements)

    def __len__(self) -> int:
        return len(self.placements)

    def label(self, index: int) -> str:
        parts = []
        for name, container in zip(self.objects, self.placements[index]):
            parts.append(f"{name}@{container if container is not ABSENT else 'absent'}")
        return ",".join(parts)

    def placement_of(self, state: WorldState) -> Optional[int]:
        """The index of the placement realized by ``state``, if any."""
        cells = {position(self.env, state, name): name for name in self.containers}
        realized = tuple(
            cells.get(position(self.env, state, name), ABSENT) for name in self.objects
        )
        try:
            return self.placements.index(realized)
        except ValueError:
            return None

    def overlay(self, state: WorldState, index: int) -> WorldState:
        """``state`` with every hidden, not-held object moved to placement ``index``."""
        ints = {}
        for name, container in zip(self.objects, self.placements[index]):
            if position(self.env, state, name) == (-1, -1):
                continue
            x, y = position(self.env, state, container) if container is not ABSENT else (0, 0)
            ints[("xloc", (name,))] = x
            ints[("yloc", (name,))] = y
        return update_state(self.env, state, ints=ints)

    def blocked_cells(self, state: WorldState) -> Set[Tuple[int, int]]:
        if self.barrier_kind == "matrix":
            matrix = state.terrain[self.env.matrix_slot[self.cfg.barrier]]
            return {
                (col + 1, row + 1)
                for row, cells in enumerate(matrix)
                for col, cell in enumerate(cells)
                if cell
            }
        return {
            position(self.env, state, name) for name in self.env.objects_of_type(self.cfg.barrier)
        }

    def visible_containers(self, state: WorldState) -> FrozenSet[str]:
        viewer = position(self.env, state, self.cfg.agent)
        blocked = self.blocked_cells(state)
        if self.cfg.visibility == "region":
            region = _region(viewer, blocked, self.env.grid)
            return frozenset(
                name for name in self.containers if position(self.env, state, name) in region
            )
        return frozenset(
            name
            for name in self.containers
            if line_of_sight(viewer, position(self.env, state, name), blocked)
        )

    def observe(self, state: WorldState) -> Observation:
        visible = self.visible_containers(state)
        visible_cells = {position(self.env, state, name): name for name in visible}
        contents: Dict[str, Set[str]] = {name: set() for name in visible}
        hidden = []
        for name in self.objects:
            cell = position(self.env, state, name)
            if cell == (-1, -1):
                continue
            if cell in visible_cells:
                contents[visible_cells[cell]].add(name)
            else:
                hidden.append(name)
        return Observation(
            all_fluents(self.env, state, hidden),
            visible,
            tuple(sorted((name, frozenset(found)) for name, found in contents.items())),
        )

    def consistent(self, state: WorldState, index: int, observation: Observation) -> bool:
        return self.observe(self.overlay(state, index)) == observation

    def initial_beliefs(self) -> List["Belief"]:
        """One belief per placement, anchored on it with the configured confidence."""
        count = len(self.placements)
        beliefs = []
        for anchor in range(count):
            if count == 1:
                weights = [1.0]
            else:
                rest = (1.0 - self.cfg.confidence) / (count - 1)
                weights = [self.cfg.confidence if i == anchor else rest for i in range(count)]
            beliefs.append(Belief(self, anchor, tuple(weights)))
        return beliefs


class Belief:
    """A normalized weighting over the placements of a :py:class:`BeliefSpace`."""

    def __init__(self, space: BeliefSpace, anchor: int, weights: Sequence[float]):
        self.space = space
        self.anchor = anchor
        self.weights: Tuple[float, ...] = tuple(weights)

    def __repr__(self) -> str:
        return f"<Belief anchor={self.space.label(self.anchor)} weights={self.weights}>"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Belief)
            and self.space is other.space
            and self.anchor == other.anchor
            and self.weights == other.weights
        )

    def __hash__(self) -> int:
        return hash((id(self.space), self.anchor, self.weights))

    @property
    def label(self) -> str:
        return self.space.label(self.anchor)

    def particles(self, state: WorldState) -> List[Tuple[WorldState, float]]:
        """The particle worlds with positive weight, as overlays of ``state``."""
        return [
            (self.space.overlay(state, index), weight)
            for index, weight in enumerate(self.weights)
            if weight > 0
        ]

    def update(self, observation: Observation, state: WorldState) -> "Belief":
        """Zero every particle that contradicts ``observation`` and renormalize.

        :raises: :py:exc:`ImpossibleObservationError` if nothing survives.

        """
        weights = [
            weight if weight > 0 and self.space.consistent(state, index, observation) else 0.0
            for index, weight in enumerate(self.weights)
        ]
        total = math.fsum(weights)
        if total <= 0:
            raise ImpossibleObservationError(
                f"no particle of the belief anchored on {self.label} is consistent "
                "with what the agent observed"
            )
        if all(new == old for new, old in zip(weights, self.weights)):
            return self
        return Belief(self.space, self.anchor, tuple(weight / total for weight in weights))


def observe(
    env: GroundedEnvironment,
    state: WorldState,
    cfg: AgentConfig,
    space: Optional[BeliefSpace] = None,
) -> Observation:
    """What the configured agent perceives in ``state``."""
    if not cfg.partial:
        return Observation(all_fluents(env, state))
    if space is None:
        assert cfg.belief_config is not None
        space = BeliefSpace(env, cfg.belief_config, state)
    return space.observe(state)


def belief_update(belief: Belief, observation: Observation, state: WorldState) -> Belief:
    return belief.update(observation, state)


# priors and action choice


def _expected_path_cost(
    planner: "Planner",
    state: WorldState,
    goal: GoalSpec,
    cost: CostProfile,
    belief: Optional[Belief],
) -> float:
    if belief is None:
        return planner.path_cost(state, goal, cost)
    total = 0.0
    for particle, weight in belief.particles(state):
        total += weight * planner.path_cost(particle, goal, cost)
    return total


def initial_hypotheses(
    cfg: AgentConfig,
    env: GroundedEnvironment,
    initial: WorldState,
    planner: Optional["Planner"] = None,
    space: Optional[BeliefSpace] = None,
) -> List[Tuple[Hypothesis, float]]:
    """Enumerate goals x rewards x costs x initial beliefs with prior log-weights.

    Goals are uniform unless reward profiles are configured, in which case
    each (reward, cost, belief) slice puts a Boltzmann prior on the net
    utility of each goal: its reward minus the shortest path cost from the
    initial state. Every other dimension is uniform.

    """
    beliefs: List[Optional[Belief]] = [None]
    impossible: Set[int] = set()
    if cfg.partial:
        if space is None:
            assert cfg.belief_config is not None
            space = BeliefSpace(env, cfg.belief_config, initial)
        observation = space.observe(initial)
        beliefs = []
        for belief in space.initial_beliefs():
            try:
                beliefs.append(belief.update(observation, initial))
            except ImpossibleObservationError:
                # a fully confident belief the first frame already contradicts
                impossible.add(belief.anchor)
                beliefs.append(belief)

    rewards: List[Optional[RewardProfile]] = list(cfg.rewards) or [None]
    shared = -math.log(len(rewards)) - math.log(len(cfg.costs)) - math.log(len(beliefs))
    hypotheses: List[Hypothesis] = []
    for goal in cfg.goals:
        for reward in rewards:
            for cost in cfg.costs:
                for belief in beliefs:
                    hypotheses.append(Hypothesis(goal, reward, cost, belief))

    def ruled_out(hyp: Hypothesis) -> bool:
        return hyp.belief is not None and hyp.belief.anchor in impossible

    if not cfg.rewards:
        goal_prior = -math.log(len(cfg.goals)) + shared
        return [(hyp, -math.inf if ruled_out(hyp) else goal_prior) for hyp in hypotheses]

    if planner is None:
        raise LirasError("a planner is required for reward-based goal priors")
    utilities: Dict[Tuple[int, int, int, int], float] = {}
    for hyp in hypotheses:
        if ruled_out(hyp):
            utilities[hyp.key] = -math.inf
            continue
        cost = _expected_path_cost(planner, initial, hyp.goal, hyp.cost, hyp.belief)
        utilities[hyp.key] = (
            cfg.beta * (hyp.goal_reward - cost) if math.isfinite(cost) else -math.inf
        )

    result = []
    for hyp in hypotheses:
        slice_values = [utilities[(goal.index,) + hyp.key[1:]] for goal in cfg.goals]
        norm = logsumexp(slice_values)
        if not math.isfinite(norm):
            logger.warning("every goal is unreachable for hypothesis slice %s", hyp.key[1:])
            result.append((hyp, -math.inf))
            continue
        result.append((hyp, utilities[hyp.key] - norm + shared))
    return result


def softmax_log(values: Sequence[float], beta: float) -> np.ndarray:
    """Log-probabilities proportional to ``exp(beta * value)``; uniform if all are -inf."""
    scaled = np.array([beta * value if value != -math.inf else -math.inf for value in values])
    if not len(scaled):
        return scaled
    if np.all(np.isneginf(scaled)):
        warnings.warn(
            "every action has utility -inf; using a uniform distribution",
            DegenerateDistributionWarning,
            stacklevel=2,
        )
        return np.full(len(scaled), -math.log(len(scaled)))
    return scaled - logsumexp(scaled)


def action_log_distribution(
    hypothesis: Hypothesis,
    state: WorldState,
    planner: "Planner",
    beta: float,
    belief: Optional[Belief] = None,
) -> Dict[GroundAction, float]:
    """Log-probability of each available action under ``hypothesis``.

    Under partial observability the available actions are those valid in at
    least one particle and utilities are belief-space Q-values. A no-op
    competes only when the cost profile prices it.

    """
    env = planner.env
    if belief is None:
        actions = valid_actions(env, state)
        if hypothesis.cost.cost(NOOP_COST_KEY) is not None:
            actions.append(NOOP)
        values = [planner.q_value(hypothesis, state, action).utility for action in actions]
    else:
        particles = belief.particles(state)
        candidates: Set[GroundAction] = set()
        for particle, _ in particles:
            candidates.update(valid_actions(env, particle))
        actions = sorted(candidates)
        if hypothesis.cost.cost(NOOP_COST_KEY) is not None:
            actions.append(NOOP)
        values = [
            planner.belief_q_value(hypothesis, particles, action).utility for action in actions
        ]
    log_probs = softmax_log(values, beta)
    return dict(zip(actions, (float(value) for value in log_probs)))


def action_distribution(
    hypothesis: Hypothesis,
    state: WorldState,
    planner: "Planner",
    beta: float,
    belief: Optional[Belief] = None,
) -> Dict[GroundAction, float]:
    """Boltzmann action probabilities, summing to one."""
    logs = action_log_distribution(hypothesis, state, planner, beta, belief)
    return {action: math.exp(value) for action, value in logs.items()}
