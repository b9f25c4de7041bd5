"""Astronaut: picking up care packages across alien terrain.

Every cell has exactly one terrain and walking off a cell costs whatever
that terrain costs, so the route an astronaut takes reveals how costly they
find each terrain and which packages they care about.

"""
import itertools
import logging

from typing import List
from typing import Sequence
from typing import Tuple

from liras.agent import AgentConfig
from liras.agent import CostProfile
from liras.agent import GoalSpec
from liras.agent import RewardProfile
from liras.domains import bundle_from_text
from liras.domains import DomainBundle
from liras.lib import LirasError
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectSet
from liras.stimulus import Legend
from liras.stimulus import LegendEntry


logger = logging.getLogger(__name__)


ASTRONAUT = "astronaut"
DEFAULT_TERRAINS = ("sand", "rock")
DEFAULT_PACKAGES = ("food", "water")
DEFAULT_GRID = GridDims(5, 5)
DEFAULT_COST_LEVELS = (0.1, 1.0, 2.0, 4.0, 8.0)
DEFAULT_REWARD_LEVELS = (1.0, 5.0, 10.0)
PICKUP_COST = 1.0
MOVES = (
    ("up", "yloc", "decrease", "(> (yloc ?a) 1)"),
    ("down", "yloc", "increase", "(< (yloc ?a) (gridheight))"),
    ("left", "xloc", "decrease", "(> (xloc ?a) 1)"),
    ("right", "xloc", "increase", "(< (xloc ?a) (gridwidth))"),
)


def move_names(terrains: Sequence[str]) -> List[str]:
    return [f"{move}-{terrain}" for terrain in terrains for move, _, _, _ in MOVES]


def astronaut_pddl(terrains: Sequence[str], packages: Sequence[str]) -> str:
    actions = []
    for terrain in terrains:
        for move, axis, op, bound in MOVES:
            actions.append(
                f"""  (:action {move}-{terrain}
   :parameters (?a - agent)
   :precondition (and {bound}
      (= (get-index {terrain} (yloc ?a) (xloc ?a)) true))
   :effect (and ({op} ({axis} ?a) 1)))"""
            )
    actions.append(
        """  (:action pickup
   :parameters (?a - agent ?p - package)
   :precondition (and (at ?a ?p) (not (has ?a ?p)))
   :effect (and (has ?a ?p) (assign (xloc ?p) -1) (assign (yloc ?p) -1)))"""
    )
    return "\n".join(
        [
            "(define (domain astronaut)",
            "  (:requirements :fluents :adl :typing :derived-predicates)",
            "  (:types package agent - object)",
            "  (:constants",
            f"    {ASTRONAUT} - agent",
            "    {} - package".format(" ".join(packages)),
            "  )",
            "  (:predicates",
            "    (has ?a - agent ?p - package)",
            "    (at ?a - agent ?o - object)",
            "  )",
            "  (:functions",
            "    (gridheight) (gridwidth) - integer",
            "    (xloc ?o - object) (yloc ?o - object) - integer",
            "    {} - bit-matrix".format(" ".join(f"({terrain})" for terrain in terrains)),
            "  )",
            "  (:derived (at ?a - agent ?o - object)",
            "    (and (= (xloc ?a) (xloc ?o)) (= (yloc ?a) (yloc ?o))))",
            *actions,
            ")",
        ]
    ) + "\n"


def _symbols(names: Sequence[str], upper: bool) -> List[str]:
    initials = [name[0].upper() if upper else name[0].lower() for name in names]
    return [
        initial if initials.count(initial) == 1 else (name.upper() if upper else name)
        for initial, name in zip(initials, names)
    ]


def astronaut_legend(terrains: Sequence[str], packages: Sequence[str]) -> Legend:
    entries = [LegendEntry(".", "empty")]
    for symbol, terrain in zip(_symbols(terrains, upper=False), terrains):
        entries.append(LegendEntry(symbol, "terrain", terrain=(terrain,)))
    for symbol, package in zip(_symbols(packages, upper=True), packages):
        entries.append(LegendEntry(symbol, "object", type="package", name=package))
    entries.append(LegendEntry("@", "object", type="agent", name=ASTRONAUT))
    return Legend(entries)


def astronaut_goals(packages: Sequence[str], composite: bool) -> List[Tuple[str, ...]]:
    goals: List[Tuple[str, ...]] = [(package,) for package in packages]
    if composite and len(packages) > 1:
        goals.append(tuple(packages))
    return goals


def build_astronaut(
    grid: GridDims = DEFAULT_GRID,
    terrains: Sequence[str] = DEFAULT_TERRAINS,
    packages: Sequence[str] = DEFAULT_PACKAGES,
    cost_levels: Sequence[float] = DEFAULT_COST_LEVELS,
    reward_levels: Sequence[float] = DEFAULT_REWARD_LEVELS,
    composite: bool = False,
    temperature: float = 1.0,
) -> DomainBundle:
    """An astronaut bundle with cost and reward hypothesis grids.

    Every combination of per-terrain costs drawn from ``cost_levels`` is a
    cost profile, and every combination of per-package rewards drawn from
    ``reward_levels`` a reward profile. A goal is a set of packages and is
    worth the sum of their rewards. Cost answers are given per terrain and
    reward answers per package.

    """
    terrains = [terrain.lower() for terrain in terrains]
    packages = [package.lower() for package in packages]
    if len(terrains) < 2:
        raise LirasError("the astronaut domain needs at least two terrains")
    if not packages:
        raise LirasError("the astronaut domain needs at least one package")
    if any(level <= 0 for level in cost_levels) or not cost_levels:
        raise LirasError("terrain cost levels must be positive")
    for group, names in (("terrain", terrains), ("package", packages)):
        if len(set(names)) != len(names):
            raise LirasError(f"duplicate {group} names in {names}")

    goal_sets = astronaut_goals(packages, composite)
    costs = []
    for index, levels in enumerate(itertools.product(cost_levels, repeat=len(terrains))):
        prices = {"pickup": PICKUP_COST}
        for terrain, level in zip(terrains, levels):
            for move, _, _, _ in MOVES:
                prices[f"{move}-{terrain}"] = float(level)
        costs.append(CostProfile(index, tuple(sorted(prices.items()))))
    rewards = []
    for index, levels in enumerate(itertools.product(reward_levels, repeat=len(packages))):
        per_package = {package: float(level) for package, level in zip(packages, levels)}
        rewards.append(
            RewardProfile(
                index,
                tuple(float(sum(per_package[p] for p in goal)) for goal in goal_sets),
                tuple(sorted(per_package.items())),
            )
        )
    config = AgentConfig(
        grid=grid,
        observability="full",
        belief_config=None,
        goals=tuple(
            GoalSpec(index, tuple(f"(has {ASTRONAUT} {p})" for p in goal))
            for index, goal in enumerate(goal_sets)
        ),
        rewards=tuple(rewards),
        costs=tuple(costs),
        query=("cost", "reward"),
        temperature=temperature,
        beta=1.0 / temperature,
        cost_groups=tuple(
            (terrain, tuple(f"{move}-{terrain}" for move, _, _, _ in MOVES))
            for terrain in sorted(terrains)
        ),
    )
    return bundle_from_text(
        "astronaut",
        astronaut_pddl(terrains, packages),
        ObjectSet(),
        config,
        astronaut_legend(terrains, packages),
        (),
        {"heuristic": "none"},
    )
