"""Food trucks: a hungry student who cannot see every parking spot.

Trucks sit in parking spots around a campus of buildings. The student
knows where the spots are but not which truck is in which spot until a spot
is in view, so what they do reveals both which truck they want and where
they thought it was. Buildings block both walking and seeing.

"""
import logging

from typing import List
from typing import Sequence

from liras.agent import AgentConfig
from liras.agent import BeliefConfig
from liras.agent import CostProfile
from liras.agent import GoalSpec
from liras.domains import bundle_from_text
from liras.domains import DomainBundle
from liras.lib import LirasError
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectEntry
from liras.pddl.domain import ObjectSet
from liras.stimulus import Legend
from liras.stimulus import LegendEntry


logger = logging.getLogger(__name__)


STUDENT = "student"
DEFAULT_TRUCKS = ("korean", "lebanese")
DEFAULT_SPOTS = ("spot1", "spot2")
DEFAULT_GRID = GridDims(5, 5)
MOVES = (
    ("up", "yloc", "decrease", "(> (yloc ?a) 1)", "(- (yloc ?a) 1)", "(xloc ?a)"),
    ("down", "yloc", "increase", "(< (yloc ?a) (gridheight))", "(+ (yloc ?a) 1)", "(xloc ?a)"),
    ("left", "xloc", "decrease", "(> (xloc ?a) 1)", "(yloc ?a)", "(- (xloc ?a) 1)"),
    ("right", "xloc", "increase", "(< (xloc ?a) (gridwidth))", "(yloc ?a)", "(+ (xloc ?a) 1)"),
)


def foodtruck_pddl(trucks: Sequence[str]) -> str:
    actions = []
    for name, axis, op, bound, row, col in MOVES:
        actions.append(
            f"""  (:action {name}
   :parameters (?a - agent)
   :precondition (and {bound}
      (= (get-index building {row} {col}) false))
   :effect (and ({op} ({axis} ?a) 1)))"""
        )
    return "\n".join(
        [
            "(define (domain foodtruck)",
            "  (:requirements :fluents :adl :typing :derived-predicates)",
            "  (:types truck spot agent - object)",
            "  (:constants",
            f"    {STUDENT} - agent",
            "    {} - truck".format(" ".join(trucks)),
            "  )",
            "  (:predicates (at ?a - agent ?o - object))",
            "  (:functions",
            "    (gridheight) (gridwidth) - integer",
            "    (xloc ?o - object) (yloc ?o - object) - integer",
            "    (building) - bit-matrix",
            "  )",
            "  (:derived (at ?a - agent ?o - object)",
            "    (and (= (xloc ?a) (xloc ?o)) (= (yloc ?a) (yloc ?o))))",
            *actions,
            ")",
        ]
    ) + "\n"


def _truck_symbols(trucks: Sequence[str]) -> List[str]:
    initials = [truck[0].upper() for truck in trucks]
    return [
        initial if initials.count(initial) == 1 else truck.upper()
        for initial, truck in zip(initials, trucks)
    ]


def foodtruck_legend(trucks: Sequence[str]) -> Legend:
    entries = [
        LegendEntry(".", "empty"),
        LegendEntry("#", "terrain", terrain=("building",)),
        LegendEntry("S", "object", type="spot"),
    ]
    for symbol, truck in zip(_truck_symbols(trucks), trucks):
        entries.append(LegendEntry(symbol, "object", type="truck", name=truck))
    entries.append(LegendEntry("@", "object", type="agent", name=STUDENT))
    return Legend(entries)


def build_foodtruck(
    grid: GridDims = DEFAULT_GRID,
    trucks: Sequence[str] = DEFAULT_TRUCKS,
    spots: Sequence[str] = DEFAULT_SPOTS,
    allow_absent: bool = False,
    confidence: float = 0.75,
    visibility: str = "line_of_sight",
    temperature: float = 1.0,
) -> DomainBundle:
    """A food-truck bundle with one goal per truck: eating there.

    The belief space is every placement of the parked trucks into spots,
    injective while there are enough spots, plus worlds where a truck is
    absent when ``allow_absent`` is set.

    """
    trucks = [truck.lower() for truck in trucks]
    if not trucks:
        raise LirasError("the food-truck domain needs at least one truck")
    if len(set(trucks)) != len(trucks):
        raise LirasError(f"duplicate truck names in {trucks}")
    if len(spots) < 1:
        raise LirasError("the food-truck domain needs at least one parking spot")
    config = AgentConfig(
        grid=grid,
        observability="partial",
        belief_config=BeliefConfig(
            belief_object="truck",
            belief_container="spot",
            barrier="building",
            agent=STUDENT,
            confidence=confidence,
            allow_absent=allow_absent,
            visibility=visibility,
        ),
        goals=tuple(
            GoalSpec(index, (f"(at {STUDENT} {truck})",)) for index, truck in enumerate(trucks)
        ),
        rewards=(),
        costs=(CostProfile(0, tuple((name, 1.0) for name in sorted(m[0] for m in MOVES))),),
        query=("goal", "belief"),
        temperature=temperature,
        beta=1.0 / temperature,
    )
    return bundle_from_text(
        "foodtruck",
        foodtruck_pddl(trucks),
        ObjectSet(tuple(ObjectEntry(spot, "spot") for spot in spots)),
        config,
        foodtruck_legend(trucks),
        (),
        {"heuristic": "manhattan"},
    )
