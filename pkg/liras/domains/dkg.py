"""Doors, keys and gems.

A player walks a maze of walls to pick up one of several gems; colored
doors block some corridors and colored keys open them. The variants differ
only in what ``unlock`` does:

* ``single``: one key of the door's color opens it and is used up.
* ``double``: two keys of the door's color are needed and both are used up.
* ``reuse``: holding one key of the door's color is enough; it is kept.
* ``inverse``: one key of a *different* color opens it, as fixed by a
  key-color to door-color bijection; the key is used up.

The multi-agent variant adds an assistant who takes turns with the player.

"""
import logging

from typing import Dict
from typing import List
from typing import Mapping
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple

from liras.agent import AgentConfig
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


VARIANTS = ("single", "double", "reuse", "inverse")
DEFAULT_COLORS = ("blue", "red")
DEFAULT_GEMS = ("a", "b", "c", "d")
DEFAULT_GRID = GridDims(5, 5)
PLAYER = "player"
PRINCIPAL = "principal"
ASSISTANT = "assistant"

# (name, axis, sign, bound test)
DIRECTIONS = (
    ("up", "yloc", -1, "(> (yloc ?a) 1)"),
    ("down", "yloc", 1, "(< (yloc ?a) (gridheight))"),
    ("left", "xloc", -1, "(> (xloc ?a) 1)"),
    ("right", "xloc", 1, "(< (xloc ?a) (gridwidth))"),
)


class DkgVariant(NamedTuple):
    rule: str
    mapping: Tuple[Tuple[str, str], ...] = ()

    @classmethod
    def rotated(cls, colors: Sequence[str]) -> "DkgVariant":
        """The inverse variant where each key opens the door of the next color."""
        colors = list(colors)
        return cls("inverse", tuple(zip(colors, colors[1:] + colors[:1])))

    def check(self, colors: Sequence[str]) -> None:
        if self.rule not in VARIANTS:
            raise LirasError(f"unknown DKG variant {self.rule!r}; expected one of {VARIANTS}")
        if self.rule != "inverse":
            if self.mapping:
                raise LirasError(f"the {self.rule} variant takes no color mapping")
            return
        if not self.mapping:
            raise LirasError("the inverse variant needs a key-color to door-color mapping")
        keys = [key for key, _ in self.mapping]
        doors = [door for _, door in self.mapping]
        if sorted(keys) != sorted(colors) or sorted(doors) != sorted(colors):
            raise LirasError(
                f"the inverse mapping must be a bijection on the colors {list(colors)}"
            )
        same = [key for key, door in self.mapping if key == door]
        if same:
            raise LirasError(f"in the inverse variant a key never opens its own color: {same}")


def _color_codes(colors: Sequence[str]) -> Dict[str, str]:
    initials = [color[0] for color in colors]
    return {
        color: color[0] if initials.count(color[0]) == 1 else color for color in colors
    }


def _gem_name(gem: str) -> str:
    return f"gem_{gem}"


# pddl text


def _turn_guard(multi: bool) -> List[str]:
    return ["(= turn (agentcode ?a))"] if multi else []


def _turn_effect(multi: bool) -> List[str]:
    return ["(assign turn (- 1 turn))"] if multi else []


def _action(name: str, params: str, precondition: List[str], effect: List[str]) -> str:
    return "\n".join(
        [
            f"  (:action {name}",
            f"   :parameters ({params})",
            "   :precondition (and {})".format("\n      ".join(precondition)),
            "   :effect (and {}))".format("\n      ".join(effect)),
        ]
    )


def _moves(multi: bool) -> List[str]:
    actions = []
    for name, axis, sign, bound in DIRECTIONS:
        op = "decrease" if sign < 0 else "increase"
        delta = "-" if sign < 0 else "+"
        row = f"({delta} (yloc ?a) 1)" if axis == "yloc" else "(yloc ?a)"
        col = f"({delta} (xloc ?a) 1)" if axis == "xloc" else "(xloc ?a)"
        actions.append(
            _action(
                name,
                "?a - agent",
                _turn_guard(multi)
                + [
                    bound,
                    f"(= (get-index wall {row} {col}) false)",
                    f"(= (get-index doorway {row} {col}) false)",
                ],
                [f"({op} ({axis} ?a) 1)"] + _turn_effect(multi),
            )
        )
        other = "xloc" if axis == "yloc" else "yloc"
        actions.append(
            _action(
                f"{name}-door",
                "?a - agent ?d - door",
                _turn_guard(multi)
                + [
                    "(not (locked ?d))",
                    f"(= ({other} ?d) ({other} ?a))",
                    f"(= ({axis} ?d) ({delta} ({axis} ?a) 1))",
                ],
                [f"({op} ({axis} ?a) 1)"] + _turn_effect(multi),
            )
        )
    return actions


def _unlock(variant: DkgVariant, multi: bool) -> str:
    guard = _turn_guard(multi) + ["(locked ?d)", "(adjacent ?a ?d)"]
    if variant.rule == "inverse":
        return _action(
            "unlock",
            "?a - agent ?d - door ?k - color ?c - color",
            guard + ["(iscolor ?d ?c)", "(opens ?k ?c)", "(>= (keycount ?a ?k) 1)"],
            ["(not (locked ?d))", "(decrease (keycount ?a ?k) 1)"] + _turn_effect(multi),
        )
    needed = 2 if variant.rule == "double" else 1
    effect = ["(not (locked ?d))"]
    if variant.rule != "reuse":
        effect.append(f"(decrease (keycount ?a ?c) {needed})")
    return _action(
        "unlock",
        "?a - agent ?d - door ?c - color",
        guard + ["(iscolor ?d ?c)", f"(>= (keycount ?a ?c) {needed})"],
        effect + _turn_effect(multi),
    )


def dkg_pddl(
    variant: DkgVariant,
    colors: Sequence[str],
    gems: Sequence[str],
    agents: Sequence[str] = (PLAYER,),
    allow_handoff: bool = False,
) -> str:
    multi = len(agents) > 1
    name = f"dkg-{variant.rule}" if not multi else "dkg-multiagent"
    functions = [
        "(gridheight) (gridwidth) - integer",
        "(xloc ?o - object) (yloc ?o - object) - integer",
        "(keycount ?a - agent ?c - color) - integer",
    ]
    if multi:
        functions.append("(agentcode ?a - agent) (turn) - integer")
    functions.append("(wall) (doorway) - bit-matrix")
    predicates = [
        "(has ?a - agent ?i - item)",
        "(iscolor ?o - object ?c - color)",
        "(locked ?d - door)",
        "(at ?a - agent ?o - object)",
        "(adjacent ?a - agent ?o - object)",
    ]
    if variant.rule == "inverse":
        predicates.append("(opens ?k - color ?c - color)")

    gem_guard = _turn_guard(multi) + ["(at ?a ?g)", "(not (has ?a ?g))"]
    if multi and not allow_handoff:
        gem_guard.append("(= (agentcode ?a) 0)")
    actions = _moves(multi) + [
        _action(
            "pickup-key",
            "?a - agent ?k - key ?c - color",
            _turn_guard(multi) + ["(at ?a ?k)", "(iscolor ?k ?c)"],
            ["(increase (keycount ?a ?c) 1)", "(assign (xloc ?k) -1)", "(assign (yloc ?k) -1)"]
            + _turn_effect(multi),
        ),
        _action(
            "pickup-gem",
            "?a - agent ?g - gem",
            gem_guard,
            ["(has ?a ?g)", "(assign (xloc ?g) -1)", "(assign (yloc ?g) -1)"]
            + _turn_effect(multi),
        ),
        _unlock(variant, multi),
    ]
    if multi:
        actions.append(_action("wait", "?a - agent", _turn_guard(multi), _turn_effect(multi)))
        if allow_handoff:
            actions.append(
                _action(
                    "handoff",
                    "?a - agent ?b - agent ?g - gem",
                    _turn_guard(multi) + ["(has ?a ?g)", "(adjacent ?a ?b)"],
                    ["(not (has ?a ?g))", "(has ?b ?g)"] + _turn_effect(multi),
                )
            )

    adjacent = " ".join(
        f"(and (= (xloc ?a) (+ (xloc ?o) {dx})) (= (yloc ?a) (+ (yloc ?o) {dy})))"
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
    )
    lines = [
        f"(define (domain {name})",
        "  (:requirements :fluents :adl :typing :derived-predicates)",
        "  (:types",
        "    key gem - item",
        "    item door agent - object",
        "    color",
        "  )",
        "  (:constants",
        "    {} - agent".format(" ".join(agents)),
        "    {} - color".format(" ".join(colors)),
        "    {} - gem".format(" ".join(_gem_name(gem) for gem in gems)),
        "  )",
        "  (:predicates",
        *(f"    {predicate}" for predicate in predicates),
        "  )",
        "  (:functions",
        *(f"    {function}" for function in functions),
        "  )",
        "  (:derived (at ?a - agent ?o - object)",
        "    (and (= (xloc ?a) (xloc ?o)) (= (yloc ?a) (yloc ?o))))",
        "  (:derived (adjacent ?a - agent ?o - object)",
        f"    (or {adjacent}))",
        *actions,
        ")",
    ]
    return "\n".join(lines) + "\n"


# legend and config


def dkg_legend(colors: Sequence[str], gems: Sequence[str], agents: Sequence[str]) -> Legend:
    codes = _color_codes(colors)
    entries = [
        LegendEntry(".", "empty"),
        LegendEntry("#", "terrain", terrain=("wall",)),
    ]
    agent_symbols = ("@", "&")
    for symbol, agent in zip(agent_symbols, agents):
        entries.append(LegendEntry(symbol, "object", type="agent", name=agent))
    for color in colors:
        entries.append(
            LegendEntry(f"k_{codes[color]}", "object", type="key", facts=(f"(iscolor $ {color})",))
        )
    for color in colors:
        entries.append(
            LegendEntry(
                f"D_{codes[color]}",
                "object",
                type="door",
                facts=(f"(iscolor $ {color})", "(locked $)"),
                terrain=("doorway",),
            )
        )
        entries.append(
            LegendEntry(
                f"d_{codes[color]}",
                "object",
                type="door",
                facts=(f"(iscolor $ {color})", "(not (locked $))"),
                terrain=("doorway",),
            )
        )
    for gem in gems:
        entries.append(LegendEntry(gem.upper(), "object", type="gem", name=_gem_name(gem)))
    return Legend(entries)


def _unit_costs(
    action_names: Sequence[str], overrides: Optional[Mapping[str, float]] = None
) -> CostProfile:
    overrides = overrides or {}
    return CostProfile(
        0, tuple((name, float(overrides.get(name, 1.0))) for name in sorted(action_names))
    )


def _config(
    grid: GridDims,
    goals: Sequence[str],
    action_names: Sequence[str],
    action_costs: Optional[Mapping[str, float]],
    temperature: float,
) -> AgentConfig:
    return AgentConfig(
        grid=grid,
        observability="full",
        belief_config=None,
        goals=tuple(GoalSpec(index, (literal,)) for index, literal in enumerate(goals)),
        rewards=(),
        costs=(_unit_costs(action_names, action_costs),),
        query=("goal",),
        temperature=temperature,
        beta=1.0 / temperature,
    )


def _check_names(colors: Sequence[str], gems: Sequence[str]) -> None:
    if not colors:
        raise LirasError("a DKG domain needs at least one color")
    if not gems:
        raise LirasError("a DKG domain needs at least one gem")
    for group, names in (("color", colors), ("gem", gems)):
        if len(set(names)) != len(names):
            raise LirasError(f"duplicate {group} names in {list(names)}")


def build_dkg(
    variant: DkgVariant,
    colors: Sequence[str] = DEFAULT_COLORS,
    grid: GridDims = DEFAULT_GRID,
    gems: Sequence[str] = DEFAULT_GEMS,
    action_costs: Optional[Mapping[str, float]] = None,
    temperature: float = 1.0,
) -> DomainBundle:
    """A single-player DKG bundle for ``variant``.

    :raises: :py:exc:`~liras.lib.LirasError` for an inverse variant without a
        valid color bijection.

    """
    colors = [color.lower() for color in colors]
    _check_names(colors, gems)
    variant.check(colors)
    pddl = dkg_pddl(variant, colors, gems)
    init = [f"(opens {key} {door})" for key, door in variant.mapping]
    goals = [f"(has {PLAYER} {_gem_name(gem)})" for gem in gems]
    bundle_name = f"dkg-{variant.rule}"
    return bundle_from_text(
        bundle_name,
        pddl,
        ObjectSet((ObjectEntry("key1", "key"), ObjectEntry("door1", "door"))),
        _config(grid, goals, _action_names(variant, False, False), action_costs, temperature),
        dkg_legend(colors, gems, (PLAYER,)),
        init,
        {"heuristic": "manhattan"},
    )


def _action_names(variant: DkgVariant, multi: bool, allow_handoff: bool) -> List[str]:
    names = []
    for name, _, _, _ in DIRECTIONS:
        names.extend([name, f"{name}-door"])
    names.extend(["pickup-key", "pickup-gem", "unlock"])
    if multi:
        names.append("wait")
        if allow_handoff:
            names.append("handoff")
    return names


def build_multiagent_dkg(
    grid: GridDims = DEFAULT_GRID,
    colors: Sequence[str] = DEFAULT_COLORS,
    gems: Sequence[str] = DEFAULT_GEMS,
    allow_handoff: bool = False,
    action_costs: Optional[Mapping[str, float]] = None,
    temperature: float = 1.0,
) -> DomainBundle:
    """The two-player DKG: a principal who wants a gem and an assistant.

    The agents alternate single actions, starting with the principal. Only
    the principal picks up gems unless ``allow_handoff`` is set, in which
    case either may, and a holder can hand a gem to an adjacent agent. The
    observed pair is modeled as one team minimizing their summed cost.

    """
    colors = [color.lower() for color in colors]
    _check_names(colors, gems)
    variant = DkgVariant("single")
    agents = (PRINCIPAL, ASSISTANT)
    pddl = dkg_pddl(variant, colors, gems, agents, allow_handoff)
    goals = [f"(has {PRINCIPAL} {_gem_name(gem)})" for gem in gems]
    init = [f"(= (agentcode {PRINCIPAL}) 0)", f"(= (agentcode {ASSISTANT}) 1)", "(= turn 0)"]
    return bundle_from_text(
        "m-dkg",
        pddl,
        ObjectSet((ObjectEntry("key1", "key"), ObjectEntry("door1", "door"))),
        _config(
            grid, goals, _action_names(variant, True, allow_handoff), action_costs, temperature
        ),
        dkg_legend(colors, gems, agents),
        init,
        {"heuristic": "none", "allow_handoff": allow_handoff},
    )
