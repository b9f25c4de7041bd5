"""Deterministic environment semantics over a grounded domain.

A :py:class:`WorldState` is an immutable value holding the integer fluent
vector, the set of true ground facts and the bit-matrix terrains. States are
hashable and compare structurally, which is what the planner's memo cache and
action reconstruction rely on.

"""
import hashlib
import json
import logging
import warnings

from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Set
from typing import Tuple
from typing import Union

from liras.lib import LirasError
from liras.pddl.grounding import GroundAction
from liras.pddl.grounding import GroundAtom
from liras.pddl.grounding import GroundedEnvironment
from liras.pddl.grounding import NOOP
from liras.pddl.grounding import Value
from liras.pddl.sexpr import Atom
from liras.pddl.sexpr import PddlSyntaxError
from liras.pddl.sexpr import read
from liras.pddl.sexpr import SExpr


logger = logging.getLogger(__name__)


Matrix = Tuple[Tuple[bool, ...], ...]


class PreconditionError(LirasError):
    """An action was applied in a state where it is not valid."""

    def __init__(self, action: GroundAction):
        super().__init__(f"{action} is not applicable in this state")
        self.action = action


class NoExplainingActionError(LirasError):
    """No single action turns one state into the next."""

    def __init__(self, diff: Mapping[str, object], index: Optional[int] = None):
        rendered = ", ".join(f"{key}: {value}" for key, value in sorted(diff.items()))
        where = f" at step {index}" if index is not None else ""
        super().__init__(f"no action explains the transition{where}; diff {{{rendered}}}")
        self.diff = dict(diff)
        self.index = index


class AmbiguousReconstructionWarning(UserWarning):
    """More than one action explains a transition; the first in canonical order was kept."""


class WorldState:
    """One symbolic state; never mutated after construction."""

    __slots__ = ("ints", "facts", "terrain", "_hash")

    def __init__(
        self,
        ints: Sequence[Value],
        facts: Iterable[int],
        terrain: Sequence[Matrix],
    ):
        self.ints: Tuple[Value, ...] = tuple(ints)
        self.facts: FrozenSet[int] = frozenset(facts)
        self.terrain: Tuple[Matrix, ...] = tuple(terrain)
        self._hash = hash((self.ints, self.facts, self.terrain))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WorldState):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.ints == other.ints
            and self.facts == other.facts
            and self.terrain == other.terrain
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"<WorldState ints={self.ints} facts={sorted(self.facts)}>"

    def replace(
        self,
        ints: Optional[Sequence[Value]] = None,
        facts: Optional[Iterable[int]] = None,
        terrain: Optional[Sequence[Matrix]] = None,
    ) -> "WorldState":
        return WorldState(
            self.ints if ints is None else ints,
            self.facts if facts is None else facts,
            self.terrain if terrain is None else terrain,
        )

    def digest(self) -> str:
        """A stable hash of the canonical serialization of this state."""
        canonical = json.dumps(
            [
                list(self.ints),
                sorted(self.facts),
                [
                    "".join("1" if cell else "0" for row in matrix for cell in row)
                    for matrix in self.terrain
                ],
            ],
            separators=(",", ":"),
        )
        return hashlib.blake2b(canonical.encode("utf-8"), digest_size=16).hexdigest()


def blank_state(env: GroundedEnvironment) -> WorldState:
    """A state with no facts, zero integers, empty terrain and the grid size set."""
    ints: List[Value] = [0] * len(env.int_terms)
    if ("gridheight", ()) in env.int_slot:
        ints[env.int_slot[("gridheight", ())]] = env.grid.rows
    if ("gridwidth", ()) in env.int_slot:
        ints[env.int_slot[("gridwidth", ())]] = env.grid.cols
    empty = tuple(tuple(False for _ in range(env.grid.cols)) for _ in range(env.grid.rows))
    return WorldState(ints, (), [empty] * len(env.matrix_names))


def update_state(
    env: GroundedEnvironment,
    state: WorldState,
    facts: Optional[Mapping[GroundAtom, bool]] = None,
    ints: Optional[Mapping[GroundAtom, Value]] = None,
    terrain: Optional[Mapping[str, Sequence[Sequence[bool]]]] = None,
) -> WorldState:
    """Return ``state`` with the named fluents overwritten."""
    new_facts: Set[int] = set(state.facts)
    for atom, truth in (facts or {}).items():
        slot = _fact_slot(env, atom)
        if truth:
            new_facts.add(slot)
        else:
            new_facts.discard(slot)

    new_ints = list(state.ints)
    for term, value in (ints or {}).items():
        if term not in env.int_slot:
            raise LirasError(f"no integer fluent {_render(term)}")
        new_ints[env.int_slot[term]] = value

    new_terrain = list(state.terrain)
    for name, rows in (terrain or {}).items():
        if name not in env.matrix_slot:
            raise LirasError(f"no bit-matrix {name!r}")
        new_terrain[env.matrix_slot[name]] = _matrix(env, name, rows)
    return WorldState(new_ints, new_facts, new_terrain)


def _render(atom: GroundAtom) -> str:
    name, args = atom
    return "({})".format(" ".join((name,) + tuple(args)))


def _fact_slot(env: GroundedEnvironment, atom: GroundAtom) -> int:
    try:
        return env.fact_slot[(atom[0], tuple(atom[1]))]
    except KeyError:
        raise LirasError(f"no ground fact {_render(atom)}")


def _matrix(
    env: GroundedEnvironment, name: str, rows: Sequence[Sequence[Union[bool, int]]]
) -> Matrix:
    if len(rows) != env.grid.rows or any(len(row) != env.grid.cols for row in rows):
        raise LirasError(
            f"bit-matrix {name!r} must be {env.grid.rows}x{env.grid.cols}"
        )
    return tuple(tuple(bool(cell) for cell in row) for row in rows)


# problem-init blocks


def state_from_init(
    env: GroundedEnvironment, text: str, base: Optional[WorldState] = None
) -> WorldState:
    """Parse a problem ``(:init ...)`` block (or a bare list of facts).

    The parsed fluents overwrite ``base`` when given, a blank state otherwise.

    """
    forms = read(text)
    items: List[SExpr] = []
    for form in forms:
        if form.head() == ":init":
            items.extend(item for item in form.items[1:] if isinstance(item, SExpr))
        else:
            items.append(form)

    facts: Dict[GroundAtom, bool] = {}
    ints: Dict[GroundAtom, Value] = {}
    terrain: Dict[str, List[List[bool]]] = {}
    for item in items:
        if item.head() != "=":
            names = [_atom(part) for part in item.items]
            facts[(names[0], tuple(names[1:]))] = True
            continue
        if len(item.items) != 3:
            raise PddlSyntaxError("expected (= <term> <value>)", item.line, item.column)
        target, value = item.items[1], item.items[2]
        if isinstance(target, Atom):
            term: GroundAtom = (target.text.lower(), ())
        else:
            names = [_atom(part) for part in target.items]
            term = (names[0], tuple(names[1:]))
        if isinstance(value, SExpr) and value.head() == "bit-matrix":
            terrain[term[0]] = [
                [_atom(cell) not in ("0", "false") for cell in row.items]
                for row in value.items[1:]
                if isinstance(row, SExpr)
            ]
            continue
        ints[term] = _init_value(value)
    return update_state(env, base or blank_state(env), facts, ints, terrain)


def _atom(node: object) -> str:
    if not isinstance(node, Atom):
        where = node if isinstance(node, SExpr) else None
        raise PddlSyntaxError(
            "expected a name", where.line if where else 0, where.column if where else 0
        )
    return node.text.lower()


def _init_value(node: object) -> Value:
    text = _atom(node)
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        return float(text)


def state_to_init(env: GroundedEnvironment, state: WorldState) -> str:
    lines = ["(:init"]
    for slot in sorted(state.facts):
        lines.append("  " + env.fact_name(slot))
    for slot, value in enumerate(state.ints):
        lines.append(f"  (= {env.int_name(slot)} {value})")
    for slot, matrix in enumerate(state.terrain):
        rows = " ".join(
            "({})".format(" ".join("1" if cell else "0" for cell in row)) for row in matrix
        )
        lines.append(f"  (= ({env.matrix_names[slot]}) (bit-matrix {rows}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


# dynamics


def valid_actions(env: GroundedEnvironment, state: WorldState) -> List[GroundAction]:
    """Actions whose preconditions hold in ``state``, in canonical order."""
    return [action for action in env.actions if action.precondition.holds(state)]


def apply(env: GroundedEnvironment, state: WorldState, action: GroundAction) -> WorldState:
    """Apply every effect of ``action`` at once, reading values from ``state``.

    :raises: :py:exc:`PreconditionError` if ``action`` is not valid in ``state``.

    """
    if action == NOOP:
        return state
    if not action.precondition.holds(state):
        raise PreconditionError(action)
    return _successor(state, action)


def _successor(state: WorldState, action: GroundAction) -> WorldState:
    adds: Set[int] = set()
    deletes: Set[int] = set()
    assigns: Dict[int, Value] = {}
    for effect in action.effects:
        effect.collect(state, adds, deletes, assigns)
    if not (adds or deletes or assigns):
        return state
    ints = list(state.ints)
    for slot, value in assigns.items():
        ints[slot] = value
    facts = (state.facts - deletes) | adds
    return WorldState(ints, facts, state.terrain)


def successors(
    env: GroundedEnvironment, state: WorldState
) -> List[Tuple[GroundAction, WorldState]]:
    return [(action, _successor(state, action)) for action in valid_actions(env, state)]


def fluent_diff(
    env: GroundedEnvironment, before: WorldState, after: WorldState
) -> Dict[str, object]:
    """Describe what changed between two states, keyed by fluent name."""
    diff: Dict[str, object] = {}
    for slot, (old, new) in enumerate(zip(before.ints, after.ints)):
        if old == new:
            continue
        name = env.int_name(slot)
        if isinstance(old, (int, float)) and isinstance(new, (int, float)):
            delta = new - old
            diff[name] = f"+{delta}" if delta > 0 else str(delta)
        else:
            diff[name] = f"{old} -> {new}"
    for slot in sorted(after.facts - before.facts):
        diff[env.fact_name(slot)] = "added"
    for slot in sorted(before.facts - after.facts):
        diff[env.fact_name(slot)] = "removed"
    for slot, (old, new) in enumerate(zip(before.terrain, after.terrain)):
        if old != new:
            diff[f"({env.matrix_names[slot]})"] = "changed"
    return diff


def explaining_actions(
    env: GroundedEnvironment, before: WorldState, after: WorldState
) -> List[GroundAction]:
    return [action for action, nxt in successors(env, before) if nxt == after]


def reconstruct_action(
    env: GroundedEnvironment,
    before: WorldState,
    after: WorldState,
    index: Optional[int] = None,
) -> GroundAction:
    """The first action in canonical order that turns ``before`` into ``after``.

    Identical states with no explaining action yield :py:data:`NOOP`.

    :raises: :py:exc:`NoExplainingActionError` listing the fluent differences.

    """
    candidates = explaining_actions(env, before, after)
    if not candidates:
        if before == after:
            return NOOP
        raise NoExplainingActionError(fluent_diff(env, before, after), index)
    if len(candidates) > 1:
        warnings.warn(
            "{} actions explain the transition{}: {}; keeping {}".format(
                len(candidates),
                f" at step {index}" if index is not None else "",
                ", ".join(str(action) for action in candidates),
                candidates[0],
            ),
            AmbiguousReconstructionWarning,
            stacklevel=2,
        )
    return candidates[0]
