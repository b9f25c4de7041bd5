"""Instantiate a lifted domain over a concrete object set.

Grounding turns every action schema into the list of its type-compatible
instantiations and compiles preconditions, effects and derived predicates
into small evaluator trees that read a state's fluent vectors directly. The
state type itself lives in :py:mod:`liras.world`; evaluators here only rely on
its ``facts``, ``ints`` and ``terrain`` attributes.

"""
import itertools
import logging
import threading

from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import Iterator
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Set
from typing import Tuple
from typing import Union

from liras.lib import LirasError
from liras.pddl.domain import DomainSpec
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectSet
from liras.pddl.domain import TypedName
from liras.pddl.formula import AddFact
from liras.pddl.formula import And
from liras.pddl.formula import Arithmetic
from liras.pddl.formula import BoolConst
from liras.pddl.formula import Compare
from liras.pddl.formula import DeleteFact
from liras.pddl.formula import EffectList
from liras.pddl.formula import FunctionTerm
from liras.pddl.formula import GetIndex
from liras.pddl.formula import Node
from liras.pddl.formula import Not
from liras.pddl.formula import Number
from liras.pddl.formula import NumericEffect
from liras.pddl.formula import ObjectRef
from liras.pddl.formula import Or
from liras.pddl.formula import PredicateAtom
from liras.pddl.formula import Variable
from liras.pddl.formula import When


logger = logging.getLogger(__name__)


DEFAULT_ACTION_CAP = 10 ** 6

Value = Union[int, float, bool, str]
Fluent = Tuple[str, int]
GroundAtom = Tuple[str, Tuple[str, ...]]


class GroundingError(LirasError):
    """The domain cannot be instantiated over the given objects."""


# evaluators


class GroundCondition:
    def holds(self, state: Any) -> bool:
        raise NotImplementedError

    def fluents(self) -> Iterator[Fluent]:
        return iter(())


class GroundValue:
    def value(self, state: Any) -> Value:
        raise NotImplementedError

    def fluents(self) -> Iterator[Fluent]:
        return iter(())

    @property
    def constant(self) -> Optional[Value]:
        return None


class GConst(GroundCondition):
    def __init__(self, truth: bool):
        self.truth = truth

    def holds(self, state: Any) -> bool:
        return self.truth


TRUE = GConst(True)
FALSE = GConst(False)


class GFact(GroundCondition):
    def __init__(self, slot: int):
        self.slot = slot

    def holds(self, state: Any) -> bool:
        return self.slot in state.facts

    def fluents(self) -> Iterator[Fluent]:
        yield ("fact", self.slot)


class GAnd(GroundCondition):
    def __init__(self, parts: Sequence[GroundCondition]):
        self.parts = tuple(parts)

    def holds(self, state: Any) -> bool:
        return all(part.holds(state) for part in self.parts)

    def fluents(self) -> Iterator[Fluent]:
        for part in self.parts:
            yield from part.fluents()


class GOr(GroundCondition):
    def __init__(self, parts: Sequence[GroundCondition]):
        self.parts = tuple(parts)

    def holds(self, state: Any) -> bool:
        return any(part.holds(state) for part in self.parts)

    def fluents(self) -> Iterator[Fluent]:
        for part in self.parts:
            yield from part.fluents()


class GNot(GroundCondition):
    def __init__(self, part: GroundCondition):
        self.part = part

    def holds(self, state: Any) -> bool:
        return not self.part.holds(state)

    def fluents(self) -> Iterator[Fluent]:
        return self.part.fluents()


def _compare(op: str, left: Value, right: Value) -> bool:
    if op == "=":
        return left == right
    if isinstance(left, str) or isinstance(right, str):
        return False
    if op == "<":
        return left < right
    if op == ">":
        return left > right
    if op == "<=":
        return left <= right
    return left >= right


class GCompare(GroundCondition):
    def __init__(self, op: str, left: GroundValue, right: GroundValue):
        self.op = op
        self.left = left
        self.right = right

    def holds(self, state: Any) -> bool:
        return _compare(self.op, self.left.value(state), self.right.value(state))

    def fluents(self) -> Iterator[Fluent]:
        yield from self.left.fluents()
        yield from self.right.fluents()


class GNumber(GroundValue):
    def __init__(self, number: Value):
        self.number = number

    def value(self, state: Any) -> Value:
        return self.number

    @property
    def constant(self) -> Optional[Value]:
        return self.number


class GSlot(GroundValue):
    def __init__(self, slot: int):
        self.slot = slot

    def value(self, state: Any) -> Value:
        return state.ints[self.slot]

    def fluents(self) -> Iterator[Fluent]:
        yield ("int", self.slot)


class GArith(GroundValue):
    def __init__(self, op: str, parts: Sequence[GroundValue]):
        self.op = op
        self.parts = tuple(parts)

    def value(self, state: Any) -> Value:
        values = [part.value(state) for part in self.parts]
        if self.op == "+":
            return sum(values)  # type: ignore[arg-type]
        if len(values) == 1:
            return -values[0]  # type: ignore[operator]
        result = values[0]
        for item in values[1:]:
            result -= item  # type: ignore[operator]
        return result

    def fluents(self) -> Iterator[Fluent]:
        for part in self.parts:
            yield from part.fluents()


class GIndex(GroundValue):
    """Bit-matrix lookup; anything off the grid reads as false."""

    def __init__(self, matrix: int, row: GroundValue, col: GroundValue, grid: GridDims):
        self.matrix = matrix
        self.row = row
        self.col = col
        self.grid = grid

    def value(self, state: Any) -> Value:
        row = self.row.value(state)
        col = self.col.value(state)
        if isinstance(row, str) or isinstance(col, str):
            return False
        row, col = int(row), int(col)
        if not (1 <= row <= self.grid.rows and 1 <= col <= self.grid.cols):
            return False
        return state.terrain[self.matrix][row - 1][col - 1]

    def fluents(self) -> Iterator[Fluent]:
        yield ("matrix", self.matrix)
        yield from self.row.fluents()
        yield from self.col.fluents()


class GroundEffect:
    def collect(
        self, state: Any, adds: Set[int], deletes: Set[int], assigns: Dict[int, Value]
    ) -> None:
        raise NotImplementedError

    def fluents(self) -> Iterator[Fluent]:
        return iter(())


class GAdd(GroundEffect):
    def __init__(self, slot: int):
        self.slot = slot

    def collect(
        self, state: Any, adds: Set[int], deletes: Set[int], assigns: Dict[int, Value]
    ) -> None:
        adds.add(self.slot)

    def fluents(self) -> Iterator[Fluent]:
        yield ("fact", self.slot)


class GDel(GroundEffect):
    def __init__(self, slot: int):
        self.slot = slot

    def collect(
        self, state: Any, adds: Set[int], deletes: Set[int], assigns: Dict[int, Value]
    ) -> None:
        deletes.add(self.slot)

    def fluents(self) -> Iterator[Fluent]:
        yield ("fact", self.slot)


class GNumeric(GroundEffect):
    """assign/increase/decrease, evaluated against the pre-state."""

    def __init__(self, op: str, slot: int, amount: GroundValue):
        self.op = op
        self.slot = slot
        self.amount = amount

    def collect(
        self, state: Any, adds: Set[int], deletes: Set[int], assigns: Dict[int, Value]
    ) -> None:
        amount = self.amount.value(state)
        if self.op == "assign":
            assigns[self.slot] = amount
            return
        current = assigns.get(self.slot, state.ints[self.slot])
        if self.op == "increase":
            assigns[self.slot] = current + amount  # type: ignore[operator]
        else:
            assigns[self.slot] = current - amount  # type: ignore[operator]

    def fluents(self) -> Iterator[Fluent]:
        yield ("int", self.slot)
        yield from self.amount.fluents()


class GWhen(GroundEffect):
    def __init__(self, condition: GroundCondition, effects: Sequence[GroundEffect]):
        self.condition = condition
        self.effects = tuple(effects)

    def collect(
        self, state: Any, adds: Set[int], deletes: Set[int], assigns: Dict[int, Value]
    ) -> None:
        if self.condition.holds(state):
            for effect in self.effects:
                effect.collect(state, adds, deletes, assigns)

    def fluents(self) -> Iterator[Fluent]:
        yield from self.condition.fluents()
        for effect in self.effects:
            yield from effect.fluents()


def conjoin(parts: Sequence[GroundCondition]) -> GroundCondition:
    kept = []
    for part in parts:
        if part is FALSE:
            return FALSE
        if part is not TRUE:
            kept.append(part)
    if not kept:
        return TRUE
    if len(kept) == 1:
        return kept[0]
    return GAnd(kept)


def disjoin(parts: Sequence[GroundCondition]) -> GroundCondition:
    kept = []
    for part in parts:
        if part is TRUE:
            return TRUE
        if part is not FALSE:
            kept.append(part)
    if not kept:
        return FALSE
    if len(kept) == 1:
        return kept[0]
    return GOr(kept)


# ground actions


@dataclass(frozen=True, order=True)
class GroundAction:
    """One instantiated action schema; compares and sorts by (name, args)."""

    name: str
    args: Tuple[str, ...] = ()
    precondition: GroundCondition = field(default=TRUE, compare=False, repr=False)
    effects: Tuple[GroundEffect, ...] = field(default=(), compare=False, repr=False)

    @property
    def cost_key(self) -> str:
        return self.name

    def fluents(self) -> Iterator[Fluent]:
        yield from self.precondition.fluents()
        for effect in self.effects:
            yield from effect.fluents()

    def __str__(self) -> str:
        return "({})".format(" ".join((self.name,) + self.args))


NOOP = GroundAction("no-op")


# environment


Binding = Mapping[str, str]


class GroundedEnvironment:
    """A domain instantiated over a fixed object set and grid.

    Lookups from ground atoms to fluent slots are fixed at construction, so an
    environment can be shared freely; compiled derived predicates are memoized
    behind a lock.

    """

    def __init__(
        self,
        domain: DomainSpec,
        objects: ObjectSet,
        grid: GridDims,
        action_cap: int = DEFAULT_ACTION_CAP,
    ):
        self.domain = domain
        self.objects = objects
        self.grid = grid
        self.object_types: Dict[str, str] = {}
        self._derived_memo: Dict[GroundAtom, GroundCondition] = {}
        self._derived_active: Set[GroundAtom] = set()
        self._lock = threading.RLock()

        self._by_type: Dict[str, Tuple[str, ...]] = {}
        self._collect_objects()

        self.fact_atoms: List[GroundAtom] = []
        self.fact_slot: Dict[GroundAtom, int] = {}
        for predicate in domain.predicates:
            if domain.derived_predicate(predicate.name) is not None:
                continue
            for args in self._instances(predicate.parameters):
                self.fact_slot[(predicate.name, args)] = len(self.fact_atoms)
                self.fact_atoms.append((predicate.name, args))

        self.int_terms: List[GroundAtom] = []
        self.int_slot: Dict[GroundAtom, int] = {}
        self.matrix_names: List[str] = []
        self.matrix_slot: Dict[str, int] = {}
        for function in domain.functions:
            if function.is_matrix:
                self.matrix_slot[function.name] = len(self.matrix_names)
                self.matrix_names.append(function.name)
                continue
            for args in self._instances(function.parameters):
                self.int_slot[(function.name, args)] = len(self.int_terms)
                self.int_terms.append((function.name, args))

        self.actions: Tuple[GroundAction, ...] = self._ground_actions(action_cap)
        self.action_index: Dict[Tuple[str, Tuple[str, ...]], GroundAction] = {
            (action.name, action.args): action for action in self.actions
        }
        logger.debug(
            "grounded %s: %d objects, %d facts, %d integers, %d matrices, %d actions",
            domain.name,
            len(self.object_types),
            len(self.fact_atoms),
            len(self.int_terms),
            len(self.matrix_names),
            len(self.actions),
        )

    # objects and types

    def _collect_objects(self) -> None:
        for constant in self.domain.constants:
            self._add_object(constant.name, constant.type)
        for entry in self.objects:
            self._add_object(entry.name, entry.type)
        if self.domain.is_declared_type("agent") and not self.objects_of_type("agent"):
            raise GroundingError("the object set contains no agent")

    def _add_object(self, name: str, type_name: str) -> None:
        if not self.domain.is_declared_type(type_name):
            raise GroundingError(f"object {name!r} has unknown type {type_name!r}")
        existing = self.object_types.get(name)
        if existing is not None and existing != type_name:
            raise GroundingError(
                f"object {name!r} is declared as both {existing!r} and {type_name!r}"
            )
        self.object_types[name] = type_name

    def objects_of_type(self, type_name: str) -> Tuple[str, ...]:
        if type_name in self._by_type:
            return self._by_type[type_name]
        found = tuple(
            name
            for name, declared in self.object_types.items()
            if self.domain.is_subtype(declared, type_name)
        )
        self._by_type[type_name] = found
        return found

    def type_of(self, name: str) -> str:
        try:
            return self.object_types[name]
        except KeyError:
            raise GroundingError(f"unknown object {name!r}")

    def is_a(self, name: str, type_name: str) -> bool:
        return self.domain.is_subtype(self.type_of(name), type_name)

    @property
    def agents(self) -> Tuple[str, ...]:
        return self.objects_of_type("agent")

    @property
    def is_multi_agent(self) -> bool:
        return ("turn", ()) in self.int_slot and self.domain.function("agentcode") is not None

    def _instances(self, params: Sequence[TypedName]) -> Iterator[Tuple[str, ...]]:
        pools = [self.objects_of_type(param.type) for param in params]
        return itertools.product(*pools)

    # compilation

    def _resolve(self, term: Node, binding: Binding) -> str:
        if isinstance(term, Variable):
            try:
                return binding[term.name]
            except KeyError:
                raise GroundingError(f"unbound variable ?{term.name}")
        if isinstance(term, ObjectRef):
            if term.name not in self.object_types:
                raise GroundingError(f"unknown object {term.name!r}")
            return term.name
        raise GroundingError(f"expected an object, got {term.to_pddl()}")

    def compile_condition(self, node: Node, binding: Optional[Binding] = None) -> GroundCondition:
        """Compile a lifted condition under ``binding`` (variable -> object)."""
        binding = binding or {}
        if isinstance(node, BoolConst):
            return TRUE if node.value else FALSE
        if isinstance(node, And):
            return conjoin([self.compile_condition(part, binding) for part in node.parts])
        if isinstance(node, Or):
            return disjoin([self.compile_condition(part, binding) for part in node.parts])
        if isinstance(node, Not):
            inner = self.compile_condition(node.part, binding)
            if isinstance(inner, GConst):
                return FALSE if inner.truth else TRUE
            return GNot(inner)
        if isinstance(node, Compare):
            left = self.compile_value(node.left, binding)
            right = self.compile_value(node.right, binding)
            if left.constant is not None and right.constant is not None:
                return TRUE if _compare(node.op, left.constant, right.constant) else FALSE
            return GCompare(node.op, left, right)
        if isinstance(node, PredicateAtom):
            args = tuple(self._resolve(arg, binding) for arg in node.args)
            return self.atom_condition(node.name, args)
        raise GroundingError(f"not a condition: {node.to_pddl()}")

    def atom_condition(self, name: str, args: Tuple[str, ...]) -> GroundCondition:
        if self.domain.derived_predicate(name) is not None:
            return self._derived(name, args)
        if self.domain.predicate(name) is None:
            raise GroundingError(f"unknown predicate {name!r}")
        slot = self.fact_slot.get((name, args))
        if slot is None:
            # a type-incompatible tuple can never hold
            return FALSE
        return GFact(slot)

    def _derived(self, name: str, args: Tuple[str, ...]) -> GroundCondition:
        key = (name, args)
        with self._lock:
            cached = self._derived_memo.get(key)
            if cached is not None:
                return cached
            if key in self._derived_active:
                raise GroundingError(f"derived predicate {name!r} is defined in terms of itself")
            decl = self.domain.derived_predicate(name)
            assert decl is not None
            if len(decl.parameters) != len(args):
                arity = len(decl.parameters)
                raise GroundingError(f"derived predicate {name!r} takes {arity} arguments")
            if not all(self.is_a(arg, param.type) for arg, param in zip(args, decl.parameters)):
                compiled: GroundCondition = FALSE
            else:
                self._derived_active.add(key)
                try:
                    binding = {param.name: arg for param, arg in zip(decl.parameters, args)}
                    compiled = self.compile_condition(decl.formula, binding)
                finally:
                    self._derived_active.discard(key)
            self._derived_memo[key] = compiled
            return compiled

    def compile_value(self, node: Node, binding: Optional[Binding] = None) -> GroundValue:
        binding = binding or {}
        if isinstance(node, (Number, BoolConst)):
            return GNumber(node.value)
        if isinstance(node, (Variable, ObjectRef)):
            return GNumber(self._resolve(node, binding))
        if isinstance(node, FunctionTerm):
            return GSlot(self.int_slot_of(node, binding))
        if isinstance(node, Arithmetic):
            parts = [self.compile_value(part, binding) for part in node.operands]
            return GArith(node.op, parts)
        if isinstance(node, GetIndex):
            if node.matrix not in self.matrix_slot:
                raise GroundingError(f"unknown bit-matrix {node.matrix!r}")
            return GIndex(
                self.matrix_slot[node.matrix],
                self.compile_value(node.row, binding),
                self.compile_value(node.col, binding),
                self.grid,
            )
        raise GroundingError(f"not a value: {node.to_pddl()}")

    def int_slot_of(self, term: FunctionTerm, binding: Binding) -> int:
        args = tuple(self._resolve(arg, binding) for arg in term.args)
        try:
            return self.int_slot[(term.name, args)]
        except KeyError:
            raise GroundingError(f"no integer fluent ({' '.join((term.name,) + args)})")

    def compile_effects(self, node: Node, binding: Binding) -> List[GroundEffect]:
        if isinstance(node, EffectList):
            effects: List[GroundEffect] = []
            for part in node.parts:
                effects.extend(self.compile_effects(part, binding))
            return effects
        if isinstance(node, (AddFact, DeleteFact)):
            args = tuple(self._resolve(arg, binding) for arg in node.atom.args)
            slot = self.fact_slot.get((node.atom.name, args))
            if slot is None:
                raise GroundingError(f"no fact ({' '.join((node.atom.name,) + args)})")
            return [GAdd(slot) if isinstance(node, AddFact) else GDel(slot)]
        if isinstance(node, NumericEffect):
            slot = self.int_slot_of(node.target, binding)
            return [GNumeric(node.op, slot, self.compile_value(node.value, binding))]
        if isinstance(node, When):
            condition = self.compile_condition(node.condition, binding)
            if condition is FALSE:
                return []
            inner = self.compile_effects(node.effect, binding)
            if condition is TRUE:
                return inner
            return [GWhen(condition, inner)]
        raise GroundingError(f"not an effect: {node.to_pddl()}")

    def _ground_actions(self, cap: int) -> Tuple[GroundAction, ...]:
        total = 0
        for schema in self.domain.actions:
            count = 1
            for param in schema.parameters:
                count *= len(self.objects_of_type(param.type))
            total += count
        if total > cap:
            raise GroundingError(
                f"grounding would produce {total} actions, over the cap of {cap}; "
                "reduce the object set or raise grounding.action_cap"
            )

        actions = []
        for schema in self.domain.actions:
            names = [param.name for param in schema.parameters]
            for args in self._instances(schema.parameters):
                binding = dict(zip(names, args))
                actions.append(
                    GroundAction(
                        schema.name,
                        tuple(args),
                        self.compile_condition(schema.precondition, binding),
                        tuple(self.compile_effects(schema.effect, binding)),
                    )
                )
        return tuple(sorted(actions))

    # names for diagnostics

    def fact_name(self, slot: int) -> str:
        name, args = self.fact_atoms[slot]
        return "({})".format(" ".join((name,) + args))

    def int_name(self, slot: int) -> str:
        name, args = self.int_terms[slot]
        return "({})".format(" ".join((name,) + args))

    def action(self, name: str, *args: str) -> GroundAction:
        try:
            return self.action_index[(name, tuple(args))]
        except KeyError:
            raise GroundingError(f"no ground action ({' '.join((name,) + args)})")

    def has_fluent(self, fluent: Fluent) -> bool:
        kind, slot = fluent
        if kind == "fact":
            return 0 <= slot < len(self.fact_atoms)
        if kind == "int":
            return 0 <= slot < len(self.int_terms)
        return 0 <= slot < len(self.matrix_names)


def ground(
    spec: DomainSpec,
    objects: ObjectSet,
    grid: GridDims,
    action_cap: int = DEFAULT_ACTION_CAP,
) -> GroundedEnvironment:
    """Instantiate ``spec`` over ``objects`` on a ``grid``.

    :raises: :py:exc:`GroundingError` on unknown types, conflicting object
        declarations, or when the number of ground actions would exceed
        ``action_cap``.

    """
    if grid.rows < 1 or grid.cols < 1:
        raise GroundingError(f"grid dimensions must be positive, got {grid.rows}x{grid.cols}")
    return GroundedEnvironment(spec, objects, grid, action_cap)

