"""Semantic checks on a parsed domain.

Violations are data: :py:func:`validate_domain` never raises, it reports. The
synthesis loop rejects any sample whose report is not valid.

"""
import json

from typing import Dict
from typing import Iterator
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Set
from typing import Tuple

from liras.pddl.domain import ActionSchema
from liras.pddl.domain import DomainSpec
from liras.pddl.domain import RESERVED_FUNCTIONS
from liras.pddl.domain import ROOT_TYPE
from liras.pddl.domain import TypedName
from liras.pddl.formula import AddFact
from liras.pddl.formula import And
from liras.pddl.formula import BoolConst
from liras.pddl.formula import Compare
from liras.pddl.formula import DeleteFact
from liras.pddl.formula import FunctionTerm
from liras.pddl.formula import GetIndex
from liras.pddl.formula import Node
from liras.pddl.formula import Not
from liras.pddl.formula import Number
from liras.pddl.formula import NumericEffect
from liras.pddl.formula import ObjectRef
from liras.pddl.formula import PredicateAtom
from liras.pddl.formula import Variable


class Violation(NamedTuple):
    code: str
    message: str
    line: int = 0

    def to_json(self) -> Dict[str, object]:
        return {"code": self.code, "message": self.message, "line": self.line}


class ValidationReport(NamedTuple):
    """Violations make a domain invalid; flags are informational only."""

    violations: Tuple[Violation, ...] = ()
    flags: Tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid

    def to_json(self) -> str:
        return json.dumps(
            {
                "valid": self.valid,
                "violations": [violation.to_json() for violation in self.violations],
                "flags": [flag.to_json() for flag in self.flags],
            },
            sort_keys=True,
        )


class _Checker:
    def __init__(self, spec: DomainSpec):
        self.spec = spec
        self.violations: List[Violation] = []
        self.flags: List[Violation] = []
        self.derived_names = {decl.name for decl in spec.derived}
        self.constants = {entry.name for entry in spec.constants}

    def violation(self, code: str, message: str, line: int = 0) -> None:
        self.violations.append(Violation(code, message, line))

    def flag(self, code: str, message: str, line: int = 0) -> None:
        self.flags.append(Violation(code, message, line))

    def check_type(self, name: str, where: str, line: int) -> None:
        if not self.spec.is_declared_type(name):
            self.violation("undeclared-type", f"{where} uses undeclared type {name!r}", line)

    def check_parameters(self, params: Tuple[TypedName, ...], where: str, line: int) -> None:
        seen: Set[str] = set()
        for param in params:
            self.check_type(param.type, where, line)
            if param.name in seen:
                self.violation("duplicate-parameter", f"{where} repeats ?{param.name}", line)
            seen.add(param.name)

    def check_hierarchy(self) -> None:
        for child, _ in self.spec.types:
            if child == ROOT_TYPE:
                self.violation("type-cycle", "the root type 'object' cannot have a parent")
                continue
            chain = list(self.spec.ancestors(child))
            if chain[-1] != ROOT_TYPE and chain[-1] in self.spec.type_parents:
                self.violation("type-cycle", f"type {child!r} is part of a cycle")
        for entry in self.spec.constants:
            self.check_type(entry.type, f"constant {entry.name!r}", 0)

    def check_declarations(self) -> None:
        for predicate in self.spec.predicates:
            where = f"predicate {predicate.name!r}"
            self.check_parameters(predicate.parameters, where, predicate.line)
        matrices = False
        for function in self.spec.functions:
            where = f"function {function.name!r}"
            self.check_parameters(function.parameters, where, function.line)
            if function.is_matrix:
                matrices = True
                if function.parameters:
                    self.violation(
                        "matrix-arity",
                        f"bit-matrix {function.name!r} must not take parameters",
                        function.line,
                    )
        if matrices:
            for reserved in RESERVED_FUNCTIONS:
                if self.spec.function(reserved) is None:
                    self.violation(
                        "missing-reserved-function",
                        f"bit-matrix terrain requires the function {reserved!r}",
                    )

    def check_term(self, node: Node, scope: Dict[str, str], where: str, line: int) -> None:
        if isinstance(node, Variable) and node.name not in scope:
            self.violation("unbound-variable", f"{where} uses unbound ?{node.name}", line)
        if isinstance(node, ObjectRef) and node.name not in self.constants:
            message = f"{where} mentions unknown object {node.name!r}"
            self.violation("unknown-object", message, line)

    def check_node(self, node: Node, scope: Dict[str, str], where: str, line: int) -> None:
        for sub in node.walk():
            if isinstance(sub, PredicateAtom):
                self.check_atom(sub, where, line)
            elif isinstance(sub, FunctionTerm):
                self.check_function_term(sub, where, line)
            elif isinstance(sub, (Variable, ObjectRef)):
                self.check_term(sub, scope, where, line)
            elif isinstance(sub, GetIndex):
                decl = self.spec.function(sub.matrix)
                if decl is None or not decl.is_matrix:
                    self.violation(
                        "undeclared-function",
                        f"{where} indexes unknown bit-matrix {sub.matrix!r}",
                        line,
                    )

    def check_atom(self, atom: PredicateAtom, where: str, line: int) -> None:
        decl = self.spec.predicate(atom.name)
        derived = self.spec.derived_predicate(atom.name)
        arity = decl.arity if decl else (len(derived.parameters) if derived else None)
        if arity is None:
            message = f"{where} uses unknown predicate {atom.name!r}"
            self.violation("undeclared-predicate", message, line)
            return
        if arity != len(atom.args):
            self.violation(
                "arity",
                f"{where} gives {atom.name!r} {len(atom.args)} arguments, expected {arity}",
                line,
            )

    def check_function_term(self, term: FunctionTerm, where: str, line: int) -> None:
        decl = self.spec.function(term.name)
        if decl is None:
            message = f"{where} uses unknown function {term.name!r}"
            self.violation("undeclared-function", message, line)
            return
        if decl.arity != len(term.args):
            self.violation(
                "arity",
                f"{where} gives {term.name!r} {len(term.args)} arguments, expected {decl.arity}",
                line,
            )

    def check_effects(self, action: ActionSchema, scope: Dict[str, str]) -> None:
        where = f"action {action.name!r}"
        for sub in action.effect.walk():
            if isinstance(sub, (AddFact, DeleteFact)) and sub.atom.name in self.derived_names:
                self.violation(
                    "effect-on-derived",
                    f"{where} changes derived predicate {sub.atom.name!r}",
                    action.line,
                )
            if isinstance(sub, NumericEffect):
                decl = self.spec.function(sub.target.name)
                if decl is not None and decl.is_matrix:
                    self.violation(
                        "matrix-assignment",
                        f"{where} assigns to bit-matrix {sub.target.name!r}",
                        action.line,
                    )
        self.check_node(action.effect, scope, where, action.line)

    def check_negative_derived(self, node: Node, where: str, line: int) -> None:
        for sub in node.walk():
            if isinstance(sub, Not) and isinstance(sub.part, PredicateAtom):
                if sub.part.name in self.derived_names:
                    self.flag(
                        "negated-derived",
                        f"{where} negates derived predicate {sub.part.name!r}",
                        line,
                    )

    def check_satisfiable(self, action: ActionSchema) -> None:
        reason = _trivially_unsatisfiable(action.precondition)
        if reason:
            self.violation(
                "unsatisfiable-precondition",
                f"action {action.name!r} can never apply: {reason}",
                action.line,
            )

    def check_actions(self) -> None:
        for action in self.spec.actions:
            where = f"action {action.name!r}"
            self.check_parameters(action.parameters, where, action.line)
            scope = {param.name: param.type for param in action.parameters}
            self.check_node(action.precondition, scope, where, action.line)
            self.check_effects(action, scope)
            self.check_negative_derived(action.precondition, where, action.line)
            self.check_satisfiable(action)

    def check_derived(self) -> None:
        for derived in self.spec.derived:
            where = f"derived predicate {derived.name!r}"
            self.check_parameters(derived.parameters, where, derived.line)
            scope = {param.name: param.type for param in derived.parameters}
            self.check_node(derived.formula, scope, where, derived.line)
            self.check_negative_derived(derived.formula, where, derived.line)
        cycle = _derived_cycle(self.spec)
        if cycle:
            self.violation(
                "derived-cycle", "derived predicates are defined in a cycle: " + " -> ".join(cycle)
            )


def _conjuncts(node: Node) -> Iterator[Node]:
    if isinstance(node, And):
        for part in node.parts:
            yield from _conjuncts(part)
    else:
        yield node


def _literal_value(node: Node) -> Optional[object]:
    if isinstance(node, (Number, BoolConst)):
        return node.value
    return None


def _trivially_unsatisfiable(precondition: Node) -> str:
    positive: Set[Node] = set()
    negative: Set[Node] = set()
    for part in _conjuncts(precondition):
        if isinstance(part, BoolConst) and not part.value:
            return "the precondition contains 'false'"
        if isinstance(part, Not) and isinstance(part.part, PredicateAtom):
            negative.add(part.part)
        elif isinstance(part, PredicateAtom):
            positive.add(part)
        elif isinstance(part, Compare):
            left, right = _literal_value(part.left), _literal_value(part.right)
            if left is not None and right is not None and not _compare(part.op, left, right):
                return f"{part.to_pddl()} is always false"
    clash = positive & negative
    if clash:
        atom = sorted(clash, key=lambda item: item.to_pddl())[0]
        return f"requires both {atom.to_pddl()} and its negation"
    return ""


def _compare(op: str, left: object, right: object) -> bool:
    if op == "=":
        return left == right
    try:
        if op == "<":
            return left < right  # type: ignore[operator]
        if op == ">":
            return left > right  # type: ignore[operator]
        if op == "<=":
            return left <= right  # type: ignore[operator]
        if op == ">=":
            return left >= right  # type: ignore[operator]
    except TypeError:
        return False
    raise ValueError(f"unknown comparison {op!r}")


def _derived_cycle(spec: DomainSpec) -> List[str]:
    graph: Dict[str, List[str]] = {}
    names = {decl.name for decl in spec.derived}
    for decl in spec.derived:
        graph[decl.name] = sorted(
            {sub.name for sub in decl.formula.walk() if isinstance(sub, PredicateAtom)} & names
        )

    visiting: List[str] = []
    done: Set[str] = set()

    def visit(name: str) -> List[str]:
        if name in visiting:
            return visiting[visiting.index(name) :] + [name]
        if name in done:
            return []
        visiting.append(name)
        for nxt in graph[name]:
            cycle = visit(nxt)
            if cycle:
                return cycle
        visiting.pop()
        done.add(name)
        return []

    for name in sorted(graph):
        cycle = visit(name)
        if cycle:
            return cycle
    return []


def validate_domain(spec: DomainSpec) -> ValidationReport:
    """Check ``spec`` for semantic problems; an empty report means valid."""
    checker = _Checker(spec)
    checker.check_hierarchy()
    checker.check_declarations()
    checker.check_derived()
    checker.check_actions()
    return ValidationReport(tuple(checker.violations), tuple(checker.flags))

