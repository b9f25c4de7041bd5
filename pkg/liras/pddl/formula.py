"""Lifted expression trees for preconditions, derived predicates and effects.

Nodes are immutable and compare structurally, which is what makes
parse/print/parse round trips checkable. Every node can render itself back to
PDDL with :py:meth:`to_pddl` and enumerate its children with
:py:meth:`children`, which validation and grounding both walk.

"""
from dataclasses import dataclass
from typing import Iterator
from typing import Tuple
from typing import Union


COMPARISONS = ("=", "<", ">", "<=", ">=")
ARITHMETIC = ("+", "-")
NUMERIC_EFFECTS = ("assign", "increase", "decrease")


def _render_number(value: Union[int, float]) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


class Node:
    def children(self) -> Iterator["Node"]:
        return iter(())

    def walk(self) -> Iterator["Node"]:
        """Yield this node and every node below it, depth first."""
        yield self
        for child in self.children():
            yield from child.walk()

    def to_pddl(self) -> str:
        raise NotImplementedError


# terms and numeric expressions


@dataclass(frozen=True)
class Variable(Node):
    name: str

    def to_pddl(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True)
class ObjectRef(Node):
    name: str

    def to_pddl(self) -> str:
        return self.name


Term = Union[Variable, ObjectRef]


@dataclass(frozen=True)
class Number(Node):
    value: Union[int, float]

    def to_pddl(self) -> str:
        return _render_number(self.value)


@dataclass(frozen=True)
class BoolConst(Node):
    value: bool

    def to_pddl(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class FunctionTerm(Node):
    name: str
    args: Tuple[Term, ...] = ()

    def children(self) -> Iterator[Node]:
        return iter(self.args)

    def to_pddl(self) -> str:
        if not self.args:
            return f"({self.name})"
        return "({} {})".format(self.name, " ".join(arg.to_pddl() for arg in self.args))


@dataclass(frozen=True)
class Arithmetic(Node):
    op: str
    operands: Tuple[Node, ...]

    def children(self) -> Iterator[Node]:
        return iter(self.operands)

    def to_pddl(self) -> str:
        return "({} {})".format(self.op, " ".join(part.to_pddl() for part in self.operands))


@dataclass(frozen=True)
class GetIndex(Node):
    """Cell lookup in a bit-matrix; ``row`` is the y coordinate, 1-based."""

    matrix: str
    row: Node
    col: Node

    def children(self) -> Iterator[Node]:
        yield self.row
        yield self.col

    def to_pddl(self) -> str:
        return f"(get-index {self.matrix} {self.row.to_pddl()} {self.col.to_pddl()})"


# conditions


@dataclass(frozen=True)
class PredicateAtom(Node):
    name: str
    args: Tuple[Term, ...] = ()

    def children(self) -> Iterator[Node]:
        return iter(self.args)

    def to_pddl(self) -> str:
        if not self.args:
            return f"({self.name})"
        return "({} {})".format(self.name, " ".join(arg.to_pddl() for arg in self.args))


@dataclass(frozen=True)
class And(Node):
    parts: Tuple[Node, ...] = ()

    def children(self) -> Iterator[Node]:
        return iter(self.parts)

    def to_pddl(self) -> str:
        if not self.parts:
            return "(and)"
        return "(and {})".format(" ".join(part.to_pddl() for part in self.parts))


@dataclass(frozen=True)
class Or(Node):
    parts: Tuple[Node, ...] = ()

    def children(self) -> Iterator[Node]:
        return iter(self.parts)

    def to_pddl(self) -> str:
        return "(or {})".format(" ".join(part.to_pddl() for part in self.parts))


@dataclass(frozen=True)
class Not(Node):
    part: Node

    def children(self) -> Iterator[Node]:
        yield self.part

    def to_pddl(self) -> str:
        return f"(not {self.part.to_pddl()})"


@dataclass(frozen=True)
class Compare(Node):
    op: str
    left: Node
    right: Node

    def children(self) -> Iterator[Node]:
        yield self.left
        yield self.right

    def to_pddl(self) -> str:
        return f"({self.op} {self.left.to_pddl()} {self.right.to_pddl()})"


# effects


@dataclass(frozen=True)
class EffectList(Node):
    parts: Tuple[Node, ...] = ()

    def children(self) -> Iterator[Node]:
        return iter(self.parts)

    def to_pddl(self) -> str:
        if not self.parts:
            return "(and)"
        return "(and {})".format(" ".join(part.to_pddl() for part in self.parts))


@dataclass(frozen=True)
class AddFact(Node):
    atom: PredicateAtom

    def children(self) -> Iterator[Node]:
        yield self.atom

    def to_pddl(self) -> str:
        return self.atom.to_pddl()


@dataclass(frozen=True)
class DeleteFact(Node):
    atom: PredicateAtom

    def children(self) -> Iterator[Node]:
        yield self.atom

    def to_pddl(self) -> str:
        return f"(not {self.atom.to_pddl()})"


@dataclass(frozen=True)
class NumericEffect(Node):
    op: str
    target: FunctionTerm
    value: Node

    def children(self) -> Iterator[Node]:
        yield self.target
        yield self.value

    def to_pddl(self) -> str:
        return f"({self.op} {self.target.to_pddl()} {self.value.to_pddl()})"


@dataclass(frozen=True)
class When(Node):
    condition: Node
    effect: Node

    def children(self) -> Iterator[Node]:
        yield self.condition
        yield self.effect

    def to_pddl(self) -> str:
        return f"(when {self.condition.to_pddl()} {self.effect.to_pddl()})"


def free_variables(node: Node) -> Iterator[str]:
    """Yield the name of every variable mentioned anywhere under ``node``."""
    for sub in node.walk():
        if isinstance(sub, Variable):
            yield sub.name
