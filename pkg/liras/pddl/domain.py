"""Declarations making up a parsed planning domain.

Source positions are carried on every declaration for error reporting but are
excluded from equality, so a domain re-read from its own printed form compares
equal to the original.

"""
from dataclasses import dataclass
from dataclasses import field
from typing import Dict
from typing import Iterator
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Tuple

from liras.pddl.formula import And
from liras.pddl.formula import EffectList
from liras.pddl.formula import Node


ROOT_TYPE = "object"
RESERVED_FUNCTIONS = ("gridheight", "gridwidth", "xloc", "yloc")
INTEGER = "integer"
BIT_MATRIX = "bit-matrix"


@dataclass(frozen=True)
class TypedName:
    name: str
    type: str = ROOT_TYPE

    def to_pddl(self, prefix: str = "") -> str:
        return f"{prefix}{self.name} - {self.type}"


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    parameters: Tuple[TypedName, ...] = ()
    line: int = field(default=0, compare=False)

    @property
    def arity(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    parameters: Tuple[TypedName, ...] = ()
    range: str = INTEGER
    line: int = field(default=0, compare=False)

    @property
    def arity(self) -> int:
        return len(self.parameters)

    @property
    def is_matrix(self) -> bool:
        return self.range == BIT_MATRIX


@dataclass(frozen=True)
class DerivedDecl:
    name: str
    parameters: Tuple[TypedName, ...]
    formula: Node
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: Tuple[TypedName, ...] = ()
    precondition: Node = And()
    effect: Node = EffectList()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DomainSpec:
    """A parsed planning domain.

    ``types`` holds ``(child, parent)`` pairs in declaration order; the root
    type ``object`` is implicit.

    """

    name: str
    requirements: Tuple[str, ...] = ()
    types: Tuple[Tuple[str, str], ...] = ()
    constants: Tuple[TypedName, ...] = ()
    predicates: Tuple[PredicateDecl, ...] = ()
    functions: Tuple[FunctionDecl, ...] = ()
    derived: Tuple[DerivedDecl, ...] = ()
    actions: Tuple[ActionSchema, ...] = ()

    @property
    def type_parents(self) -> Dict[str, str]:
        return dict(self.types)

    def declared_types(self) -> List[str]:
        names = [ROOT_TYPE]
        for child, parent in self.types:
            for name in (parent, child):
                if name not in names:
                    names.append(name)
        return names

    def is_declared_type(self, name: str) -> bool:
        parents = self.type_parents
        return name == ROOT_TYPE or name in parents or name in parents.values()

    def ancestors(self, name: str) -> Iterator[str]:
        """Yield ``name`` and each supertype up to the root; stops on cycles."""
        parents = self.type_parents
        seen = set()
        while name not in seen:
            seen.add(name)
            yield name
            if name == ROOT_TYPE or name not in parents:
                return
            name = parents[name]

    def is_subtype(self, child: str, parent: str) -> bool:
        return parent == ROOT_TYPE or parent in self.ancestors(child)

    def predicate(self, name: str) -> Optional[PredicateDecl]:
        for decl in self.predicates:
            if decl.name == name:
                return decl
        return None

    def function(self, name: str) -> Optional[FunctionDecl]:
        for decl in self.functions:
            if decl.name == name:
                return decl
        return None

    def derived_predicate(self, name: str) -> Optional[DerivedDecl]:
        for decl in self.derived:
            if decl.name == name:
                return decl
        return None

    def action(self, name: str) -> Optional[ActionSchema]:
        for schema in self.actions:
            if schema.name == name:
                return schema
        return None

    @property
    def action_names(self) -> List[str]:
        return [schema.name for schema in self.actions]

    @property
    def matrix_names(self) -> List[str]:
        return [decl.name for decl in self.functions if decl.is_matrix]


class ObjectEntry(NamedTuple):
    name: str
    type: str
    tag: str = "generic_objects"


OBJECT_TAGS = ("generic_objects", "unique_objects", "background_cells", "agent")


class ObjectSet:
    """The concrete objects a domain is grounded over.

    Domain constants are added at grounding time, so an object set only needs
    to list what the domain itself does not declare.

    """

    def __init__(self, entries: Tuple[ObjectEntry, ...] = ()):
        seen: Dict[str, ObjectEntry] = {}
        for entry in entries:
            if entry.tag not in OBJECT_TAGS:
                raise ValueError(f"unknown object tag {entry.tag!r}")
            if entry.name in seen:
                raise ValueError(f"duplicate object name {entry.name!r}")
            seen[entry.name] = entry
        self.entries = tuple(entries)

    @classmethod
    def from_pairs(cls, pairs: List[Tuple[str, str]]) -> "ObjectSet":
        return cls(tuple(ObjectEntry(name, type_) for name, type_ in pairs))

    @classmethod
    def from_dictionary(cls, dictionary: Dict[str, List[str]]) -> "ObjectSet":
        """Build a template object set from a synthesis object dictionary.

        Generic object types get one placeholder instance each (``ball1``);
        unique objects and agents are expected to be domain constants and
        background cells are terrain matrices, so neither adds entries.

        """
        entries = [
            ObjectEntry(f"{type_}1", type_, "generic_objects")
            for type_ in dictionary.get("generic_objects", [])
        ]
        return cls(tuple(entries))

    def __iter__(self) -> Iterator[ObjectEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ObjectSet) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"ObjectSet({list(self.entries)!r})"

    def to_json(self) -> List[List[str]]:
        return [[entry.name, entry.type, entry.tag] for entry in self.entries]

    @classmethod
    def from_json(cls, data: List[List[str]]) -> "ObjectSet":
        return cls(tuple(ObjectEntry(*item) for item in data))


class GridDims(NamedTuple):
    rows: int
    cols: int

    @classmethod
    def of(cls, rows: int, cols: int) -> "GridDims":
        if rows < 1 or cols < 1:
            raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
        return cls(rows, cols)
