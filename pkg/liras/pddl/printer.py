"""Canonical PDDL rendering of a :py:class:`~liras.pddl.domain.DomainSpec`."""
from typing import Iterable
from typing import List
from typing import Tuple

from liras.pddl.domain import DomainSpec
from liras.pddl.domain import TypedName


INDENT = "  "


def _typed(names: Iterable[TypedName], prefix: str = "") -> str:
    """Group consecutive names of the same type: ``?a ?b - agent``."""
    groups: List[Tuple[List[str], str]] = []
    for entry in names:
        if groups and groups[-1][1] == entry.type:
            groups[-1][0].append(prefix + entry.name)
        else:
            groups.append(([prefix + entry.name], entry.type))
    return " ".join("{} - {}".format(" ".join(members), type_) for members, type_ in groups)


def print_domain(spec: DomainSpec) -> str:
    lines = [f"(define (domain {spec.name})"]
    if spec.requirements:
        lines.append(INDENT + "(:requirements {})".format(" ".join(spec.requirements)))

    if spec.types:
        lines.append(INDENT + "(:types")
        for child, parent in spec.types:
            lines.append(INDENT * 2 + f"{child} - {parent}")
        lines.append(INDENT + ")")

    if spec.constants:
        lines.append(INDENT + "(:constants")
        for constant in spec.constants:
            lines.append(INDENT * 2 + constant.to_pddl())
        lines.append(INDENT + ")")

    if spec.predicates:
        lines.append(INDENT + "(:predicates")
        for predicate in spec.predicates:
            params = _typed(predicate.parameters, "?")
            head = " ".join(filter(None, [predicate.name, params]))
            lines.append(INDENT * 2 + f"({head})")
        lines.append(INDENT + ")")

    if spec.functions:
        lines.append(INDENT + "(:functions")
        for function in spec.functions:
            params = _typed(function.parameters, "?")
            head = " ".join(filter(None, [function.name, params]))
            lines.append(INDENT * 2 + f"({head}) - {function.range}")
        lines.append(INDENT + ")")

    for derived in spec.derived:
        params = _typed(derived.parameters, "?")
        head = " ".join(filter(None, [derived.name, params]))
        lines.append(INDENT + f"(:derived ({head}) {derived.formula.to_pddl()})")

    for action in spec.actions:
        lines.append(INDENT + f"(:action {action.name}")
        lines.append(INDENT * 2 + ":parameters ({})".format(_typed(action.parameters, "?")))
        lines.append(INDENT * 2 + f":precondition {action.precondition.to_pddl()}")
        lines.append(INDENT * 2 + f":effect {action.effect.to_pddl()}")
        lines.append(INDENT + ")")

    lines.append(")")
    return "\n".join(lines) + "\n"


def print_predicates(spec: DomainSpec) -> str:
    """Predicate signatures on one line, as the cell-classification prompt lists them."""
    heads = []
    for predicate in spec.predicates:
        params = _typed(predicate.parameters, "?")
        heads.append("({})".format(" ".join(filter(None, [predicate.name, params]))))
    return " ".join(heads)
