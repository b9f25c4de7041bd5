"""Parsing, validation and grounding of the planning-domain dialect."""
from liras.pddl.domain import DomainSpec
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectEntry
from liras.pddl.domain import ObjectSet
from liras.pddl.grounding import ground
from liras.pddl.grounding import GroundAction
from liras.pddl.grounding import GroundedEnvironment
from liras.pddl.grounding import GroundingError
from liras.pddl.grounding import NOOP
from liras.pddl.printer import print_domain
from liras.pddl.reader import DuplicateDeclarationError
from liras.pddl.reader import parse_condition
from liras.pddl.reader import parse_domain
from liras.pddl.reader import UnknownRequirementError
from liras.pddl.sexpr import PddlSyntaxError
from liras.pddl.validation import validate_domain
from liras.pddl.validation import ValidationReport


__all__ = [
    "DomainSpec",
    "DuplicateDeclarationError",
    "GridDims",
    "ground",
    "GroundAction",
    "GroundedEnvironment",
    "GroundingError",
    "NOOP",
    "ObjectEntry",
    "ObjectSet",
    "parse_condition",
    "parse_domain",
    "PddlSyntaxError",
    "print_domain",
    "UnknownRequirementError",
    "validate_domain",
    "ValidationReport",
]
