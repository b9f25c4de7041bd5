import unittest

from liras.data import read_text
from liras.pddl.domain import TypedName
from liras.pddl.formula import And
from liras.pddl.formula import BoolConst
from liras.pddl.formula import Compare
from liras.pddl.formula import FunctionTerm
from liras.pddl.formula import GetIndex
from liras.pddl.formula import Not
from liras.pddl.formula import Number
from liras.pddl.formula import ObjectRef
from liras.pddl.formula import PredicateAtom
from liras.pddl.formula import Variable
from liras.pddl.reader import DuplicateDeclarationError
from liras.pddl.reader import parse_condition
from liras.pddl.reader import parse_domain
from liras.pddl.reader import UnknownRequirementError
from liras.pddl.sexpr import PddlSyntaxError
from liras.pddl.sexpr import read

from ... import read_data


MINIMAL = """
(define (domain tiny)
  (:requirements :typing :fluents)
  (:types agent - object)
  (:constants hero - agent)
  (:predicates (ready ?a - agent))
  (:functions (xloc ?o - object) - integer)
  (:action step
   :parameters (?a - agent)
   :precondition (and (ready ?a) (< (xloc ?a) 3))
   :effect (and (increase (xloc ?a) 1)))
)
"""


class SExpressionTests(unittest.TestCase):
    def test_positions(self):
        forms = read("; leading comment\n(a (b c)\n   d)")
        self.assertEqual(len(forms), 1)
        self.assertEqual((forms[0].line, forms[0].column), (2, 1))
        self.assertEqual(forms[0].head(), "a")
        inner = forms[0].items[1]
        self.assertEqual((inner.line, inner.column), (2, 4))
        self.assertEqual(str(forms[0].items[2]), "d")

    def test_comments_are_ignored(self):
        forms = read("(a ; (not a form\n b)")
        self.assertEqual([str(item) for item in forms[0].items], ["a", "b"])

    def test_unexpected_close(self):
        with self.assertRaises(PddlSyntaxError) as cm:
            read("(define (domain d)))")
        self.assertEqual(cm.exception.line, 1)
        self.assertIn("1 unexpected ')'", cm.exception.message)

    def test_unclosed_open(self):
        with self.assertRaises(PddlSyntaxError) as cm:
            read("(define (domain d)\n  (:requirements :strips)\n")
        self.assertGreaterEqual(cm.exception.line, 1)


class ParseDomainTests(unittest.TestCase):
    def test_minimal(self):
        spec = parse_domain(MINIMAL)
        self.assertEqual(spec.name, "tiny")
        self.assertEqual(spec.requirements, (":typing", ":fluents"))
        self.assertEqual(spec.types, (("agent", "object"),))
        self.assertEqual(spec.constants, (TypedName("hero", "agent"),))
        self.assertEqual(spec.action_names, ["step"])

        step = spec.action("step")
        self.assertEqual(step.parameters, (TypedName("a", "agent"),))
        self.assertEqual(
            step.precondition,
            And(
                (
                    PredicateAtom("ready", (Variable("a"),)),
                    Compare("<", FunctionTerm("xloc", (Variable("a"),)), Number(3)),
                )
            ),
        )

    def test_example_domain(self):
        spec = parse_domain(read_text("example.pddl"))
        self.assertEqual(spec.name, "example")
        self.assertEqual(
            spec.types,
            (
                ("ball", "item"),
                ("plate", "item"),
                ("item", "object"),
                ("cabinet", "object"),
                ("agent", "object"),
                ("shape", "object"),
            ),
        )
        self.assertEqual(
            [constant.name for constant in spec.constants],
            ["boy", "circle", "square", "tennisball", "basketball", "baseball"],
        )
        self.assertEqual(len(spec.actions), 9)
        self.assertEqual(
            sorted(spec.action_names),
            [
                "down-black",
                "down-white",
                "left-black",
                "left-white",
                "pickup",
                "right-black",
                "right-white",
                "up-black",
                "up-white",
            ],
        )
        self.assertEqual(spec.matrix_names, ["whitespace", "blackspace"])
        self.assertEqual([decl.name for decl in spec.derived], ["at", "adjacent"])

    def test_derived_parameters_take_declared_types(self):
        spec = parse_domain(read_text("example.pddl"))
        self.assertEqual(
            spec.derived_predicate("at").parameters,
            (TypedName("a", "agent"), TypedName("o", "object")),
        )

    def test_get_index(self):
        spec = parse_domain(read_text("example.pddl"))
        condition = spec.action("up-black").precondition
        self.assertIn(
            Compare(
                "=",
                GetIndex(
                    "blackspace",
                    FunctionTerm("yloc", (Variable("a"),)),
                    FunctionTerm("xloc", (Variable("a"),)),
                ),
                BoolConst(True),
            ),
            condition.parts,
        )

    def test_untyped_names_default_to_object(self):
        spec = parse_domain(
            "(define (domain d) (:predicates (near ?x ?y)) (:action a :parameters (?x)))"
        )
        self.assertEqual(
            spec.predicate("near").parameters, (TypedName("x"), TypedName("y"))
        )
        self.assertEqual(spec.action("a").parameters, (TypedName("x", "object"),))

    def test_model_response_verbatim(self):
        # unbalanced preconditions, stray prose inside :functions and an
        # elided tail; this is what the first synthesis attempt looks like
        with self.assertRaises(PddlSyntaxError):
            parse_domain(read_data("responses", "domain_response.txt"))

    def test_empty_document(self):
        with self.assertRaises(PddlSyntaxError):
            parse_domain("; nothing here\n")

    def test_two_documents(self):
        with self.assertRaises(PddlSyntaxError) as cm:
            parse_domain("(define (domain a))\n(define (domain b))")
        self.assertEqual(cm.exception.line, 2)

    def test_not_a_domain(self):
        with self.assertRaises(PddlSyntaxError):
            parse_domain("(define (problem p))")

    def test_unsupported_section_position(self):
        text = "(define (domain d)\n  (:requirements :strips)\n  (:durative-action go))"
        with self.assertRaises(PddlSyntaxError) as cm:
            parse_domain(text)
        self.assertEqual((cm.exception.line, cm.exception.column), (3, 3))

    def test_unknown_requirement(self):
        with self.assertRaises(UnknownRequirementError) as cm:
            parse_domain("(define (domain d) (:requirements :strips :probabilistic-effects))")
        self.assertEqual(cm.exception.line, 1)
        self.assertIn(":probabilistic-effects", str(cm.exception))

    def test_duplicate_action(self):
        text = """
        (define (domain d)
          (:action go :parameters ())
          (:action go :parameters ()))
        """
        with self.assertRaises(DuplicateDeclarationError) as cm:
            parse_domain(text)
        self.assertEqual(cm.exception.line, 4)

    def test_duplicate_constant(self):
        with self.assertRaises(DuplicateDeclarationError):
            parse_domain("(define (domain d) (:constants a b - object a - object))")

    def test_duplicate_section(self):
        with self.assertRaises(DuplicateDeclarationError):
            parse_domain("(define (domain d) (:types a) (:types b))")

    def test_duplicate_action_keyword(self):
        with self.assertRaises(DuplicateDeclarationError):
            parse_domain("(define (domain d) (:action go :effect (and) :effect (and)))")

    def test_unsupported_constructs(self):
        for precondition in ("(forall (?x) (p ?x))", "(imply (p) (q))"):
            with self.subTest(precondition=precondition):
                with self.assertRaises(PddlSyntaxError) as cm:
                    parse_domain(
                        f"(define (domain d) (:action go :precondition {precondition}))"
                    )
                self.assertIn("unsupported construct", cm.exception.message)

    def test_multiplication_is_rejected(self):
        with self.assertRaises(PddlSyntaxError):
            parse_domain(
                "(define (domain d) (:functions (n) - integer)"
                " (:action go :effect (assign (n) (* (n) 2))))"
            )

    def test_unsupported_function_range(self):
        with self.assertRaises(PddlSyntaxError):
            parse_domain("(define (domain d) (:functions (name) - string))")


class ParseConditionTests(unittest.TestCase):
    def setUp(self):
        self.spec = parse_domain(read_text("example.pddl"))

    def test_goal_literal(self):
        self.assertEqual(
            parse_condition("(has boy baseball)", self.spec),
            PredicateAtom("has", (ObjectRef("boy"), ObjectRef("baseball"))),
        )

    def test_case_is_folded(self):
        self.assertEqual(
            parse_condition("(HAS Boy BaseBall)", self.spec),
            parse_condition("(has boy baseball)", self.spec),
        )

    def test_zero_arity_function(self):
        condition = parse_condition("(not (< (yloc boy) gridheight))", self.spec)
        self.assertEqual(
            condition,
            Not(
                Compare(
                    "<",
                    FunctionTerm("yloc", (ObjectRef("boy"),)),
                    FunctionTerm("gridheight", ()),
                )
            ),
        )

    def test_more_than_one_form(self):
        with self.assertRaises(PddlSyntaxError):
            parse_condition("(has boy baseball) (has boy basketball)", self.spec)
