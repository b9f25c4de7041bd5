import json
import unittest

from liras.data import read_text
from liras.pddl.reader import parse_domain
from liras.pddl.validation import validate_domain


TEMPLATE = """
(define (domain checks)
  (:requirements :typing :fluents :derived-predicates)
  (:types agent gem - object)
  (:constants hero - agent ruby - gem)
  (:predicates (has ?a - agent ?g - gem) (ready ?a - agent))
  (:functions (xloc ?o - object) (yloc ?o - object) - integer)
  {extra}
)
"""


def check(extra):
    return validate_domain(parse_domain(TEMPLATE.format(extra=extra)))


def codes(report):
    return [violation.code for violation in report.violations]


class ValidateDomainTests(unittest.TestCase):
    def test_example_domain_is_valid(self):
        report = validate_domain(parse_domain(read_text("example.pddl")))
        self.assertTrue(report.valid)
        self.assertEqual(report.flags, ())

    def test_template_is_valid(self):
        report = check("(:action grab :parameters (?a - agent ?g - gem) :effect (has ?a ?g))")
        self.assertTrue(report)

    def test_undeclared_type(self):
        report = check("(:action grab :parameters (?a - agent ?d - dragon))")
        self.assertEqual(codes(report), ["undeclared-type"])
        self.assertIn("dragon", report.violations[0].message)

    def test_duplicate_parameter(self):
        report = check("(:action grab :parameters (?a - agent ?a - agent))")
        self.assertIn("duplicate-parameter", codes(report))

    def test_type_cycle(self):
        report = validate_domain(parse_domain("(define (domain d) (:types a - b b - a))"))
        self.assertIn("type-cycle", codes(report))

    def test_unbound_variable(self):
        report = check("(:action grab :parameters (?a - agent) :effect (has ?a ?g))")
        self.assertEqual(codes(report), ["unbound-variable"])

    def test_unknown_object(self):
        report = check("(:action grab :parameters (?a - agent) :effect (has ?a emerald))")
        self.assertEqual(codes(report), ["unknown-object"])

    def test_constants_are_known_objects(self):
        report = check("(:action grab :parameters (?a - agent) :effect (has ?a ruby))")
        self.assertTrue(report.valid)

    def test_undeclared_function(self):
        report = check(
            "(:action walk :parameters (?a - agent)"
            " :precondition (> (fuel ?a) 0) :effect (increase (xloc ?a) 1))"
        )
        self.assertEqual(codes(report), ["undeclared-function"])

    def test_undeclared_predicate(self):
        report = check("(:action nap :parameters (?a - agent) :precondition (tired ?a))")
        self.assertEqual(codes(report), ["undeclared-predicate"])

    def test_arity(self):
        report = check("(:action nap :parameters (?a - agent) :precondition (ready ?a ?a))")
        self.assertEqual(codes(report), ["arity"])

    def test_effect_on_derived(self):
        report = check(
            "(:derived (rich ?a - agent) (has ?a ruby))"
            "(:action boast :parameters (?a - agent) :effect (rich ?a))"
        )
        self.assertIn("effect-on-derived", codes(report))

    def test_derived_cycle(self):
        report = check("(:derived (p ?x) (q ?x)) (:derived (q ?x) (p ?x))")
        self.assertEqual(codes(report), ["derived-cycle"])
        self.assertIn("p -> q -> p", report.violations[0].message)

    def test_unsatisfiable_precondition(self):
        for precondition in (
            "(and (ready ?a) (not (ready ?a)))",
            "(and false)",
            "(< 2 1)",
        ):
            with self.subTest(precondition=precondition):
                report = check(
                    f"(:action stall :parameters (?a - agent) :precondition {precondition})"
                )
                self.assertEqual(codes(report), ["unsatisfiable-precondition"])

    def test_negated_derived_is_only_flagged(self):
        report = check(
            "(:derived (rich ?a - agent) (has ?a ruby))"
            "(:action beg :parameters (?a - agent) :precondition (not (rich ?a)))"
        )
        self.assertTrue(report.valid)
        self.assertEqual([flag.code for flag in report.flags], ["negated-derived"])


class TerrainValidationTests(unittest.TestCase):
    def test_matrix_with_parameters(self):
        report = validate_domain(
            parse_domain(
                "(define (domain d) (:functions (gridheight) (gridwidth) - integer"
                " (xloc ?o) (yloc ?o) - integer (walls ?o) - bit-matrix))"
            )
        )
        self.assertEqual(codes(report), ["matrix-arity"])

    def test_matrix_needs_reserved_functions(self):
        report = validate_domain(
            parse_domain(
                "(define (domain d) (:functions (xloc ?o) - integer (walls) - bit-matrix))"
            )
        )
        self.assertEqual(codes(report), ["missing-reserved-function"] * 3)
        missing = " ".join(violation.message for violation in report.violations)
        for name in ("gridheight", "gridwidth", "yloc"):
            self.assertIn(name, missing)

    def test_matrix_assignment(self):
        report = validate_domain(
            parse_domain(
                "(define (domain d) (:functions (gridheight) (gridwidth) - integer"
                " (xloc ?o) (yloc ?o) - integer (walls) - bit-matrix)"
                " (:action flood :effect (assign (walls) 1)))"
            )
        )
        self.assertIn("matrix-assignment", codes(report))


class ReportTests(unittest.TestCase):
    def test_to_json(self):
        report = check("(:action nap :parameters (?a - agent) :precondition (tired ?a))")
        doc = json.loads(report.to_json())
        self.assertFalse(doc["valid"])
        self.assertEqual(doc["violations"][0]["code"], "undeclared-predicate")
        self.assertEqual(doc["flags"], [])
