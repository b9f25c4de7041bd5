import json
import os
import shutil
import tempfile
import unittest

from liras import synthesis
from liras.data import read_text
from liras.domains.example import example_legend
from liras.lib import LirasError
from liras.pddl.domain import GridDims
from liras.pddl.reader import parse_domain
from liras.stimulus import LegendEntry
from liras.stimulus import StimulusError
from liras.synthesis.log import RejectionReason
from liras.synthesis.log import SynthesisAttemptLog
from liras.synthesis.transports import MockTransport
from liras.synthesis.transports import ReplayTransport
from liras.synthesis.transports import TransportError
from liras.synthesis.transports import UnsupportedCapabilityError

from ... import read_data


DESCRIPTION = "A boy walks on white and black space looking for balls hidden in cabinets."
OBJECTS = {
    "generic_objects": ["plate", "cabinet"],
    "unique_objects": ["tennisball", "basketball", "baseball"],
    "background_cells": ["whitespace", "blackspace"],
    "agent": ["boy"],
}
EXAMPLE_DOMAIN = read_text("example.pddl")
EXAMPLE_CONFIG = read_text("example_config.json")
VERBATIM_DOMAIN = read_data("responses", "domain_response.txt")
VERBATIM_CONFIG = read_data("responses", "config_response.txt")
VERBATIM_CELL = read_data("responses", "cell_response.txt")

FAST = synthesis.SynthesisSettings(attempts=3)


def fenced(text, lang=""):
    return f"Here is the result.\n```{lang}\n{text}```\nLet me know if it needs changes."


class SampleTests(unittest.TestCase):
    def test_records_every_attempt(self):
        log = SynthesisAttemptLog()
        transport = MockTransport(["no", TransportError("timeout"), "yes"])

        def accept(response):
            if response != "yes":
                raise synthesis.Rejection(RejectionReason.SCHEMA, f"got {response!r}")
            return response

        self.assertEqual(synthesis.sample("agent", "p", transport, accept, FAST, log), "yes")
        self.assertEqual(
            [(r.index, r.accepted, r.reason) for r in log.records],
            [
                (0, False, RejectionReason.SCHEMA),
                (1, False, RejectionReason.TRANSPORT),
                (2, True, None),
            ],
        )
        self.assertIsNone(log.records[1].response)
        self.assertEqual(transport.requests[0].temperature, FAST.temperature)

    def test_exhausted(self):
        transport = MockTransport("never")

        def accept(response):
            raise synthesis.Rejection(RejectionReason.VALIDATION, "nope")

        with self.assertRaises(synthesis.SynthesisError) as cm:
            synthesis.sample("env", "p", transport, accept, FAST, SynthesisAttemptLog())
        self.assertEqual(cm.exception.reasons, [RejectionReason.VALIDATION] * 3)
        self.assertIn("after 3 attempts", str(cm.exception))
        self.assertIn("#2 validation: nope", str(cm.exception))


class SynthesizeDomainTests(unittest.TestCase):
    def test_prompt_example_is_repaired_on_retry(self):
        log = SynthesisAttemptLog()
        transport = MockTransport([VERBATIM_DOMAIN, fenced(EXAMPLE_DOMAIN, "pddl")])
        spec = synthesis.synthesize_domain(DESCRIPTION, OBJECTS, transport, log=log)
        self.assertEqual(spec, parse_domain(EXAMPLE_DOMAIN))
        self.assertEqual(len(log), 2)
        self.assertEqual(log.reasons(), [RejectionReason.SYNTAX])

        prompt = transport.requests[0].prompt
        self.assertIn(DESCRIPTION, prompt)
        self.assertIn('"whitespace"', prompt)
        self.assertEqual(transport.requests[0].template_id, "env")

    def test_always_malformed(self):
        log = SynthesisAttemptLog()
        with self.assertRaises(synthesis.SynthesisError) as cm:
            synthesis.synthesize_domain(
                DESCRIPTION, OBJECTS, MockTransport("(define (domain"), log=log
            )
        self.assertEqual(len(cm.exception.records), synthesis.DEFAULT_ATTEMPTS)
        self.assertEqual(set(cm.exception.reasons), {RejectionReason.SYNTAX})
        self.assertEqual(len(log), synthesis.DEFAULT_ATTEMPTS)

    def test_augmented_description(self):
        transport = MockTransport(EXAMPLE_DOMAIN)
        actions = parse_domain(EXAMPLE_DOMAIN).action_names
        synthesis.synthesize_domain(
            DESCRIPTION, OBJECTS, transport, grid=GridDims(3, 4), actions=actions
        )
        prompt = transport.requests[0].prompt
        self.assertIn("a grid of 3 by 4 cells", prompt)
        self.assertIn("up-white", prompt)

    def test_rejection_reasons(self):
        cases = [
            ({}, "no define here", RejectionReason.SYNTAX),
            ({"actions": ["pickup", "jump"]}, EXAMPLE_DOMAIN, RejectionReason.VALIDATION),
            (
                {"objects": dict(OBJECTS, unique_objects=["frisbee"])},
                EXAMPLE_DOMAIN,
                RejectionReason.GROUNDING,
            ),
            (
                {"objects": dict(OBJECTS, background_cells=["lava"])},
                EXAMPLE_DOMAIN,
                RejectionReason.GROUNDING,
            ),
            (
                {"objects": dict(OBJECTS, generic_objects=["spoon"])},
                EXAMPLE_DOMAIN,
                RejectionReason.GROUNDING,
            ),
            (
                {},
                "(define (domain d) (:requirements :typing) (:types agent)"
                " (:constants a - agent) (:predicates (here ?a - agent))"
                " (:action go :parameters (?a - agent) :precondition (missing ?a)"
                " :effect (here ?a)))",
                RejectionReason.VALIDATION,
            ),
        ]
        for overrides, response, reason in cases:
            with self.subTest(reason=reason, overrides=overrides):
                log = SynthesisAttemptLog()
                with self.assertRaises(synthesis.SynthesisError):
                    synthesis.synthesize_domain(
                        DESCRIPTION,
                        overrides.get("objects", OBJECTS),
                        MockTransport(response),
                        actions=overrides.get("actions"),
                        settings=synthesis.SynthesisSettings(attempts=1),
                        log=log,
                    )
                self.assertEqual(log.reasons(), [reason])


class SynthesizeAgentConfigTests(unittest.TestCase):
    def setUp(self):
        self.domain = parse_domain(EXAMPLE_DOMAIN)

    def test_schema_only(self):
        cfg = synthesis.synthesize_agent_config(DESCRIPTION, MockTransport(VERBATIM_CONFIG))
        self.assertEqual(cfg.grid, GridDims(3, 4))
        self.assertEqual(cfg.belief_config.belief_container, "box")
        self.assertEqual(cfg.query, ("belief", "goal", "cost"))
        self.assertEqual(cfg.beta, 1.0)

    def test_prompt_example_fails_grounding(self):
        log = SynthesisAttemptLog()
        transport = MockTransport([VERBATIM_CONFIG, fenced(EXAMPLE_CONFIG, "json")])
        cfg = synthesis.synthesize_agent_config(
            DESCRIPTION, transport, self.domain, OBJECTS, log=log
        )
        self.assertEqual(cfg.belief_config.agent, "boy")
        self.assertEqual(log.reasons(), [RejectionReason.GROUNDING])
        self.assertIn("human", log.records[0].detail)
        self.assertIn("up-white", transport.requests[0].prompt)

    def test_rejection_reasons(self):
        config = json.loads(EXAMPLE_CONFIG)
        unpriced = dict(config, costs=[{"pickup": 1}])
        cases = [
            ("not json at all", RejectionReason.SYNTAX),
            (json.dumps(dict(config, temperature=-1)), RejectionReason.SCHEMA),
            (json.dumps(unpriced), RejectionReason.VALIDATION),
            (json.dumps(dict(config, goals=[["(has boy frisbee)"]])), RejectionReason.GROUNDING),
            (json.dumps(dict(config, goals=[["(has boy"]])), RejectionReason.SCHEMA),
            (
                json.dumps(
                    dict(config, belief_config=dict(config["belief_config"], barrier="fog"))
                ),
                RejectionReason.GROUNDING,
            ),
            (
                json.dumps(
                    dict(config, belief_config=dict(config["belief_config"], belief_object="cup"))
                ),
                RejectionReason.GROUNDING,
            ),
        ]
        for response, reason in cases:
            with self.subTest(reason=reason, response=response[:40]):
                log = SynthesisAttemptLog()
                with self.assertRaises(synthesis.SynthesisError):
                    synthesis.synthesize_agent_config(
                        DESCRIPTION,
                        MockTransport(response),
                        self.domain,
                        OBJECTS,
                        synthesis.SynthesisSettings(attempts=1),
                        log,
                    )
                self.assertEqual(log.reasons(), [reason])


class ClassifyCellTests(unittest.TestCase):
    PREDICATES = "(has ?a - agent ?i - item)"

    def classify(self, transport, payload="cell at row 1, column 1 showing P_c"):
        return synthesis.classify_cell(
            payload, transport, "Name every object.", OBJECTS, self.PREDICATES, FAST
        )

    def test_prompt_example(self):
        transport = MockTransport(VERBATIM_CELL, supports_vision=True)
        parse = self.classify(transport)
        self.assertEqual(parse.object_names, ("pin", "baseball"))
        self.assertEqual(parse.literals[2], "(isshape pin circle)")
        self.assertEqual(
            parse.resolve(2, 3)[:2], ("(= (yloc pin) 2)", "(= (xloc pin) 3)")
        )
        self.assertIn("showing P_c", transport.requests[0].prompt)

    def test_image_payload(self):
        transport = MockTransport(VERBATIM_CELL, supports_vision=True)
        self.classify(transport, payload=b"\x89PNG")
        self.assertEqual(transport.requests[0].image, b"\x89PNG")
        self.assertIn(synthesis.IMAGE_PAYLOAD, transport.requests[0].prompt)

    def test_empty_cell(self):
        transport = MockTransport(
            '{"object_name": [], "object_pddl_str": ""}', supports_vision=True
        )
        self.assertEqual(self.classify(transport), synthesis.CellParse((), ()))

    def test_schema_retry(self):
        log = SynthesisAttemptLog()
        transport = MockTransport(
            [
                '{"object_name": ["pin"]}',
                '{"object_name": "pin", "object_pddl_str": "(isnew pin)"}',
            ],
            supports_vision=True,
        )
        parse = synthesis.classify_cell(
            "cell", transport, "Name every object.", OBJECTS, self.PREDICATES, FAST, log
        )
        self.assertEqual(parse.object_names, ("pin",))
        self.assertEqual(log.reasons(), [RejectionReason.SCHEMA])

    def test_needs_vision(self):
        with self.assertRaises(UnsupportedCapabilityError):
            self.classify(MockTransport(VERBATIM_CELL))


class TransportCellClassifierTests(unittest.TestCase):
    def setUp(self):
        self.transport = MockTransport(
            [
                json.dumps(
                    {
                        "object_name": ["baseball", "plate"],
                        "object_pddl_str": "(= (xloc baseball) $j) (isplateshape plate circle)",
                    }
                ),
                json.dumps({"object_name": ["pin"], "object_pddl_str": ""}),
            ],
            supports_vision=True,
        )
        self.classifier = synthesis.TransportCellClassifier(
            self.transport,
            parse_domain(EXAMPLE_DOMAIN),
            example_legend(),
            "Name every object.",
            OBJECTS,
            settings=FAST,
        )

    def test_classify(self):
        entries = self.classifier.classify(0, 1, ("w", "B", "P_c"))
        self.assertEqual(entries[0], example_legend().entry("w"))
        self.assertEqual(
            entries[1], LegendEntry("baseball", "object", type="ball", name="baseball")
        )
        self.assertEqual(
            entries[2],
            LegendEntry("plate", "object", type="plate", facts=("(isplateshape $ circle)",)),
        )
        self.assertIn("cell at row 1, column 2 showing w+B+P_c", self.transport.requests[0].prompt)

    def test_parses_are_cached_per_content(self):
        self.classifier.classify(0, 1, ("w", "B", "P_c"))
        self.classifier.classify(2, 3, ("w", "B", "P_c"))
        self.assertEqual(len(self.transport.requests), 1)

    def test_unknown_object(self):
        self.classifier.classify(0, 1, ("w", "B", "P_c"))
        with self.assertRaises(StimulusError) as cm:
            self.classifier.classify(1, 1, ("b",))
        self.assertEqual(cm.exception.cell, (1, 1))


class DefaultLegendTests(unittest.TestCase):
    def test_names_are_symbols(self):
        legend = synthesis.default_legend(OBJECTS, parse_domain(EXAMPLE_DOMAIN))
        self.assertEqual(legend.entry("whitespace").terrain, ("whitespace",))
        self.assertEqual(legend.entry("plate").type, "plate")
        self.assertEqual(legend.entry("baseball").type, "ball")
        self.assertEqual(legend.entry("boy").name, "boy")


class RequestTests(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def write(self, name, text):
        path = os.path.join(self.tmpdir, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_load(self):
        doc = {
            "description": DESCRIPTION,
            "objects": OBJECTS,
            "grid_size": [3, 4],
            "actions": ["pickup"],
        }
        request = synthesis.load_request(self.write("boy.json", json.dumps(doc)))
        self.assertEqual(request.name, "boy")
        self.assertEqual(request.grid, GridDims(3, 4))
        self.assertEqual(request.actions, ("pickup",))
        self.assertEqual(request.objects["agent"], ("boy",))

    def test_invalid(self):
        cases = [
            {"objects": OBJECTS},
            {"description": " ", "objects": OBJECTS},
            {"description": "d", "objects": {"agent": "boy"}},
            {"description": "d", "objects": OBJECTS, "grid_size": [3]},
            {"description": "d", "objects": OBJECTS, "grid_size": [0, 4]},
            {"description": "d", "objects": OBJECTS, "actions": "pickup"},
        ]
        for doc in cases:
            with self.subTest(doc=doc):
                with self.assertRaises(LirasError):
                    synthesis.parse_request(doc)

    def test_unreadable(self):
        with self.assertRaises(LirasError):
            synthesis.load_request(os.path.join(self.tmpdir, "missing.json"))
        with self.assertRaises(LirasError):
            synthesis.load_request(self.write("list.json", "[]"))
        with self.assertRaises(LirasError):
            synthesis.load_request(self.write("broken.json", "{"))


class SynthesizeBundleTests(unittest.TestCase):
    def setUp(self):
        self.request = synthesis.SynthesisRequest("boy", DESCRIPTION, OBJECTS)

    def test_bundle(self):
        log = SynthesisAttemptLog()
        transport = MockTransport(
            [VERBATIM_DOMAIN, EXAMPLE_DOMAIN, VERBATIM_CONFIG, EXAMPLE_CONFIG]
        )
        bundle = synthesis.synthesize_bundle(self.request, transport, log=log)
        self.assertEqual(bundle.name, "boy")
        self.assertEqual(bundle.config.grid, GridDims(3, 4))
        self.assertEqual([entry.name for entry in bundle.objects], ["plate1", "cabinet1"])
        self.assertEqual([r.template_id for r in log.records], ["env", "env", "agent", "agent"])

    def test_replay_reproduces_the_bundle(self):
        log = SynthesisAttemptLog()
        transport = MockTransport(
            [VERBATIM_DOMAIN, TransportError("reset"), EXAMPLE_DOMAIN, EXAMPLE_CONFIG]
        )
        recorded = synthesis.synthesize_bundle(self.request, transport, log=log)

        replay_log = SynthesisAttemptLog()
        replayed = synthesis.synthesize_bundle(
            self.request, ReplayTransport(log), log=replay_log
        )
        self.assertEqual(replayed, recorded)
        self.assertEqual(
            [(r.template_id, r.response, r.reason) for r in replay_log.records],
            [(r.template_id, r.response, r.reason) for r in log.records],
        )
