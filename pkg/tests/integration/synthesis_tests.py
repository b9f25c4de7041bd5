import json
import os
import shutil
import tempfile
import unittest

from unittest import mock

from liras import cli
from liras.agent import parse_agent_config
from liras.data import read_text
from liras.pddl import parse_domain
from liras.pddl import print_domain
from liras.synthesis.log import RejectionReason
from liras.synthesis.log import SynthesisAttemptLog
from liras.synthesis.transports import MockTransport
from liras.synthesis.transports import TransportError

from .. import read_data


REQUEST = {
    "description": "A boy walks on white and black space looking for balls hidden in cabinets.",
    "objects": {
        "generic_objects": ["plate", "cabinet"],
        "unique_objects": ["tennisball", "basketball", "baseball"],
        "background_cells": ["whitespace", "blackspace"],
        "agent": ["boy"],
    },
}

# time-continuous motion is outside the dialect
DRIFTING = """(define (domain drift)
  (:requirements :typing :fluents)
  (:types agent)
  (:constants boy - agent)
  (:functions (xloc ?a - agent) (speed ?a - agent) - integer)
  (:process glide
    :parameters (?a - agent)
    :precondition (> (speed ?a) 0)
    :effect (increase (xloc ?a) (* 2 (speed ?a)))))
"""


@mock.patch("liras.cli.configure_logging")
class SynthesisReplayTests(unittest.TestCase):
    def setUp(self):
        self.tempdir = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tempdir)
        self.request = os.path.join(self.tempdir, "boy.json")
        with open(self.request, "w") as f:
            json.dump(REQUEST, f)

    def path(self, *parts):
        return os.path.join(self.tempdir, *parts)

    def read(self, *parts):
        with open(self.path(*parts)) as f:
            return f.read()

    def synthesize(self, transport, out, *extra):
        with mock.patch("liras.cli.make_transport", return_value=transport):
            return cli.main(["synth", self.request, self.path(out)] + list(extra))

    def test_recorded_session_replays_byte_for_byte(self, configure_logging):
        transport = MockTransport(
            [
                read_data("responses", "domain_response.txt"),
                TransportError("connection reset"),
                "```pddl\n" + read_text("example.pddl") + "```",
                read_data("responses", "config_response.txt"),
                read_text("example_config.json"),
            ]
        )
        self.assertEqual(self.synthesize(transport, "live"), 0)
        replay = ["--replay", self.path("live", cli.ATTEMPT_LOG)]
        self.assertEqual(cli.main(["synth", self.request, self.path("replayed")] + replay), 0)

        for name in sorted(os.listdir(self.path("live"))):
            if name == cli.ATTEMPT_LOG:
                continue
            with self.subTest(file=name):
                self.assertEqual(self.read("replayed", name), self.read("live", name))

        self.assertEqual(
            self.read("live", "domain.pddl"), print_domain(parse_domain(read_text("example.pddl")))
        )
        with open(self.path("live", "config.json")) as f:
            self.assertEqual(
                parse_agent_config(json.load(f)),
                parse_agent_config(read_text("example_config.json")),
            )

        live = SynthesisAttemptLog.load(self.path("live", cli.ATTEMPT_LOG))
        replayed = SynthesisAttemptLog.load(self.path("replayed", cli.ATTEMPT_LOG))
        self.assertEqual(
            [(r.template_id, r.response, r.reason) for r in replayed.records],
            [(r.template_id, r.response, r.reason) for r in live.records],
        )
        self.assertEqual(
            live.reasons(),
            [RejectionReason.SYNTAX, RejectionReason.TRANSPORT, RejectionReason.GROUNDING],
        )

    def test_unsupported_dynamics_exhaust_the_attempts(self, configure_logging):
        settings = self.path("liras.ini")
        with open(settings, "w") as f:
            f.write("[liras]\nsynthesis.attempts = 4\n")
        with mock.patch("liras.cli.make_transport", return_value=MockTransport(DRIFTING)):
            with self.assertLogs("liras.cli", "ERROR"):
                status = cli.main(
                    ["--config-file", settings, "synth", self.request, self.path("out")]
                )
        self.assertEqual(status, 1)
        log = SynthesisAttemptLog.load(self.path("out", cli.ATTEMPT_LOG))
        self.assertEqual(log.reasons(), [RejectionReason.SYNTAX] * 4)
        for record in log.records:
            self.assertIn(":process", record.detail)
        self.assertFalse(os.path.exists(self.path("out", "domain.pddl")))
