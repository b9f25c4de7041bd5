import io
import unittest

from liras.lib import LirasError
from liras.synthesis.log import AttemptRecord
from liras.synthesis.log import LOG_VERSION
from liras.synthesis.log import RejectionReason
from liras.synthesis.log import SynthesisAttemptLog


REJECTED = AttemptRecord("env", 0, "(define", False, RejectionReason.SYNTAX, "unbalanced")
FAILED = AttemptRecord("env", 1, None, False, RejectionReason.TRANSPORT, "timed out")
ACCEPTED = AttemptRecord("agent", 0, "{}", True)


class AttemptRecordTests(unittest.TestCase):
    def test_to_json(self):
        self.assertEqual(
            REJECTED.to_json(),
            {
                "template": "env",
                "index": 0,
                "response": "(define",
                "outcome": "rejected",
                "reason": "syntax",
                "detail": "unbalanced",
            },
        )
        self.assertEqual(ACCEPTED.to_json()["reason"], None)
        self.assertEqual(ACCEPTED.to_json()["outcome"], "accepted")

    def test_from_json(self):
        for record in (REJECTED, FAILED, ACCEPTED):
            with self.subTest(record=record):
                self.assertEqual(AttemptRecord.from_json(record.to_json()), record)

    def test_malformed(self):
        cases = [
            {"index": 0, "outcome": "accepted"},
            {"template": "env", "index": "first", "outcome": "accepted"},
            {"template": "env", "index": 0, "outcome": "maybe"},
            {"template": "env", "index": 0, "outcome": "rejected", "reason": "boredom"},
        ]
        for doc in cases:
            with self.subTest(doc=doc):
                with self.assertRaises(LirasError):
                    AttemptRecord.from_json(doc)


class SynthesisAttemptLogTests(unittest.TestCase):
    def setUp(self):
        self.log = SynthesisAttemptLog()
        for record in (REJECTED, FAILED, ACCEPTED):
            self.log.append(record)

    def test_append_only_view(self):
        self.assertEqual(len(self.log), 3)
        self.assertEqual(self.log.records, (REJECTED, FAILED, ACCEPTED))
        self.assertEqual(self.log.for_template("env"), (REJECTED, FAILED))
        self.assertEqual(
            self.log.reasons(), [RejectionReason.SYNTAX, RejectionReason.TRANSPORT]
        )

    def test_dump_and_load(self):
        out = io.StringIO()
        self.log.dump(out)
        self.assertTrue(out.getvalue().endswith("\n"))
        out.seek(0)
        self.assertEqual(SynthesisAttemptLog.load(out).records, self.log.records)

    def test_bad_documents(self):
        for text in ("[]", '{"version": 2, "attempts": []}', '{"version": 1}', "{"):
            with self.subTest(text=text):
                with self.assertRaises(LirasError):
                    SynthesisAttemptLog.load(io.StringIO(text))
        self.assertEqual(self.log.to_json()["version"], LOG_VERSION)

    def test_missing_file(self):
        with self.assertRaises(LirasError):
            SynthesisAttemptLog.load("/nonexistent/attempts.json")
