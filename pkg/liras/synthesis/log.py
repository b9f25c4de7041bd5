"""The record of every sample drawn while synthesizing an artifact."""
import enum
import json

from typing import Any
from typing import Dict
from typing import IO
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Tuple
from typing import Union

from liras.lib import LirasError


LOG_VERSION = 1


class RejectionReason(enum.Enum):
    SYNTAX = "syntax"
    VALIDATION = "validation"
    GROUNDING = "grounding"
    SCHEMA = "schema"
    TRANSPORT = "transport"


class AttemptRecord(NamedTuple):
    """One request and what became of its response.

    ``response`` is :py:data:`None` when the transport failed before
    producing one.

    """

    template_id: str
    index: int
    response: Optional[str]
    accepted: bool
    reason: Optional[RejectionReason] = None
    detail: str = ""

    def to_json(self) -> Dict[str, Any]:
        return {
            "template": self.template_id,
            "index": self.index,
            "response": self.response,
            "outcome": "accepted" if self.accepted else "rejected",
            "reason": self.reason.value if self.reason else None,
            "detail": self.detail,
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "AttemptRecord":
        try:
            outcome = doc["outcome"]
            if outcome not in ("accepted", "rejected"):
                raise ValueError(f"unknown outcome {outcome!r}")
            reason = doc.get("reason")
            return cls(
                template_id=str(doc["template"]),
                index=int(doc["index"]),
                response=doc.get("response"),
                accepted=outcome == "accepted",
                reason=RejectionReason(reason) if reason is not None else None,
                detail=str(doc.get("detail", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise LirasError(f"malformed attempt record: {exc}")


class SynthesisAttemptLog:
    """An append-only list of :py:class:`AttemptRecord`."""

    def __init__(self, records: Tuple[AttemptRecord, ...] = ()):
        self._records: List[AttemptRecord] = list(records)

    @property
    def records(self) -> Tuple[AttemptRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def append(self, record: AttemptRecord) -> None:
        self._records.append(record)

    def for_template(self, template_id: str) -> Tuple[AttemptRecord, ...]:
        return tuple(record for record in self._records if record.template_id == template_id)

    def reasons(self) -> List[RejectionReason]:
        return [record.reason for record in self._records if record.reason is not None]

    def to_json(self) -> Dict[str, Any]:
        return {"version": LOG_VERSION, "attempts": [r.to_json() for r in self._records]}

    def dump(self, f: IO[str]) -> None:
        json.dump(self.to_json(), f, indent=2, sort_keys=True)
        f.write("\n")

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "SynthesisAttemptLog":
        if not isinstance(doc, dict) or doc.get("version") != LOG_VERSION:
            raise LirasError("not a version 1 attempt log")
        attempts = doc.get("attempts")
        if not isinstance(attempts, list):
            raise LirasError("attempt log has no attempts list")
        return cls(tuple(AttemptRecord.from_json(item) for item in attempts))

    @classmethod
    def load(cls, source: Union[str, IO[str]]) -> "SynthesisAttemptLog":
        try:
            if isinstance(source, str):
                with open(source) as f:
                    doc = json.load(f)
            else:
                doc = json.load(source)
        except OSError as exc:
            raise LirasError(f"cannot read attempt log: {exc.strerror}")
        except json.JSONDecodeError as exc:
            raise LirasError(f"attempt log is not valid JSON: {exc}")
        return cls.from_json(doc)
