"""Instruction prompts sent to the language model.

The templates live next to this module as plain text. Each marks the places
a request fills in with ``<<slot>>``; the set of slots is fixed per template
and checked when the template is loaded, so an edited asset that drops or
invents a slot fails loudly instead of sending a half-filled prompt.

"""
import json
import os
import re

from typing import Any
from typing import Dict
from typing import FrozenSet
from typing import Mapping
from typing import NamedTuple

from liras.lib import LirasError


SLOT_PATTERN = re.compile(r"<<([a-z_]+)>>")

TEMPLATE_SLOTS: Dict[str, FrozenSet[str]] = {
    "env": frozenset({"description", "objects"}),
    "agent": frozenset({"description", "actions", "objects"}),
    "cell": frozenset({"instruction", "objects", "predicates", "payload"}),
    "augment": frozenset({"description", "grid", "actions"}),
}


class TemplateError(LirasError):
    def __init__(self, template_id: str, message: str):
        super().__init__(f"prompt template {template_id!r}: {message}")
        self.template_id = template_id


class PromptTemplate(NamedTuple):
    id: str
    text: str

    @property
    def slots(self) -> FrozenSet[str]:
        return frozenset(SLOT_PATTERN.findall(self.text))

    def check(self) -> "PromptTemplate":
        if self.id not in TEMPLATE_SLOTS:
            raise TemplateError(self.id, "unknown template id")
        expected = TEMPLATE_SLOTS[self.id]
        if self.slots != expected:
            raise TemplateError(
                self.id,
                f"slots {sorted(self.slots)} do not match the contract {sorted(expected)}",
            )
        return self

    def render(self, **values: str) -> str:
        """Fill every slot; missing or unexpected values are an error."""
        given = frozenset(values)
        if given != self.slots:
            raise TemplateError(
                self.id, f"expected values for {sorted(self.slots)}, got {sorted(given)}"
            )
        return SLOT_PATTERN.sub(lambda match: values[match.group(1)], self.text)


def template_path(template_id: str) -> str:
    return os.path.join(os.path.dirname(__file__), "templates", f"{template_id}.txt")


_cache: Dict[str, PromptTemplate] = {}


def load_template(template_id: str) -> PromptTemplate:
    if template_id not in _cache:
        if template_id not in TEMPLATE_SLOTS:
            raise TemplateError(template_id, "unknown template id")
        try:
            with open(template_path(template_id)) as f:
                text = f.read()
        except OSError as exc:
            raise TemplateError(template_id, f"cannot read template: {exc.strerror}")
        _cache[template_id] = PromptTemplate(template_id, text).check()
    return _cache[template_id]


def format_objects(objects: Mapping[str, Any]) -> str:
    """Render an object dictionary the way the prompts show one."""
    return json.dumps({key: list(value) for key, value in objects.items()}, indent=4)
