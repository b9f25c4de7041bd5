"""Clean-up applied to raw model responses before they are validated.

Models wrap answers in markdown fences, add chatter around them, and write
JSON the way people do: trailing commas, missing commas between adjacent
objects, line breaks inside strings. None of that is worth a rejection, so
it is repaired here; anything still broken is left for the validators.

"""
import re

from typing import List
from typing import Optional
from typing import Tuple


FENCE_PATTERN = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\n(.*?)```", re.DOTALL)


class MalformedResponseError(ValueError):
    """A response has no usable payload at all."""


def strip_fences(text: str) -> str:
    """The body of the first fenced block, or the whole text if there is none."""
    match = FENCE_PATTERN.search(text)
    if match:
        return match.group(1)
    return text


def _form_end(text: str, start: int) -> Optional[int]:
    depth = 0
    index = start
    while index < len(text):
        char = text[index]
        if char == ";":
            newline = text.find("\n", index)
            if newline < 0:
                return None
            index = newline
        elif char == "(":
            depth += 1
        elif char == ")":
            depth -= 1
            if depth == 0:
                return index + 1
        index += 1
    return None


def extract_define(text: str) -> str:
    """The ``(define ...)`` form in a response.

    An unbalanced form is returned from ``(define`` to the end of the text so
    the parser can report where it breaks.

    """
    text = strip_fences(text)
    match = re.search(r"\(\s*define\b", text, re.IGNORECASE)
    if not match:
        raise MalformedResponseError("no (define ...) form in the response")
    end = _form_end(text, match.start())
    if end is None:
        return text[match.start() :].strip() + "\n"
    return text[match.start() : end] + "\n"


def top_level_forms(text: str) -> List[str]:
    """Split ``text`` into its parenthesized top-level forms, ignoring whitespace between."""
    forms = []
    index = 0
    while index < len(text):
        char = text[index]
        if char.isspace():
            index += 1
            continue
        if char != "(":
            raise MalformedResponseError(f"unexpected {char!r} outside a form at offset {index}")
        end = _form_end(text, index)
        if end is None:
            raise MalformedResponseError(f"unbalanced form starting at offset {index}")
        forms.append(" ".join(text[index:end].split()))
        index = end
    return forms


# json

_BARE = re.compile(r"[A-Za-z0-9_.+\-]+")


def _tokens(text: str) -> List[Tuple[str, str]]:
    tokens = []
    index = 0
    while index < len(text):
        char = text[index]
        if char.isspace():
            index += 1
        elif char == '"':
            chars = ['"']
            index += 1
            while index < len(text) and text[index] != '"':
                if text[index] == "\\" and index + 1 < len(text):
                    chars.append(text[index : index + 2])
                    index += 2
                    continue
                chars.append({"\n": "\\n", "\r": "\\r", "\t": "\\t"}.get(text[index], text[index]))
                index += 1
            if index >= len(text):
                raise MalformedResponseError("unterminated string")
            chars.append('"')
            index += 1
            tokens.append(("value", "".join(chars)))
        elif char in "{[":
            tokens.append(("open", char))
            index += 1
        elif char in "}]":
            tokens.append(("close", char))
            index += 1
        elif char in ",:":
            tokens.append((char, char))
            index += 1
        else:
            match = _BARE.match(text, index)
            if not match:
                raise MalformedResponseError(f"unexpected {char!r} at offset {index}")
            tokens.append(("value", match.group(0)))
            index = match.end()
    return tokens


def repair_json(text: str) -> str:
    """Return ``text`` as JSON that :py:func:`json.loads` can read, where repairable."""
    text = strip_fences(text)
    start = text.find("{")
    end = text.rfind("}")
    if start < 0 or end < start:
        raise MalformedResponseError("no JSON object in the response")
    out: List[Tuple[str, str]] = []
    for kind, token in _tokens(text[start : end + 1]):
        last = out[-1][0] if out else None
        if kind == "close" and last == ",":
            out.pop()
        elif kind == "," and last in (",", "open", None):
            continue
        elif kind in ("value", "open") and last in ("value", "close"):
            out.append((",", ","))
        out.append((kind, token))
    return "".join(token for _, token in out)
