"""S-expression reader for PDDL text.

The grammar only knows about parentheses, atoms and ``;`` comments; all PDDL
structure is interpreted one layer up, in :py:mod:`liras.pddl.reader`. Every
node remembers the line and column it started at so that later errors can
point back into the source.

"""
from typing import List
from typing import NamedTuple
from typing import Tuple
from typing import Union

import pyparsing

from pyparsing import col
from pyparsing import Forward
from pyparsing import Group
from pyparsing import lineno
from pyparsing import ParseBaseException
from pyparsing import Regex
from pyparsing import rest_of_line
from pyparsing import StringEnd
from pyparsing import Suppress
from pyparsing import ZeroOrMore

from liras.lib import LirasError


class PddlSyntaxError(LirasError):
    """The text is not a well-formed PDDL document."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class Atom(NamedTuple):
    text: str
    line: int
    column: int

    def __str__(self) -> str:
        return self.text


class SExpr(NamedTuple):
    items: Tuple["Node", ...]
    line: int
    column: int

    def head(self) -> str:
        """Return the lower-cased leading atom, or an empty string."""
        if self.items and isinstance(self.items[0], Atom):
            return self.items[0].text.lower()
        return ""


Node = Union[Atom, SExpr]


def _make_atom(source: str, loc: int, tokens: pyparsing.ParseResults) -> Atom:
    return Atom(tokens[0], lineno(loc, source), col(loc, source))


def _make_sexpr(source: str, loc: int, tokens: pyparsing.ParseResults) -> SExpr:
    return SExpr(tuple(tokens[0]), lineno(loc, source), col(loc, source))


def _build_grammar() -> pyparsing.ParserElement:
    comment = ";" + rest_of_line
    atom = Regex(r"[^\s();]+").set_parse_action(_make_atom)
    sexpr = Forward()
    sexpr <<= Group(Suppress("(") - (ZeroOrMore(atom | sexpr) + Suppress(")"))).set_parse_action(
        _make_sexpr
    )
    document = ZeroOrMore(sexpr) + StringEnd()
    document.ignore(comment)
    sexpr.ignore(comment)
    return document


_GRAMMAR = _build_grammar()


def read(text: str) -> List[SExpr]:
    """Parse ``text`` into its top-level s-expressions.

    :raises: :py:exc:`PddlSyntaxError` with the position of the first problem.

    """
    try:
        results = _GRAMMAR.parse_string(text, parse_all=True)
    except ParseBaseException as exc:
        return _raise_syntax_error(text, exc)
    return [node for node in results if isinstance(node, SExpr)]


def _raise_syntax_error(text: str, exc: ParseBaseException) -> List[SExpr]:
    message = exc.msg
    if "end of text" in message.lower() or message.startswith("Expected ')'"):
        message = _describe_imbalance(text) or message
    raise PddlSyntaxError(message, exc.lineno, exc.col)


def _describe_imbalance(text: str) -> str:
    depth = 0
    for line in text.splitlines():
        code = line.split(";", 1)[0]
        depth += code.count("(") - code.count(")")
    if depth > 0:
        return f"unbalanced parentheses: {depth} unclosed '('"
    if depth < 0:
        return f"unbalanced parentheses: {-depth} unexpected ')'"
    return ""
