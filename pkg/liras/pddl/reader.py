"""Turn s-expressions into a :py:class:`~liras.pddl.domain.DomainSpec`.

Only the dialect the synthesis prompts produce is accepted: typed parameter
lists, integer and bit-matrix functions, derived predicates, ``get-index``,
numeric effects and conditional effects. Anything else is rejected with the
position of the offending form.

"""
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Set
from typing import Tuple

from liras.pddl.domain import ActionSchema
from liras.pddl.domain import BIT_MATRIX
from liras.pddl.domain import DerivedDecl
from liras.pddl.domain import DomainSpec
from liras.pddl.domain import FunctionDecl
from liras.pddl.domain import INTEGER
from liras.pddl.domain import PredicateDecl
from liras.pddl.domain import ROOT_TYPE
from liras.pddl.domain import TypedName
from liras.pddl.formula import AddFact
from liras.pddl.formula import And
from liras.pddl.formula import Arithmetic
from liras.pddl.formula import ARITHMETIC
from liras.pddl.formula import BoolConst
from liras.pddl.formula import Compare
from liras.pddl.formula import COMPARISONS
from liras.pddl.formula import DeleteFact
from liras.pddl.formula import EffectList
from liras.pddl.formula import FunctionTerm
from liras.pddl.formula import GetIndex
from liras.pddl.formula import Node
from liras.pddl.formula import Not
from liras.pddl.formula import Number
from liras.pddl.formula import NUMERIC_EFFECTS
from liras.pddl.formula import NumericEffect
from liras.pddl.formula import ObjectRef
from liras.pddl.formula import Or
from liras.pddl.formula import PredicateAtom
from liras.pddl.formula import Term
from liras.pddl.formula import Variable
from liras.pddl.formula import When
from liras.pddl.sexpr import Atom
from liras.pddl.sexpr import Node as SNode
from liras.pddl.sexpr import PddlSyntaxError
from liras.pddl.sexpr import read
from liras.pddl.sexpr import SExpr


SUPPORTED_REQUIREMENTS = (
    ":strips",
    ":typing",
    ":fluents",
    ":numeric-fluents",
    ":adl",
    ":derived-predicates",
    ":conditional-effects",
    ":negative-preconditions",
    ":equality",
    ":disjunctive-preconditions",
)

FUNCTION_RANGES = {"integer": INTEGER, "number": INTEGER, "bit-matrix": BIT_MATRIX}


class UnknownRequirementError(PddlSyntaxError):
    """A ``:requirements`` flag outside the supported dialect."""


class DuplicateDeclarationError(PddlSyntaxError):
    """The same type, constant, predicate, function or action is declared twice."""


def _fail(node: SNode, message: str) -> PddlSyntaxError:
    return PddlSyntaxError(message, node.line, node.column)


def _atom_text(node: SNode, what: str, context: SExpr) -> str:
    if not isinstance(node, Atom):
        where = node if isinstance(node, SExpr) else context
        raise _fail(where, f"expected {what}")
    return node.text


def _number(text: str) -> Optional[Node]:
    try:
        return Number(int(text))
    except ValueError:
        pass
    try:
        return Number(float(text))
    except ValueError:
        return None


def read_typed_list(items: Sequence[SNode], context: SExpr, variables: bool) -> List[TypedName]:
    """Read ``a b - t c`` style lists; untyped trailing names default to ``object``."""
    result: List[TypedName] = []
    pending: List[str] = []
    index = 0
    while index < len(items):
        item = items[index]
        text = _atom_text(item, "a name", context)
        if text == "-":
            if index + 1 >= len(items):
                raise _fail(item, "missing type after '-'")
            type_name = _atom_text(items[index + 1], "a type name", context).lower()
            if not pending:
                raise _fail(item, "'-' with no names before it")
            result.extend(TypedName(name, type_name) for name in pending)
            pending = []
            index += 2
            continue
        if variables:
            if not text.startswith("?"):
                raise _fail(item, f"expected a variable, got {text!r}")
            text = text[1:]
        pending.append(text.lower())
        index += 1
    result.extend(TypedName(name, ROOT_TYPE) for name in pending)
    return result


class _Reader:
    """Holds the declarations seen so far while a domain is being read."""

    def __init__(self) -> None:
        self.zero_arity_functions: Set[str] = set()

    # terms and expressions

    def term(self, node: SNode, context: SExpr) -> Term:
        text = _atom_text(node, "an object or variable", context)
        if text.startswith("?"):
            return Variable(text[1:].lower())
        return ObjectRef(text.lower())

    def expression(self, node: SNode, context: SExpr) -> Node:
        if isinstance(node, Atom):
            text = node.text.lower()
            number = _number(text)
            if number is not None:
                return number
            if text in ("true", "false"):
                return BoolConst(text == "true")
            if text.startswith("?"):
                return Variable(text[1:])
            if text in self.zero_arity_functions:
                return FunctionTerm(text, ())
            return ObjectRef(text)

        assert isinstance(node, SExpr)
        head = node.head()
        rest = node.items[1:]
        if not head:
            raise _fail(node, "expected an expression")
        if head in ARITHMETIC:
            if not rest:
                raise _fail(node, f"'{head}' needs at least one operand")
            return Arithmetic(head, tuple(self.expression(part, node) for part in rest))
        if head == "get-index":
            if len(rest) != 3:
                raise _fail(node, "get-index takes a matrix, a row and a column")
            matrix = rest[0]
            if isinstance(matrix, SExpr):
                if len(matrix.items) != 1:
                    raise _fail(matrix, "expected a bit-matrix name")
                matrix = matrix.items[0]
            name = _atom_text(matrix, "a bit-matrix name", node).lower()
            return GetIndex(name, self.expression(rest[1], node), self.expression(rest[2], node))
        if head in ("*", "/"):
            raise _fail(node, f"unsupported arithmetic operator '{head}'")
        return FunctionTerm(head, tuple(self.term(arg, node) for arg in rest))

    def function_term(self, node: SNode, context: SExpr) -> FunctionTerm:
        term = self.expression(node, context)
        if not isinstance(term, FunctionTerm):
            raise _fail(node, "expected a function term")
        return term

    # conditions

    def atom(self, node: SExpr) -> PredicateAtom:
        name = node.head()
        if not name:
            raise _fail(node, "expected a predicate name")
        return PredicateAtom(name, tuple(self.term(arg, node) for arg in node.items[1:]))

    def condition(self, node: SNode, context: SExpr) -> Node:
        if isinstance(node, Atom):
            text = node.text.lower()
            if text in ("true", "false"):
                return BoolConst(text == "true")
            raise _fail(node, f"expected a condition, got {node.text!r}")

        assert isinstance(node, SExpr)
        head = node.head()
        rest = node.items[1:]
        if head == "and":
            return And(tuple(self.condition(part, node) for part in rest))
        if head == "or":
            return Or(tuple(self.condition(part, node) for part in rest))
        if head == "not":
            if len(rest) != 1:
                raise _fail(node, "'not' takes exactly one condition")
            return Not(self.condition(rest[0], node))
        if head in COMPARISONS:
            if len(rest) != 2:
                raise _fail(node, f"'{head}' takes exactly two operands")
            return Compare(head, self.expression(rest[0], node), self.expression(rest[1], node))
        if head in ("imply", "exists", "forall"):
            raise _fail(node, f"unsupported construct '{head}'")
        return self.atom(node)

    # effects

    def effect(self, node: SNode, context: SExpr) -> Node:
        if not isinstance(node, SExpr):
            raise _fail(node, "expected an effect")
        head = node.head()
        rest = node.items[1:]
        if head == "and":
            return EffectList(tuple(self.effect(part, node) for part in rest))
        if head == "not":
            if len(rest) != 1 or not isinstance(rest[0], SExpr):
                raise _fail(node, "'not' in an effect takes one atom")
            return DeleteFact(self.atom(rest[0]))
        if head in NUMERIC_EFFECTS:
            if len(rest) != 2:
                raise _fail(node, f"'{head}' takes a function term and a value")
            return NumericEffect(
                head, self.function_term(rest[0], node), self.expression(rest[1], node)
            )
        if head == "when":
            if len(rest) != 2:
                raise _fail(node, "'when' takes a condition and an effect")
            return When(self.condition(rest[0], node), self.effect(rest[1], node))
        if head in ("forall", "probabilistic"):
            raise _fail(node, f"unsupported construct '{head}'")
        return AddFact(self.atom(node))


def _section_items(node: SExpr) -> Tuple[SNode, ...]:
    return node.items[1:]


def _read_functions(node: SExpr) -> List[FunctionDecl]:
    decls: List[FunctionDecl] = []
    pending: List[Tuple[SExpr, str, List[TypedName]]] = []
    items = _section_items(node)
    index = 0
    while index < len(items):
        item = items[index]
        if isinstance(item, SExpr):
            name = item.head()
            if not name:
                raise _fail(item, "expected a function name")
            params = read_typed_list(item.items[1:], item, variables=True)
            pending.append((item, name, params))
            index += 1
            continue
        if item.text != "-":
            raise _fail(item, f"unexpected {item.text!r} in :functions")
        if index + 1 >= len(items):
            raise _fail(item, "missing range after '-'")
        range_text = _atom_text(items[index + 1], "a function range", node).lower()
        if range_text not in FUNCTION_RANGES:
            raise _fail(items[index + 1], f"unsupported function range {range_text!r}")
        decls.extend(
            FunctionDecl(name, tuple(params), FUNCTION_RANGES[range_text], where.line)
            for where, name, params in pending
        )
        pending = []
        index += 2
    decls.extend(
        FunctionDecl(name, tuple(params), INTEGER, where.line) for where, name, params in pending
    )
    return decls


def _read_action(node: SExpr, reader: _Reader) -> ActionSchema:
    items = node.items[1:]
    if not items:
        raise _fail(node, "action without a name")
    name = _atom_text(items[0], "an action name", node).lower()
    fields: Dict[str, SNode] = {}
    index = 1
    while index < len(items):
        key = _atom_text(items[index], "an action keyword", node).lower()
        if key not in (":parameters", ":precondition", ":effect"):
            raise _fail(items[index], f"unsupported action keyword {key!r}")
        if key in fields:
            raise DuplicateDeclarationError(
                f"{key} given twice in action {name!r}",
                items[index].line,
                items[index].column,
            )
        if index + 1 >= len(items):
            raise _fail(items[index], f"missing value for {key}")
        fields[key] = items[index + 1]
        index += 2

    parameters: List[TypedName] = []
    if ":parameters" in fields:
        params = fields[":parameters"]
        if not isinstance(params, SExpr):
            raise _fail(node, ":parameters must be a list")
        parameters = read_typed_list(params.items, params, variables=True)
    precondition: Node = And()
    if ":precondition" in fields:
        precondition = reader.condition(fields[":precondition"], node)
    effect: Node = EffectList()
    if ":effect" in fields:
        effect = reader.effect(fields[":effect"], node)
    return ActionSchema(name, tuple(parameters), precondition, effect, node.line)


def _check_unique(names: List[Tuple[str, SExpr]], what: str) -> None:
    seen: Set[str] = set()
    for name, where in names:
        if name in seen:
            raise DuplicateDeclarationError(
                f"{what} {name!r} declared twice", where.line, where.column
            )
        seen.add(name)


def domain_from_sexpr(root: SExpr) -> DomainSpec:
    if root.head() != "define":
        raise _fail(root, "expected (define (domain ...) ...)")
    if len(root.items) < 2 or not isinstance(root.items[1], SExpr):
        raise _fail(root, "missing (domain <name>)")
    header = root.items[1]
    if header.head() != "domain" or len(header.items) != 2:
        raise _fail(header, "expected (domain <name>)")
    name = _atom_text(header.items[1], "a domain name", header).lower()

    sections: Dict[str, List[SExpr]] = {}
    for section in root.items[2:]:
        if not isinstance(section, SExpr) or not section.head().startswith(":"):
            raise _fail(section, "expected a domain section")
        key = section.head()
        if key not in (
            ":requirements",
            ":types",
            ":constants",
            ":predicates",
            ":functions",
            ":derived",
            ":action",
        ):
            raise _fail(section, f"unsupported section {key!r}")
        if key not in (":derived", ":action") and key in sections:
            raise DuplicateDeclarationError(
                f"section {key} given twice", section.line, section.column
            )
        sections.setdefault(key, []).append(section)

    reader = _Reader()

    requirements: List[str] = []
    for section in sections.get(":requirements", []):
        for item in section.items[1:]:
            flag = _atom_text(item, "a requirement flag", section).lower()
            if flag not in SUPPORTED_REQUIREMENTS:
                raise UnknownRequirementError(
                    f"unknown requirement {flag!r}",
                    item.line,
                    item.column,
                )
            requirements.append(flag)

    types: List[Tuple[str, str]] = []
    for section in sections.get(":types", []):
        declared = read_typed_list(section.items[1:], section, variables=False)
        _check_unique([(entry.name, section) for entry in declared], "type")
        types.extend((entry.name, entry.type) for entry in declared)

    constants: List[TypedName] = []
    for section in sections.get(":constants", []):
        constants.extend(read_typed_list(section.items[1:], section, variables=False))
    _check_unique([(entry.name, root) for entry in constants], "constant")

    predicates: List[PredicateDecl] = []
    for section in sections.get(":predicates", []):
        for item in section.items[1:]:
            if not isinstance(item, SExpr) or not item.head():
                raise _fail(item, "expected a predicate declaration")
            params = read_typed_list(item.items[1:], item, variables=True)
            predicates.append(PredicateDecl(item.head(), tuple(params), item.line))
            _check_unique([(decl.name, item) for decl in predicates], "predicate")

    functions: List[FunctionDecl] = []
    for section in sections.get(":functions", []):
        functions.extend(_read_functions(section))
    _check_unique([(decl.name, root) for decl in functions], "function")
    reader.zero_arity_functions = {decl.name for decl in functions if not decl.parameters}

    derived: List[DerivedDecl] = []
    declared_predicates = {decl.name: decl for decl in predicates}
    for section in sections.get(":derived", []):
        if len(section.items) != 3 or not isinstance(section.items[1], SExpr):
            raise _fail(section, "expected (:derived (<head>) <formula>)")
        head = section.items[1]
        pred_name = head.head()
        variables = read_typed_list(head.items[1:], head, variables=True)
        declared = declared_predicates.get(pred_name)
        if declared is not None and declared.arity == len(variables):
            variables = [
                TypedName(var.name, var.type if var.type != ROOT_TYPE else param.type)
                for var, param in zip(variables, declared.parameters)
            ]
        formula = reader.condition(section.items[2], section)
        derived.append(DerivedDecl(pred_name, tuple(variables), formula, section.line))
        _check_unique([(decl.name, section) for decl in derived], "derived predicate")

    actions: List[ActionSchema] = []
    for section in sections.get(":action", []):
        actions.append(_read_action(section, reader))
        _check_unique([(schema.name, section) for schema in actions], "action")

    return DomainSpec(
        name=name,
        requirements=tuple(requirements),
        types=tuple(types),
        constants=tuple(constants),
        predicates=tuple(predicates),
        functions=tuple(functions),
        derived=tuple(derived),
        actions=tuple(actions),
    )


def parse_domain(text: str) -> DomainSpec:
    """Parse PDDL domain source into a :py:class:`DomainSpec`.

    :raises: :py:exc:`~liras.pddl.sexpr.PddlSyntaxError` (or one of its
        subclasses) pointing at the offending line and column.

    """
    forms = read(text)
    if not forms:
        raise PddlSyntaxError("empty document", 1, 1)
    if len(forms) > 1:
        extra = forms[1]
        raise PddlSyntaxError("unexpected form after the domain", extra.line, extra.column)
    return domain_from_sexpr(forms[0])


def parse_condition(text: str, spec: DomainSpec) -> Node:
    """Parse a standalone condition such as a goal literal ``(has player gem1)``."""
    forms = read(text)
    if len(forms) != 1:
        raise PddlSyntaxError("expected exactly one condition", 1, 1)
    reader = _Reader()
    reader.zero_arity_functions = {decl.name for decl in spec.functions if not decl.parameters}
    return reader.condition(forms[0], forms[0])


def parse_expression(node: SNode, spec: DomainSpec, context: SExpr) -> Node:
    reader = _Reader()
    reader.zero_arity_functions = {decl.name for decl in spec.functions if not decl.parameters}
    return reader.expression(node, context)
