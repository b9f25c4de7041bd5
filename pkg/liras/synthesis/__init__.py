"""Synthesizing domains, agent configurations and cell parses with a language model.

Each artifact is drawn by rejection sampling: request a completion, normalize
it, run it through the same validators the rest of the package relies on,
and keep asking until a sample passes or the :py:class:`SynthesisSettings`
attempt policy runs out. Every sample, accepted or not, is appended to a
:py:class:`~liras.synthesis.log.SynthesisAttemptLog`; replaying that log
through :py:class:`~liras.synthesis.transports.ReplayTransport` reproduces
the same artifacts.

A domain sample is accepted when it parses, validates, defines every
object the object dictionary promises, and grounds on one placeholder
instance of each generic object type. A configuration sample is accepted
when it passes the schema and, if a domain is known, prices exactly the
domain's actions and names only objects, types and terrains the domain has.

"""
import json
import logging
import os
import re

from typing import Callable
from typing import Dict
from typing import List
from typing import Mapping
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import TypeVar
from typing import Union

from liras.agent import AgentConfig
from liras.agent import AgentConfigError
from liras.agent import check_config_against_domain
from liras.agent import parse_agent_config
from liras.domains import check_bundle
from liras.domains import DomainBundle
from liras.lib import LirasError
from liras.lib.attempts import AttemptPolicy
from liras.pddl.domain import DomainSpec
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectSet
from liras.pddl.grounding import ground
from liras.pddl.grounding import GroundedEnvironment
from liras.pddl.printer import print_predicates
from liras.pddl.reader import parse_condition
from liras.pddl.reader import parse_domain
from liras.pddl.sexpr import PddlSyntaxError
from liras.pddl.validation import validate_domain
from liras.stimulus import Cell
from liras.stimulus import CELL_SEPARATOR
from liras.stimulus import CellClassifier
from liras.stimulus import Legend
from liras.stimulus import LegendEntry
from liras.stimulus import PLACEHOLDER
from liras.stimulus import StimulusError
from liras.synthesis.log import AttemptRecord
from liras.synthesis.log import RejectionReason
from liras.synthesis.log import SynthesisAttemptLog
from liras.synthesis.normalize import extract_define
from liras.synthesis.normalize import MalformedResponseError
from liras.synthesis.normalize import repair_json
from liras.synthesis.normalize import top_level_forms
from liras.synthesis.prompts import format_objects
from liras.synthesis.prompts import load_template
from liras.synthesis.transports import Request
from liras.synthesis.transports import Transport
from liras.synthesis.transports import TransportError
from liras.synthesis.transports import UnsupportedCapabilityError


logger = logging.getLogger(__name__)


DEFAULT_ATTEMPTS = 8
DEFAULT_TEMPERATURE = 1.0
TEMPLATE_GRID = GridDims(5, 5)
IMAGE_PAYLOAD = "[the attached image]"
LOCATION_FUNCTIONS = ("xloc", "yloc")

ObjectDictionary = Mapping[str, Sequence[str]]
T = TypeVar("T")


class SynthesisSettings(NamedTuple):
    attempts: int = DEFAULT_ATTEMPTS
    budget: Optional[float] = None
    backoff: Optional[float] = None
    temperature: float = DEFAULT_TEMPERATURE

    def policy(self) -> AttemptPolicy:
        return AttemptPolicy.new(attempts=self.attempts, budget=self.budget, backoff=self.backoff)


class SynthesisError(LirasError):
    """No sample passed validation before the attempt policy ran out."""

    def __init__(self, template_id: str, records: Sequence[AttemptRecord]):
        reasons = "; ".join(
            f"#{record.index} {record.reason.value if record.reason else 'unknown'}: "
            f"{record.detail}"
            for record in records
        )
        super().__init__(
            f"no valid {template_id} sample after {len(records)} attempts ({reasons})"
        )
        self.template_id = template_id
        self.records = tuple(records)

    @property
    def reasons(self) -> List[RejectionReason]:
        return [record.reason for record in self.records if record.reason is not None]


class Rejection(Exception):
    """Raised by an acceptance check; never escapes the sampling loop."""

    def __init__(self, reason: RejectionReason, detail: str):
        super().__init__(detail)
        self.reason = reason
        self.detail = detail


def sample(
    template_id: str,
    prompt: str,
    transport: Transport,
    accept: Callable[[str], T],
    settings: SynthesisSettings,
    log: SynthesisAttemptLog,
    image: Optional[bytes] = None,
) -> T:
    """Request completions until ``accept`` returns instead of raising :py:exc:`Rejection`."""
    request = Request(template_id, prompt, settings.temperature, image)
    records: List[AttemptRecord] = []
    for attempt in settings.policy():
        try:
            response = transport.complete(request, timeout=attempt.time_remaining)
        except TransportError as exc:
            record = AttemptRecord(
                template_id, attempt.index, None, False, RejectionReason.TRANSPORT, str(exc)
            )
        else:
            try:
                artifact = accept(response)
            except Rejection as exc:
                record = AttemptRecord(
                    template_id, attempt.index, response, False, exc.reason, exc.detail
                )
            else:
                log.append(AttemptRecord(template_id, attempt.index, response, True))
                logger.info("Accepted %s sample on attempt %d.", template_id, attempt.index + 1)
                return artifact
        log.append(record)
        records.append(record)
        assert record.reason is not None
        logger.info(
            "Rejected %s sample %d (%s): %s",
            template_id,
            attempt.index + 1,
            record.reason.value,
            record.detail,
            extra={"stage": "synthesize"},
        )
    raise SynthesisError(template_id, records)


# domains


def augment_description(
    description: str, grid: Optional[GridDims], actions: Optional[Sequence[str]]
) -> str:
    """Append the grid size and the action inventory when both are known."""
    if grid is None or actions is None:
        return description
    return load_template("augment").render(
        description=description.strip(),
        grid=f"{grid.rows} by {grid.cols}",
        actions=", ".join(actions),
    )


def check_domain_sample(
    spec: DomainSpec,
    objects: ObjectDictionary,
    grid: GridDims = TEMPLATE_GRID,
    actions: Optional[Sequence[str]] = None,
) -> GroundedEnvironment:
    """Semantic checks on a parsed domain; raises :py:exc:`Rejection`."""
    report = validate_domain(spec)
    if not report.valid:
        raise Rejection(
            RejectionReason.VALIDATION, "; ".join(v.message for v in report.violations)
        )
    if actions is not None:
        invented = sorted(set(spec.action_names) - set(actions))
        missing = sorted(set(actions) - set(spec.action_names))
        if invented or missing:
            raise Rejection(
                RejectionReason.VALIDATION,
                f"actions do not match the inventory (invented {invented}, missing {missing})",
            )

    constants = {constant.name for constant in spec.constants}
    for key in ("unique_objects", "agent"):
        absent = sorted(set(objects.get(key, ())) - constants)
        if absent:
            raise Rejection(RejectionReason.GROUNDING, f"{key} {absent} are not constants")
    missing_cells = sorted(set(objects.get("background_cells", ())) - set(spec.matrix_names))
    if missing_cells:
        raise Rejection(
            RejectionReason.GROUNDING, f"background cells {missing_cells} are not bit-matrices"
        )
    try:
        return ground(spec, ObjectSet.from_dictionary(dict(objects)), grid)
    except (LirasError, ValueError) as exc:
        raise Rejection(RejectionReason.GROUNDING, str(exc))


def synthesize_domain(
    description: str,
    objects: ObjectDictionary,
    transport: Transport,
    grid: Optional[GridDims] = None,
    actions: Optional[Sequence[str]] = None,
    settings: SynthesisSettings = SynthesisSettings(),
    log: Optional[SynthesisAttemptLog] = None,
) -> DomainSpec:
    """Draw a planning domain for ``description`` over the object dictionary.

    :param objects: The object dictionary (``generic_objects``,
        ``unique_objects``, ``background_cells``, ``agent``).
    :param grid: Grid used for the trial grounding, and, with ``actions``,
        appended to the description.
    :param actions: The action inventory; a sample must define exactly these.
    :raises: :py:exc:`SynthesisError` once the attempt policy is exhausted.

    """
    log = log if log is not None else SynthesisAttemptLog()
    prompt = load_template("env").render(
        description=augment_description(description, grid, actions),
        objects=format_objects(objects),
    )

    def accept(response: str) -> DomainSpec:
        try:
            spec = parse_domain(extract_define(response))
        except MalformedResponseError as exc:
            raise Rejection(RejectionReason.SYNTAX, str(exc))
        except PddlSyntaxError as exc:
            raise Rejection(RejectionReason.SYNTAX, str(exc))
        check_domain_sample(spec, objects, grid or TEMPLATE_GRID, actions)
        return spec

    return sample("env", prompt, transport, accept, settings, log)


# agent configurations


def check_config_sample(
    cfg: AgentConfig, domain: DomainSpec, objects: Optional[ObjectDictionary] = None
) -> None:
    """Check a configuration against the domain it will run on; raises :py:exc:`Rejection`."""
    try:
        check_config_against_domain(cfg, domain)
    except AgentConfigError as exc:
        raise Rejection(RejectionReason.VALIDATION, str(exc))
    try:
        env = ground(domain, ObjectSet.from_dictionary(dict(objects or {})), cfg.grid)
    except (LirasError, ValueError) as exc:
        raise Rejection(RejectionReason.GROUNDING, str(exc))

    for goal in cfg.goals:
        for literal in goal.literals:
            try:
                env.compile_condition(parse_condition(literal, domain))
            except PddlSyntaxError as exc:
                raise Rejection(RejectionReason.SCHEMA, f"goal {literal!r}: {exc}")
            except LirasError as exc:
                raise Rejection(RejectionReason.GROUNDING, f"goal {literal!r}: {exc}")

    belief = cfg.belief_config
    if belief is None:
        return
    for field in ("belief_object", "belief_container"):
        if not domain.is_declared_type(getattr(belief, field)):
            raise Rejection(
                RejectionReason.GROUNDING, f"{field} {getattr(belief, field)!r} is not a type"
            )
    if belief.barrier not in domain.matrix_names:
        raise Rejection(RejectionReason.GROUNDING, f"barrier {belief.barrier!r} is not a terrain")
    if belief.agent not in env.agents:
        raise Rejection(RejectionReason.GROUNDING, f"agent {belief.agent!r} is not an agent")


def synthesize_agent_config(
    description: str,
    transport: Transport,
    domain: Optional[DomainSpec] = None,
    objects: Optional[ObjectDictionary] = None,
    settings: SynthesisSettings = SynthesisSettings(),
    log: Optional[SynthesisAttemptLog] = None,
) -> AgentConfig:
    """Draw the agent configuration for ``description``.

    Without a ``domain`` only the schema is checked.

    """
    log = log if log is not None else SynthesisAttemptLog()
    prompt = load_template("agent").render(
        description=description.strip(),
        actions=", ".join(domain.action_names) if domain is not None else "(see the description)",
        objects=format_objects(objects or {}),
    )

    def accept(response: str) -> AgentConfig:
        try:
            doc = json.loads(repair_json(response))
        except (MalformedResponseError, json.JSONDecodeError) as exc:
            raise Rejection(RejectionReason.SYNTAX, str(exc))
        try:
            cfg = parse_agent_config(doc)
        except AgentConfigError as exc:
            raise Rejection(RejectionReason.SCHEMA, str(exc))
        if domain is not None:
            check_config_sample(cfg, domain, objects)
        return cfg

    return sample("agent", prompt, transport, accept, settings, log)


# cells


class CellParse(NamedTuple):
    """Objects seen in one cell and the literals describing them.

    Literals may use ``$i`` (row) and ``$j`` (column) for the cell's
    position; :py:meth:`resolve` substitutes them.

    """

    object_names: Tuple[str, ...]
    literals: Tuple[str, ...]

    def resolve(self, row: int, col: int) -> Tuple[str, ...]:
        """Literals with the 1-based ``row`` and ``col`` in place of the placeholders."""
        return tuple(
            literal.replace("$i", str(row)).replace("$j", str(col)) for literal in self.literals
        )


def parse_cell_response(response: str) -> CellParse:
    try:
        doc = json.loads(repair_json(response))
    except (MalformedResponseError, json.JSONDecodeError) as exc:
        raise Rejection(RejectionReason.SYNTAX, str(exc))
    names = doc.get("object_name")
    pddl = doc.get("object_pddl_str")
    if isinstance(names, str):
        names = [names]
    if not isinstance(names, list) or not all(isinstance(n, str) and n for n in names):
        raise Rejection(RejectionReason.SCHEMA, "object_name must be a list of names")
    if not isinstance(pddl, str):
        raise Rejection(RejectionReason.SCHEMA, "object_pddl_str must be a string")
    try:
        literals = top_level_forms(pddl)
    except MalformedResponseError as exc:
        raise Rejection(RejectionReason.SCHEMA, f"object_pddl_str: {exc}")
    return CellParse(
        tuple(name.lower() for name in names), tuple(literal.lower() for literal in literals)
    )


def classify_cell(
    payload: Union[str, bytes],
    transport: Transport,
    instruction: str,
    objects: ObjectDictionary,
    predicates: str,
    settings: SynthesisSettings = SynthesisSettings(),
    log: Optional[SynthesisAttemptLog] = None,
) -> CellParse:
    """Ask the model what one cell shows.

    ``payload`` is the cell image, or a textual stand-in for one.

    :raises: :py:exc:`UnsupportedCapabilityError` when the transport cannot
        take image requests.

    """
    if not transport.supports_vision:
        raise UnsupportedCapabilityError("vision")
    log = log if log is not None else SynthesisAttemptLog()
    image = payload if isinstance(payload, bytes) else None
    prompt = load_template("cell").render(
        instruction=instruction.strip(),
        objects=format_objects(objects),
        predicates=predicates,
        payload=IMAGE_PAYLOAD if image is not None else str(payload),
    )
    return sample("cell", prompt, transport, parse_cell_response, settings, log, image=image)


def _mentions(literal: str, name: str) -> bool:
    return re.search(rf"(?<=[\s(]){re.escape(name)}(?=[\s)])", literal) is not None


def _templated(literal: str, name: str) -> str:
    return re.sub(rf"(?<=[\s(]){re.escape(name)}(?=[\s)])", PLACEHOLDER, literal)


CellRenderer = Callable[[int, int, Cell], Union[str, bytes]]


def describe_cell(row: int, col: int, cell: Cell) -> str:
    shown = CELL_SEPARATOR.join(cell) or "nothing"
    return f"cell at row {row + 1}, column {col + 1} showing {shown}"


class TransportCellClassifier(CellClassifier):
    """A cell classifier that asks a model what each cell holds.

    Terrain comes from the legend's terrain symbols in the cell; objects
    and their attribute facts come from the model. Parses are cached per
    distinct cell content, since the position only enters through the
    placeholders.

    """

    def __init__(
        self,
        transport: Transport,
        domain: DomainSpec,
        legend: Legend,
        instruction: str,
        objects: ObjectDictionary,
        render: CellRenderer = describe_cell,
        settings: SynthesisSettings = SynthesisSettings(),
        log: Optional[SynthesisAttemptLog] = None,
    ):
        self.transport = transport
        self.domain = domain
        self.legend = legend
        self.instruction = instruction
        self.objects = objects
        self.render = render
        self.settings = settings
        self.log = log if log is not None else SynthesisAttemptLog()
        self.cache: Dict[Cell, CellParse] = {}
        self.constants = {constant.name: constant.type for constant in domain.constants}

    def _parse(self, row: int, col: int, cell: Cell) -> CellParse:
        if cell not in self.cache:
            self.cache[cell] = classify_cell(
                self.render(row, col, cell),
                self.transport,
                self.instruction,
                self.objects,
                print_predicates(self.domain),
                self.settings,
                self.log,
            )
        return self.cache[cell]

    def classify(self, row: int, col: int, cell: Cell) -> List[LegendEntry]:
        entries = [
            self.legend.entry(symbol, 0, (row, col))
            for symbol in cell
            if self.legend.entry(symbol, 0, (row, col)).kind == "terrain"
        ]
        parse = self._parse(row, col, cell)
        literals = parse.resolve(row + 1, col + 1)
        for name in parse.object_names:
            if name in self.constants:
                type_, entry_name = self.constants[name], name
            elif self.domain.is_declared_type(name):
                type_, entry_name = name, None
            else:
                raise StimulusError(f"classifier reported unknown object {name!r}", 0, (row, col))
            facts = tuple(
                _templated(literal, name)
                for literal in literals
                if _mentions(literal, name) and not _is_location(literal)
            )
            entries.append(LegendEntry(name, "object", type=type_, name=entry_name, facts=facts))
        return entries


def _is_location(literal: str) -> bool:
    return any(literal.startswith(f"(= ({function} ") for function in LOCATION_FUNCTIONS)


def default_legend(objects: ObjectDictionary, domain: DomainSpec) -> Legend:
    """A legend whose symbols are the object and terrain names themselves."""
    constants = {constant.name: constant.type for constant in domain.constants}
    entries = [LegendEntry(".", "empty")]
    for terrain in objects.get("background_cells", ()):
        entries.append(LegendEntry(terrain, "terrain", terrain=(terrain,)))
    for type_ in objects.get("generic_objects", ()):
        entries.append(LegendEntry(type_, "object", type=type_))
    for name in objects.get("unique_objects", ()):
        type_ = constants.get(name, "object")
        entries.append(LegendEntry(name, "object", type=type_, name=name))
    for name in objects.get("agent", ()):
        type_ = constants.get(name, "agent")
        entries.append(LegendEntry(name, "object", type=type_, name=name))
    return Legend(entries)


# bundles


class SynthesisRequest(NamedTuple):
    """What the ``synth`` command reads: a description and its object dictionary."""

    name: str
    description: str
    objects: Dict[str, Tuple[str, ...]]
    grid: Optional[GridDims] = None
    actions: Optional[Tuple[str, ...]] = None


def parse_request(doc: Mapping[str, object], default_name: str = "synthesized") -> SynthesisRequest:
    description = doc.get("description")
    if not isinstance(description, str) or not description.strip():
        raise LirasError("synthesis request needs a non-empty description")
    raw_objects = doc.get("objects")
    if not isinstance(raw_objects, Mapping) or not all(
        isinstance(names, list) and all(isinstance(name, str) for name in names)
        for names in raw_objects.values()
    ):
        raise LirasError("synthesis request objects must map tags to lists of names")
    grid = None
    size = doc.get("grid_size")
    if size is not None:
        if not isinstance(size, list) or len(size) != 2:
            raise LirasError("grid_size must be [rows, cols]")
        try:
            grid = GridDims.of(int(size[0]), int(size[1]))
        except (TypeError, ValueError) as exc:
            raise LirasError(f"grid_size: {exc}")
    actions = doc.get("actions")
    if actions is not None and (
        not isinstance(actions, list) or not all(isinstance(a, str) for a in actions)
    ):
        raise LirasError("actions must be a list of action names")
    return SynthesisRequest(
        name=str(doc.get("name") or default_name),
        description=description,
        objects={str(tag): tuple(names) for tag, names in raw_objects.items()},
        grid=grid,
        actions=tuple(actions) if actions is not None else None,
    )


def load_request(path: str) -> SynthesisRequest:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as exc:
        raise LirasError(f"cannot read synthesis request {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise LirasError(f"synthesis request {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise LirasError(f"synthesis request {path} must be a JSON object")
    name = os.path.splitext(os.path.basename(path))[0]
    return parse_request(doc, name)


def synthesize_bundle(
    request: SynthesisRequest,
    transport: Transport,
    settings: SynthesisSettings = SynthesisSettings(),
    log: Optional[SynthesisAttemptLog] = None,
) -> DomainBundle:
    """Synthesize the domain, then the agent configuration for it, into a bundle."""
    log = log if log is not None else SynthesisAttemptLog()
    domain = synthesize_domain(
        request.description,
        request.objects,
        transport,
        request.grid,
        request.actions,
        settings,
        log,
    )
    cfg = synthesize_agent_config(
        request.description, transport, domain, request.objects, settings, log
    )
    return check_bundle(
        DomainBundle(
            request.name,
            domain,
            ObjectSet.from_dictionary(dict(request.objects)),
            cfg,
            default_legend(request.objects, domain),
            (),
            {"heuristic": "none"},
        )
    )
