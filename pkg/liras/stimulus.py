"""Symbolic stimuli: frame sequences over a cell legend, and human judgments.

A stimulus is a sequence of grid frames. Each cell holds one or more legend
symbols (``"@+k_b"`` for an agent standing on a blue key). The first frame
is decoded cell by cell into the initial state and fixes the object set.
Every later frame is decoded by finding the successor of the previous state
that renders to exactly that frame, so fluents a frame cannot show (held
items, key counts, whose turn it is) follow from the dynamics.

"""
import csv
import json
import logging
import math
import re
import warnings

from typing import Any
from typing import Dict
from typing import IO
from typing import Iterable
from typing import List
from typing import Mapping
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

from liras.lib import LirasError
from liras.pddl.domain import DomainSpec
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectEntry
from liras.pddl.domain import ObjectSet
from liras.pddl.grounding import GroundAction
from liras.pddl.grounding import GroundedEnvironment
from liras.world import blank_state
from liras.world import fluent_diff
from liras.world import reconstruct_action
from liras.world import state_from_init
from liras.world import successors
from liras.world import update_state
from liras.world import WorldState


logger = logging.getLogger(__name__)


STIMULUS_VERSION = 1
CELL_SEPARATOR = "+"
PLACEHOLDER = "$"
ENTRY_KINDS = ("empty", "terrain", "object")
TURN_VALUES = (0, 1)


class StimulusError(LirasError):
    """A stimulus document or one of its frames cannot be decoded."""

    def __init__(
        self,
        message: str,
        frame: Optional[int] = None,
        cell: Optional[Tuple[int, int]] = None,
    ):
        where = []
        if frame is not None:
            where.append(f"frame {frame}")
        if cell is not None:
            where.append(f"cell (row {cell[0]}, col {cell[1]})")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.frame = frame
        self.cell = cell


class AlternationWarning(UserWarning):
    """Consecutive frames of a multi-agent stimulus did not alternate turns."""


# legend


class LegendEntry(NamedTuple):
    """What one cell symbol stands for.

    ``facts`` are literal templates over ``$`` (the object the entry
    describes); a ``(not ...)`` template is only checked when rendering, so
    two entries for the same type can tell a locked door from an open one.
    ``terrain`` names bit-matrices that are set on the cell.

    """

    symbol: str
    kind: str
    type: Optional[str] = None
    name: Optional[str] = None
    facts: Tuple[str, ...] = ()
    terrain: Tuple[str, ...] = ()

    def positive_facts(self, obj: str) -> List[str]:
        return [
            fact.replace(PLACEHOLDER, obj) for fact in self.facts if not fact.startswith("(not ")
        ]

    def negative_facts(self, obj: str) -> List[str]:
        return [
            fact[len("(not ") : -1].strip().replace(PLACEHOLDER, obj)
            for fact in self.facts
            if fact.startswith("(not ")
        ]

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"kind": self.kind}
        for key in ("type", "name"):
            if getattr(self, key) is not None:
                doc[key] = getattr(self, key)
        if self.facts:
            doc["facts"] = list(self.facts)
        if self.terrain:
            doc["terrain"] = list(self.terrain)
        return doc


def _normalize_literal(text: str) -> str:
    return " ".join(text.replace("(", " ( ").replace(")", " ) ").split()).replace(
        "( ", "("
    ).replace(" )", ")").lower()


class Legend:
    """An ordered symbol table; rendering emits symbols in legend order."""

    def __init__(self, entries: Iterable[LegendEntry]):
        self.entries: Tuple[LegendEntry, ...] = tuple(entries)
        self.by_symbol: Dict[str, LegendEntry] = {}
        for entry in self.entries:
            if entry.kind not in ENTRY_KINDS:
                raise StimulusError(
                    f"legend symbol {entry.symbol!r} has unknown kind {entry.kind!r}"
                )
            if entry.symbol in self.by_symbol:
                raise StimulusError(f"legend symbol {entry.symbol!r} is defined twice")
            if (
                CELL_SEPARATOR in entry.symbol
                or not entry.symbol
                or entry.symbol != entry.symbol.strip()
            ):
                raise StimulusError(f"legend symbol {entry.symbol!r} is not a single token")
            if entry.kind == "object" and not entry.type:
                raise StimulusError(f"legend symbol {entry.symbol!r} needs an object type")
            if entry.kind == "terrain" and len(entry.terrain) != 1:
                raise StimulusError(f"terrain symbol {entry.symbol!r} must name one bit-matrix")
            self.by_symbol[entry.symbol] = entry
        empties = [entry for entry in self.entries if entry.kind == "empty"]
        if len(empties) != 1:
            raise StimulusError("a legend needs exactly one empty-cell symbol")
        self.empty = empties[0].symbol
        self.order = {entry.symbol: index for index, entry in enumerate(self.entries)}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Legend) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"<Legend {[entry.symbol for entry in self.entries]}>"

    def entry(
        self, symbol: str, frame: Optional[int] = None, cell: Optional[Tuple[int, int]] = None
    ) -> LegendEntry:
        try:
            return self.by_symbol[symbol]
        except KeyError:
            raise StimulusError(f"unknown symbol {symbol!r}", frame, cell)

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "Legend":
        entries = []
        for symbol, raw in doc.items():
            if not isinstance(raw, Mapping):
                raise StimulusError(f"legend entry for {symbol!r} must be an object")
            kind = raw.get("kind")
            if kind is None:
                if raw.get("type"):
                    kind = "object"
                else:
                    kind = "terrain" if raw.get("terrain") else "empty"
            terrain = raw.get("terrain", ())
            entries.append(
                LegendEntry(
                    symbol=symbol,
                    kind=kind,
                    type=raw.get("type"),
                    name=raw.get("name"),
                    facts=tuple(_normalize_literal(fact) for fact in raw.get("facts", ())),
                    terrain=(terrain,) if isinstance(terrain, str) else tuple(terrain),
                )
            )
        return cls(entries)

    def to_json(self) -> Dict[str, Any]:
        return {entry.symbol: entry.to_json() for entry in self.entries}

    def terrain_symbols(self) -> List[LegendEntry]:
        return [entry for entry in self.entries if entry.kind == "terrain"]

    def symbol_for(self, env: GroundedEnvironment, state: WorldState, obj: str) -> str:
        """The most specific object entry describing ``obj`` in ``state``."""
        facts = {env.fact_name(slot) for slot in state.facts}
        best: Optional[LegendEntry] = None
        for entry in self.entries:
            if entry.kind != "object":
                continue
            if entry.name is not None:
                if entry.name != obj:
                    continue
            elif not env.is_a(obj, entry.type or ""):
                continue
            if not all(fact in facts for fact in entry.positive_facts(obj)):
                continue
            if any(fact in facts for fact in entry.negative_facts(obj)):
                continue
            if best is None or _specificity(entry) > _specificity(best):
                best = entry
        if best is None:
            raise StimulusError(f"no legend symbol describes {obj!r}")
        return best.symbol


def _specificity(entry: LegendEntry) -> Tuple[int, int]:
    return (1 if entry.name is not None else 0, len(entry.facts))


# frames and stimuli


Cell = Tuple[str, ...]


class FrameGrid(NamedTuple):
    cells: Tuple[Tuple[Cell, ...], ...]
    annotations: Mapping[str, Any] = {}

    @property
    def dims(self) -> GridDims:
        return GridDims(len(self.cells), len(self.cells[0]) if self.cells else 0)

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "rows": [" ".join(CELL_SEPARATOR.join(cell) for cell in row) for row in self.cells]
        }
        if self.annotations:
            doc["annotations"] = dict(self.annotations)
        return doc


class Question(NamedTuple):
    id: str
    kinds: Tuple[str, ...]
    items: Tuple[str, ...] = ()


class Stimulus(NamedTuple):
    id: str
    domain: str
    grid: GridDims
    frames: Tuple[FrameGrid, ...]
    questions: Tuple[Question, ...] = ()
    scenario: str = ""
    legend: Optional[Legend] = None
    domain_options: Mapping[str, Any] = {}

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "version": STIMULUS_VERSION,
            "id": self.id,
            "domain": self.domain,
            "grid_size": [self.grid.rows, self.grid.cols],
            "scenario": self.scenario,
            "frames": [frame.to_json() for frame in self.frames],
            "questions": [
                {"id": q.id, "kinds": list(q.kinds), "items": list(q.items)}
                for q in self.questions
            ],
        }
        if self.legend is not None:
            doc["legend"] = self.legend.to_json()
        if self.domain_options:
            doc["domain_options"] = dict(self.domain_options)
        return doc


def _parse_row(raw: Any, frame: int) -> Tuple[Cell, ...]:
    tokens = raw.split() if isinstance(raw, str) else raw
    if not isinstance(tokens, list):
        raise StimulusError("rows must be strings or lists of cells", frame)
    cells = []
    for token in tokens:
        if isinstance(token, list):
            cells.append(tuple(str(item) for item in token))
        else:
            cells.append(tuple(part for part in str(token).split(CELL_SEPARATOR) if part))
    return tuple(cells)


def _parse_frame(raw: Any, index: int) -> FrameGrid:
    if isinstance(raw, list):
        raw = {"rows": raw}
    if not isinstance(raw, Mapping) or "rows" not in raw:
        raise StimulusError("expected a list of rows or an object with rows", index)
    rows = tuple(_parse_row(row, index) for row in raw["rows"])
    if not rows or not rows[0]:
        raise StimulusError("empty frame", index)
    width = len(rows[0])
    for number, row in enumerate(rows):
        if len(row) != width:
            raise StimulusError(
                f"ragged frame: row {number} has {len(row)} cells, not {width}", index
            )
    annotations = dict(raw.get("annotations", {}))
    if "turn" in annotations and annotations["turn"] not in TURN_VALUES:
        raise StimulusError(f"turn must be 0 or 1, got {annotations['turn']!r}", index)
    return FrameGrid(rows, annotations)


def parse_stimulus(source: Union[str, Mapping[str, Any], IO[str]]) -> Stimulus:
    """Read and validate a stimulus document (a path, a JSON string, a file or a dict)."""
    if isinstance(source, Mapping):
        doc = source
    else:
        try:
            if hasattr(source, "read"):
                doc = json.load(source)  # type: ignore[arg-type]
            elif source.lstrip().startswith("{"):  # type: ignore[union-attr]
                doc = json.loads(source)  # type: ignore[arg-type]
            else:
                with open(source) as f:  # type: ignore[arg-type]
                    doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise StimulusError(f"cannot read stimulus: {exc}")
    if not isinstance(doc, Mapping):
        raise StimulusError("a stimulus must be a JSON object")

    version = doc.get("version", STIMULUS_VERSION)
    if version != STIMULUS_VERSION:
        raise StimulusError(f"unsupported stimulus version {version!r}")
    for key in ("id", "frames", "grid_size"):
        if key not in doc:
            raise StimulusError(f"missing field {key!r}")
    size = doc["grid_size"]
    if not isinstance(size, list) or len(size) != 2 or min(size) < 1:
        raise StimulusError("grid_size must be [rows, cols]")
    grid = GridDims(int(size[0]), int(size[1]))
    raw_frames = doc["frames"]
    if not isinstance(raw_frames, list) or not raw_frames:
        raise StimulusError("a stimulus needs at least one frame")
    frames = tuple(_parse_frame(raw, index) for index, raw in enumerate(raw_frames))
    for index, frame in enumerate(frames):
        if frame.dims != grid:
            raise StimulusError(
                f"frame is {frame.dims.rows}x{frame.dims.cols} but grid_size is "
                f"{grid.rows}x{grid.cols}",
                index,
            )

    questions = []
    for raw in doc.get("questions", ()):
        kinds = raw.get("kinds") or [raw.get("kind", "goal")]
        questions.append(Question(str(raw["id"]), tuple(kinds), tuple(raw.get("items", ()))))

    legend = Legend.from_json(doc["legend"]) if "legend" in doc else None
    options = doc.get("domain_options", {})
    if not isinstance(options, Mapping):
        raise StimulusError("domain_options must be an object")
    stimulus = Stimulus(
        id=str(doc["id"]),
        domain=str(doc.get("domain", "")),
        grid=grid,
        frames=frames,
        questions=tuple(questions),
        scenario=str(doc.get("scenario", "")),
        legend=legend,
        domain_options=dict(options),
    )
    if legend is not None:
        check_symbols(stimulus, legend)
    return stimulus


def check_symbols(stimulus: Stimulus, legend: Legend) -> None:
    for index, frame in enumerate(stimulus.frames):
        for row, cells in enumerate(frame.cells):
            for col, cell in enumerate(cells):
                for symbol in cell:
                    legend.entry(symbol, index, (row, col))


# decoding


class CellClassifier:
    """Turns the tokens of one cell into legend entries."""

    def classify(self, row: int, col: int, cell: Cell) -> List[LegendEntry]:
        raise NotImplementedError


class LegendClassifier(CellClassifier):
    def __init__(self, legend: Legend):
        self.legend = legend

    def classify(self, row: int, col: int, cell: Cell) -> List[LegendEntry]:
        return [self.legend.entry(symbol, 0, (row, col)) for symbol in cell]


def _decoded_objects(
    stimulus: Stimulus, classifier: CellClassifier
) -> List[Tuple[str, LegendEntry, int, int]]:
    counters: Dict[str, int] = {}
    found = []
    for row, cells in enumerate(stimulus.frames[0].cells):
        for col, cell in enumerate(cells):
            for entry in classifier.classify(row, col, cell):
                if entry.kind != "object":
                    continue
                name = entry.name
                if name is None:
                    assert entry.type is not None
                    counters[entry.type] = counters.get(entry.type, 0) + 1
                    name = f"{entry.type}{counters[entry.type]}"
                found.append((name, entry, row, col))
    return found


def stimulus_objects(
    stimulus: Stimulus,
    legend: Legend,
    domain: DomainSpec,
    classifier: Optional[CellClassifier] = None,
) -> ObjectSet:
    """The objects shown in the first frame, minus the domain's constants.

    Named entries keep their names; generic ones are numbered per type in
    row-major order (``key1``, ``key2``).

    """
    constants = {constant.name for constant in domain.constants}
    entries = []
    seen = set()
    for name, entry, row, col in _decoded_objects(stimulus, classifier or LegendClassifier(legend)):
        if name in seen:
            raise StimulusError(f"object {name!r} appears twice", 0, (row, col))
        seen.add(name)
        if name in constants:
            continue
        tag = "generic_objects"
        if entry.type == "agent" or (entry.type and domain.is_subtype(entry.type, "agent")):
            tag = "agent"
        elif entry.name is not None:
            tag = "unique_objects"
        entries.append(ObjectEntry(name, entry.type or "object", tag))
    return ObjectSet(tuple(entries))


def decode_initial_state(
    stimulus: Stimulus,
    env: GroundedEnvironment,
    legend: Legend,
    init: Sequence[str] = (),
    classifier: Optional[CellClassifier] = None,
) -> WorldState:
    """Decode the first frame cell by cell, then apply the bundle's init literals."""
    classifier = classifier or LegendClassifier(legend)
    grid = env.grid
    matrices: Dict[str, List[List[bool]]] = {
        name: [[False] * grid.cols for _ in range(grid.rows)] for name in env.matrix_names
    }
    for row, cells in enumerate(stimulus.frames[0].cells):
        for col, cell in enumerate(cells):
            for entry in classifier.classify(row, col, cell):
                for matrix in entry.terrain:
                    if matrix not in matrices:
                        raise StimulusError(f"unknown terrain {matrix!r}", 0, (row, col))
                    matrices[matrix][row][col] = True

    facts: Dict[Tuple[str, Tuple[str, ...]], bool] = {}
    ints: Dict[Tuple[str, Tuple[str, ...]], int] = {}
    for name, entry, row, col in _decoded_objects(stimulus, classifier):
        ints[("xloc", (name,))] = col + 1
        ints[("yloc", (name,))] = row + 1
        for fact in entry.positive_facts(name):
            parts = fact.strip("()").split()
            facts[(parts[0], tuple(parts[1:]))] = True
    try:
        state = update_state(env, blank_state(env), facts, ints, matrices)
    except LirasError as exc:
        raise StimulusError(str(exc), 0)
    if init:
        state = state_from_init(env, "\n".join(init), base=state)
    turn = stimulus.frames[0].annotations.get("turn")
    if turn is not None and ("turn", ()) in env.int_slot:
        state = update_state(env, state, ints={("turn", ()): turn})
    return state


def state_to_frame(
    env: GroundedEnvironment, state: WorldState, legend: Legend, annotate: bool = False
) -> FrameGrid:
    """Render ``state`` with symbols in legend order; held objects are not drawn."""
    grid = env.grid
    cells: List[List[List[str]]] = [[[] for _ in range(grid.cols)] for _ in range(grid.rows)]
    for entry in legend.terrain_symbols():
        matrix = state.terrain[env.matrix_slot[entry.terrain[0]]]
        for row in range(grid.rows):
            for col in range(grid.cols):
                if matrix[row][col]:
                    cells[row][col].append(entry.symbol)
    for obj in sorted(env.object_types):
        if ("xloc", (obj,)) not in env.int_slot:
            continue
        x = state.ints[env.int_slot[("xloc", (obj,))]]
        y = state.ints[env.int_slot[("yloc", (obj,))]]
        if 1 <= x <= grid.cols and 1 <= y <= grid.rows:
            cells[y - 1][x - 1].append(legend.symbol_for(env, state, obj))
    rendered = tuple(
        tuple(
            tuple(sorted(cell, key=legend.order.__getitem__)) if cell else (legend.empty,)
            for cell in row
        )
        for row in cells
    )
    annotations: Dict[str, Any] = {}
    if annotate and ("turn", ()) in env.int_slot:
        annotations["turn"] = state.ints[env.int_slot[("turn", ())]]
    return FrameGrid(rendered, annotations)


def states_to_frames(
    env: GroundedEnvironment, states: Sequence[WorldState], legend: Legend
) -> List[FrameGrid]:
    return [state_to_frame(env, state, legend) for state in states]


def _turn(env: GroundedEnvironment, state: WorldState) -> Optional[int]:
    if ("turn", ()) not in env.int_slot:
        return None
    return int(state.ints[env.int_slot[("turn", ())]])


def _next_state(
    env: GroundedEnvironment,
    previous: WorldState,
    frame: FrameGrid,
    legend: Legend,
    index: int,
) -> WorldState:
    wanted = frame.cells
    candidates = {
        nxt
        for _, nxt in successors(env, previous)
        if state_to_frame(env, nxt, legend).cells == wanted
    }
    turn = frame.annotations.get("turn")
    if turn is not None:
        candidates = {state for state in candidates if _turn(env, state) == turn}
    unchanged = state_to_frame(env, previous, legend).cells == wanted
    if unchanged and (turn is None or _turn(env, previous) == turn):
        if turn is not None or not env.is_multi_agent or not candidates:
            return previous
    if len(candidates) == 1:
        return candidates.pop()
    if not candidates:
        if unchanged:
            warnings.warn(
                f"frame {index} repeats turn {turn} without any action",
                AlternationWarning,
                stacklevel=3,
            )
            return previous
        decoded = state_to_frame(env, previous, legend)
        changed = [
            (row, col)
            for row, (old, new) in enumerate(zip(decoded.cells, wanted))
            for col, (a, b) in enumerate(zip(old, new))
            if a != b
        ]
        raise StimulusError(
            "no single action from the previous frame produces this frame; "
            f"changed cells {changed}",
            index,
        )
    diffs = [fluent_diff(env, previous, state) for state in sorted(candidates, key=repr)]
    raise StimulusError(f"the frame is explained by several different states: {diffs}", index)


def frames_to_states(
    stimulus: Stimulus,
    env: GroundedEnvironment,
    legend: Legend,
    init: Sequence[str] = (),
    classifier: Optional[CellClassifier] = None,
) -> List[WorldState]:
    """Decode every frame of ``stimulus`` into a world state.

    :raises: :py:exc:`StimulusError` for frames no single action can produce.

    """
    check_symbols(stimulus, legend)
    states = [decode_initial_state(stimulus, env, legend, init, classifier)]
    first = state_to_frame(env, states[0], legend)
    if first.cells != stimulus.frames[0].cells:
        raise StimulusError("the first frame does not re-render identically; check the legend", 0)
    previous_turn = _turn(env, states[0])
    for index, frame in enumerate(stimulus.frames[1:], start=1):
        turn = frame.annotations.get("turn")
        if env.is_multi_agent and turn is not None and turn == previous_turn:
            warnings.warn(
                f"frame {index} does not alternate turns (turn {turn} twice in a row)",
                AlternationWarning,
                stacklevel=2,
            )
        states.append(_next_state(env, states[-1], frame, legend, index))
        previous_turn = _turn(env, states[-1])
    return states


def derive_actions(env: GroundedEnvironment, states: Sequence[WorldState]) -> List[GroundAction]:
    """Reconstruct the action between each pair of consecutive states."""
    return [
        reconstruct_action(env, before, after, index)
        for index, (before, after) in enumerate(zip(states, states[1:]), start=1)
    ]


# human judgments


class HumanRating(NamedTuple):
    stimulus_id: str
    question_id: str
    mean: float
    std: Optional[float] = None


class HumanDataTable(NamedTuple):
    ratings: Tuple[HumanRating, ...]
    normalized: bool = False

    def lookup(self) -> Dict[Tuple[str, str], HumanRating]:
        return {(rating.stimulus_id, rating.question_id): rating for rating in self.ratings}


REQUIRED_COLUMNS = ("stimulus_id", "question_id", "mean")
NORMALIZATION_TOLERANCE = 0.01


def _float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise LirasError(f"line {line}: {column} {text!r} is not a number")
    if not math.isfinite(value):
        raise LirasError(f"line {line}: {column} must be finite")
    return value


def load_human_data(source: Union[str, IO[str]]) -> HumanDataTable:
    """Read a CSV of mean human ratings.

    Question ids of the form ``<question>:<item>`` group the items of one
    question; when every stimulus's goal-style items sum to one the table is
    flagged as normalized.

    """
    if isinstance(source, str):
        try:
            with open(source, newline="") as f:
                return load_human_data(f)
        except OSError as exc:
            raise LirasError(f"cannot read human data {source}: {exc.strerror}")
    reader = csv.DictReader(source)
    missing = [column for column in REQUIRED_COLUMNS if column not in (reader.fieldnames or ())]
    if missing:
        raise LirasError(f"human data is missing columns {missing}")
    ratings = []
    seen = set()
    for line, row in enumerate(reader, start=2):
        key = (row["stimulus_id"].strip(), row["question_id"].strip())
        if key in seen:
            raise LirasError(f"line {line}: duplicate rating for {key[0]}/{key[1]}")
        seen.add(key)
        std_text = (row.get("std") or "").strip()
        ratings.append(
            HumanRating(
                key[0],
                key[1],
                _float(row["mean"], line, "mean"),
                _float(std_text, line, "std") if std_text else None,
            )
        )
    if not ratings:
        raise LirasError("human data has no rows")
    return HumanDataTable(tuple(ratings), _is_normalized(ratings))


def _is_normalized(ratings: Sequence[HumanRating]) -> bool:
    groups: Dict[Tuple[str, str], float] = {}
    for rating in ratings:
        question = re.split(r"[:/]", rating.question_id, maxsplit=1)[0]
        key = (rating.stimulus_id, question)
        groups[key] = groups.get(key, 0.0) + rating.mean
    return all(abs(total - 1.0) <= NORMALIZATION_TOLERANCE for total in groups.values())
