"""Scoring model ratings against mean human judgments.

Model ratings come from :py:class:`~liras.pipeline.RunReport` answers and are
keyed ``(stimulus, "<question>:<label>")``, the same keys the human-data CSV
uses. Pairs are pooled across stimuli and scored with Pearson's r, once over
everything and once per domain, so domains rated on different scales do not
mask each other. The confidence interval is a seeded percentile bootstrap
over pairs.

"""
import csv
import logging
import math

from typing import Any
from typing import Callable
from typing import Dict
from typing import IO
from typing import Iterable
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from scipy import stats

from liras.lib import InvariantViolation
from liras.lib import LirasError
from liras.pipeline import RunReport
from liras.stimulus import HumanDataTable


logger = logging.getLogger(__name__)


EVAL_VERSION = 2
DEFAULT_RESAMPLES = 10000
DEFAULT_SEED = 0
CONFIDENCE = 0.95
RESAMPLE_CHUNK = 1000
SCATTER_COLUMNS = ("model", "human", "stimulus_id", "question_id")


class EvalError(LirasError):
    """Model and human ratings cannot be scored together."""

    def __init__(self, message: str, orphans: Sequence[Tuple[str, str, str]] = ()):
        if orphans:
            listed = ", ".join(f"{side} {stim}/{question}" for side, stim, question in orphans)
            message = f"{message}: {listed}"
        super().__init__(message)
        self.orphans = tuple(orphans)


class Correlation(NamedTuple):
    r: float
    ci_low: float
    ci_high: float
    n: int

    def to_json(self) -> Dict[str, Any]:
        return {"r": self.r, "ci": [self.ci_low, self.ci_high], "n": self.n}


class RatingPair(NamedTuple):
    stimulus_id: str
    question_id: str
    kind: str
    model: float
    human: float
    domain: str = ""


def _kind_of(answer_kind: str, label: str) -> str:
    if "+" not in answer_kind:
        return answer_kind
    return label.split(":", 1)[0]


def model_ratings(reports: Iterable[RunReport]) -> Dict[Tuple[str, str], Tuple[str, float]]:
    """Every model rating keyed ``(stimulus, "<question>:<label>")`` with its query kind."""
    ratings: Dict[Tuple[str, str], Tuple[str, float]] = {}
    for report in reports:
        for question_id, answer in report.answers:
            for label, rating in zip(answer.labels, answer.ratings):
                key = (report.stimulus_id, f"{question_id}:{label}")
                if key in ratings:
                    raise EvalError(f"rating {key[0]}/{key[1]} is reported twice")
                ratings[key] = (_kind_of(answer.kind, label), rating)
    return ratings


def pair_ratings(reports: Iterable[RunReport], human: HumanDataTable) -> List[RatingPair]:
    """Align model and human ratings by ``(stimulus, question)``.

    Alignment is strict: a rating on either side with no counterpart on the
    other is an orphan, and any orphan fails the evaluation.

    :raises: :py:exc:`EvalError` listing every orphan.

    """
    reports = list(reports)
    domains = {report.stimulus_id: report.domain for report in reports}
    model = model_ratings(reports)
    people = human.lookup()
    orphans = [("model", stim, question) for stim, question in sorted(set(model) - set(people))]
    orphans.extend(("human", stim, question) for stim, question in sorted(set(people) - set(model)))
    if orphans:
        raise EvalError("model and human ratings do not align", orphans)

    pairs = []
    for key in sorted(model):
        kind, rating = model[key]
        if not math.isfinite(rating):
            raise EvalError(f"model rating {key[0]}/{key[1]} is not finite")
        pairs.append(
            RatingPair(key[0], key[1], kind, rating, people[key].mean, domains[key[0]])
        )
    return pairs


def pearson(model: Sequence[float], human: Sequence[float]) -> float:
    """Pearson's r, clipped to [-1, 1].

    :raises: :py:exc:`EvalError` when r is undefined: fewer than two pairs or
        a constant column.

    """
    x = np.asarray(model, dtype=float)
    y = np.asarray(human, dtype=float)
    if x.shape != y.shape:
        raise InvariantViolation(f"rating columns differ in length ({x.size} != {y.size})")
    if x.size < 2:
        raise EvalError(f"correlation needs at least two pairs, got {x.size}")
    if np.ptp(x) == 0:
        raise EvalError("model ratings have zero variance; correlation is undefined")
    if np.ptp(y) == 0:
        raise EvalError("human ratings have zero variance; correlation is undefined")
    r, _ = stats.pearsonr(x, y)
    return float(np.clip(r, -1.0, 1.0))


def _resampled_r(x: np.ndarray, y: np.ndarray, idx: np.ndarray) -> np.ndarray:
    xs = x[idx]
    ys = y[idx]
    xc = xs - xs.mean(axis=1, keepdims=True)
    yc = ys - ys.mean(axis=1, keepdims=True)
    denominator = np.sqrt((xc * xc).sum(axis=1) * (yc * yc).sum(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (xc * yc).sum(axis=1) / denominator
    r[denominator == 0] = np.nan
    return np.clip(r, -1.0, 1.0)


def bootstrap_ci(
    model: Sequence[float],
    human: Sequence[float],
    resamples: int = DEFAULT_RESAMPLES,
    seed: int = DEFAULT_SEED,
    confidence: float = CONFIDENCE,
) -> Tuple[float, float]:
    """A percentile bootstrap interval for Pearson's r over resampled pairs.

    Resamples in which either column is constant have no r and are dropped.

    """
    x = np.asarray(model, dtype=float)
    y = np.asarray(human, dtype=float)
    rng = np.random.default_rng(seed)
    samples = []
    remaining = resamples
    while remaining > 0:
        size = min(RESAMPLE_CHUNK, remaining)
        idx = rng.integers(0, x.size, size=(size, x.size))
        samples.append(_resampled_r(x, y, idx))
        remaining -= size
    values = np.concatenate(samples) if samples else np.empty(0)
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise EvalError("every bootstrap resample was degenerate")
    if values.size < resamples:
        logger.debug("Dropped %d degenerate bootstrap resamples.", resamples - values.size)
    tail = (1.0 - confidence) / 2.0 * 100.0
    low, high = np.percentile(values, [tail, 100.0 - tail])
    return float(low), float(high)


def correlate(
    pairs: Sequence[RatingPair], resamples: int = DEFAULT_RESAMPLES, seed: int = DEFAULT_SEED
) -> Correlation:
    model = [pair.model for pair in pairs]
    human = [pair.human for pair in pairs]
    r = pearson(model, human)
    low, high = bootstrap_ci(model, human, resamples, seed)
    return Correlation(r, min(low, r), max(high, r), len(pairs))


def _maybe_correlate(
    pairs: Sequence[RatingPair], resamples: int, seed: int
) -> Optional[Correlation]:
    try:
        return correlate(pairs, resamples, seed)
    except EvalError:
        return None


class EvalReport(NamedTuple):
    pairs: Tuple[RatingPair, ...]
    overall: Correlation
    by_domain: Dict[str, Optional[Correlation]]
    # keyed "<domain>/<kind>"
    by_domain_kind: Dict[str, Optional[Correlation]]
    by_kind: Dict[str, Optional[Correlation]]
    per_stimulus: Dict[str, Optional[Correlation]]
    resamples: int
    seed: int

    def to_json(self) -> Dict[str, Any]:
        def optional(value: Optional[Correlation]) -> Optional[Dict[str, Any]]:
            return value.to_json() if value else None

        def table(groups: Dict[str, Optional[Correlation]]) -> Dict[str, Any]:
            return {key: optional(value) for key, value in sorted(groups.items())}

        return {
            "version": EVAL_VERSION,
            "overall": self.overall.to_json(),
            "by_domain": table(self.by_domain),
            "by_domain_kind": table(self.by_domain_kind),
            "by_kind": table(self.by_kind),
            "per_stimulus": table(self.per_stimulus),
            "bootstrap": {"resamples": self.resamples, "seed": self.seed},
            "pairs": [pair._asdict() for pair in self.pairs],
        }

    def write_scatter(self, f: IO[str]) -> None:
        """Write the ``(model, human)`` points as CSV for external plotting."""
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SCATTER_COLUMNS)
        for pair in self.pairs:
            writer.writerow(
                [repr(pair.model), repr(pair.human), pair.stimulus_id, pair.question_id]
            )


def _grouped(
    pairs: Sequence[RatingPair], key: Callable[[RatingPair], str], resamples: int, seed: int
) -> Dict[str, Optional[Correlation]]:
    groups: Dict[str, List[RatingPair]] = {}
    for pair in pairs:
        groups.setdefault(key(pair), []).append(pair)
    return {name: _maybe_correlate(group, resamples, seed) for name, group in groups.items()}


def evaluate(
    reports: Iterable[RunReport],
    human: HumanDataTable,
    resamples: int = DEFAULT_RESAMPLES,
    seed: int = DEFAULT_SEED,
) -> EvalReport:
    """Score every aligned rating pair, pooled and per domain, kind and stimulus.

    Each domain is pooled on its own, as is each inference kind within a
    domain; ``overall`` pools everything. Only the overall correlation is
    required to be defined; a group whose ratings are constant is reported
    without one.

    """
    pairs = pair_ratings(reports, human)
    overall = correlate(pairs, resamples, seed)
    by_domain = _grouped(pairs, lambda pair: pair.domain, resamples, seed)
    by_domain_kind = _grouped(pairs, lambda pair: f"{pair.domain}/{pair.kind}", resamples, seed)
    by_kind = _grouped(pairs, lambda pair: pair.kind, resamples, seed)
    per_stimulus = _grouped(pairs, lambda pair: pair.stimulus_id, resamples, seed)
    logger.info(
        "Scored %d rating pairs across %d domains: r = %.3f.", len(pairs), len(by_domain), overall.r
    )
    return EvalReport(
        tuple(pairs), overall, by_domain, by_domain_kind, by_kind, per_stimulus, resamples, seed
    )
