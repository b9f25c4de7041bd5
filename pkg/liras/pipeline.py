"""Running the whole inference pipeline on one stimulus.

The stages are, in order: resolve the domain bundle, ground it over the
objects in the first frame, decode every frame into a state, reconstruct the
actions between them, filter the hypotheses, and answer the questions. A
failure in any stage is re-raised as a :py:exc:`PipelineError` labelled
with the stage, so a batch report says where each stimulus broke.

"""
import contextlib
import logging
import math
import os
import warnings

from typing import Any
from typing import Dict
from typing import Iterator
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Tuple

from liras.agent import AgentConfig
from liras.agent import Hypothesis
from liras.domains import DomainBundle
from liras.domains import resolve_bundle
from liras.lib import InvariantViolation
from liras.lib import LirasError
from liras.oracle import DEFAULT_HYPOTHESIS_CAP as ORACLE_HYPOTHESIS_CAP
from liras.oracle import DEFAULT_STATE_CAP
from liras.oracle import exact_posterior
from liras.pddl.grounding import DEFAULT_ACTION_CAP
from liras.pddl.grounding import ground
from liras.pddl.grounding import GroundAction
from liras.pddl.grounding import GroundedEnvironment
from liras.planner import DEFAULT_NODE_BUDGET
from liras.planner import Planner
from liras.siam import answer_query
from liras.siam import DEFAULT_HYPOTHESIS_CAP
from liras.siam import expectation
from liras.siam import expected_costs
from liras.siam import expected_rewards
from liras.siam import marginal
from liras.siam import PosteriorTable
from liras.siam import QueryResult
from liras.siam import QuerySpec
from liras.siam import Siam
from liras.stimulus import derive_actions
from liras.stimulus import frames_to_states
from liras.stimulus import Legend
from liras.stimulus import parse_stimulus
from liras.stimulus import Question
from liras.stimulus import Stimulus
from liras.stimulus import stimulus_objects
from liras.world import WorldState


logger = logging.getLogger(__name__)


REPORT_VERSION = 1
STAGES = ("parse", "ground", "decode", "reconstruct", "infer", "query", "synthesize", "evaluate")
DIVERGENCE_TOLERANCE = 1e-9


class PipelineError(LirasError):
    """A data error, labelled with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception, stimulus: Optional[str] = None):
        prefix = f"{stage} [{stimulus}]" if stimulus else stage
        super().__init__(f"{prefix}: {cause}")
        self.stage = stage
        self.cause = cause
        self.stimulus = stimulus


@contextlib.contextmanager
def stage(name: str, stimulus: Optional[str] = None) -> Iterator[None]:
    assert name in STAGES, name
    try:
        yield
    except PipelineError:
        raise
    except LirasError as exc:
        logger.warning("%s failed: %s", name, exc, extra={"stage": name, "stimulus": stimulus})
        raise PipelineError(name, exc, stimulus) from exc


class RunSettings(NamedTuple):
    """Knobs for one run; :py:data:`None` means "use the bundle's value"."""

    beta: Optional[float] = None
    hypothesis_cap: int = DEFAULT_HYPOTHESIS_CAP
    node_budget: int = DEFAULT_NODE_BUDGET
    heuristic: Optional[str] = None
    invalid_action: str = "eliminate"
    action_cap: int = DEFAULT_ACTION_CAP
    oracle_state_cap: int = DEFAULT_STATE_CAP
    oracle_hypothesis_cap: int = ORACLE_HYPOTHESIS_CAP


class RunReport(NamedTuple):
    stimulus_id: str
    domain: str
    marginals: Tuple[Dict[str, object], ...]
    answers: Tuple[Tuple[str, QueryResult], ...]
    diagnostics: Dict[str, Any]

    def ratings(self) -> Dict[str, float]:
        """Every answered rating keyed ``<question>:<label>``."""
        result = {}
        for question_id, answer in self.answers:
            for label, rating in zip(answer.labels, answer.ratings):
                result[f"{question_id}:{label}"] = rating
        return result

    def to_json(self) -> Dict[str, Any]:
        return {
            "version": REPORT_VERSION,
            "stimulus": self.stimulus_id,
            "domain": self.domain,
            "marginals": list(self.marginals),
            "answers": {question_id: answer.to_json() for question_id, answer in self.answers},
            "diagnostics": self.diagnostics,
        }


class Prepared(NamedTuple):
    """A stimulus decoded into states and actions, ready for inference."""

    stimulus: Stimulus
    bundle: DomainBundle
    cfg: AgentConfig
    env: GroundedEnvironment
    states: Tuple[WorldState, ...]
    actions: Tuple[GroundAction, ...]


def load_stimulus(path: str) -> Stimulus:
    with stage("parse"):
        return parse_stimulus(path)


def bundle_for(
    stimulus: Stimulus, domain: Optional[str] = None, base_dir: Optional[str] = None
) -> DomainBundle:
    """The bundle named by ``domain`` or, failing that, by the stimulus itself.

    A relative bundle directory is looked up next to the stimulus first.

    """
    reference = domain or stimulus.domain
    with stage("parse", stimulus.id):
        if not reference:
            raise LirasError("no domain given and the stimulus names none")
        if base_dir and not os.path.isabs(reference):
            candidate = os.path.join(base_dir, reference)
            if os.path.isdir(candidate):
                reference = candidate
        return resolve_bundle(reference, **stimulus.domain_options)


def prepare(stimulus: Stimulus, bundle: DomainBundle, settings: RunSettings) -> Prepared:
    legend: Legend = stimulus.legend or bundle.legend
    with stage("ground", stimulus.id):
        objects = stimulus_objects(stimulus, legend, bundle.domain)
        env = ground(bundle.domain, objects, stimulus.grid, settings.action_cap)
    cfg = bundle.config_for(stimulus)
    if settings.beta is not None:
        with stage("infer", stimulus.id):
            cfg = cfg.with_beta(settings.beta)
    with stage("decode", stimulus.id):
        states = frames_to_states(stimulus, env, legend, bundle.init)
    with stage("reconstruct", stimulus.id):
        actions = derive_actions(env, states)
    return Prepared(stimulus, bundle, cfg, env, tuple(states), tuple(actions))


def questions_for(stimulus: Stimulus, cfg: AgentConfig) -> Tuple[Question, ...]:
    """The stimulus's questions, or one per configured query kind."""
    if stimulus.questions:
        return stimulus.questions
    return tuple(Question(kind, (kind,)) for kind in cfg.query)


def _eliminated(table: PosteriorTable) -> int:
    return int(sum(1 for weight in table.log_weights if not math.isfinite(weight)))


def run_stimulus(
    stimulus: Stimulus, bundle: DomainBundle, settings: RunSettings = RunSettings()
) -> RunReport:
    """Infer the posterior for one stimulus and answer its questions."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        prepared = prepare(stimulus, bundle, settings)
        heuristic = settings.heuristic or str(bundle.hints.get("heuristic", "none"))
        planner = Planner(
            prepared.env,
            node_budget=settings.node_budget,
            heuristic=heuristic,
            invalid_action=settings.invalid_action,
        )
        siam = Siam(prepared.cfg, prepared.env, planner, settings.hypothesis_cap)
        with stage("infer", stimulus.id):
            table, trace = siam.run(list(prepared.states), list(prepared.actions))
        with stage("query", stimulus.id):
            answers = tuple(
                (
                    question.id,
                    answer_query(table, QuerySpec.of(question.kinds, question.items), siam.cfg),
                )
                for question in questions_for(stimulus, siam.cfg)
            )

    for warning in caught:
        logger.warning("%s", warning.message, extra={"stimulus": stimulus.id})
    diagnostics: Dict[str, Any] = dict(planner.stats())
    diagnostics.update(
        {
            "hypotheses": len(table.hypotheses),
            "eliminated": _eliminated(table),
            "steps": len(prepared.actions),
            "actions": [str(action) for action in prepared.actions],
            "warnings": [str(warning.message) for warning in caught],
        }
    )
    return RunReport(stimulus.id, bundle.name, tuple(trace), answers, diagnostics)


# verification


class Divergence(NamedTuple):
    stimulus_id: str
    max_divergence: float
    entries: int
    worst: str


def _goal_reward(hyp: Hypothesis) -> float:
    return hyp.goal_reward


def _comparable(table: PosteriorTable, cfg: AgentConfig) -> Dict[str, float]:
    values: Dict[str, float] = {}
    for kind in ("goal", "reward", "cost", "belief"):
        if kind == "cost":
            result = expected_costs(table)
        else:
            result = marginal(table, kind)
        for label, rating in zip(result.labels, result.ratings):
            values[f"{kind}:{label}"] = rating
    if cfg.rewards:
        values["expected_reward"] = expectation(table, _goal_reward)
        rewards = expected_rewards(table, cfg)
        for label, rating in zip(rewards.labels, rewards.ratings):
            values[f"expected_reward:{label}"] = rating
    return values


def compare_posteriors(
    stimulus_id: str, first: PosteriorTable, second: PosteriorTable, cfg: AgentConfig
) -> Divergence:
    """The largest absolute difference over every marginal entry and expectation."""
    left = _comparable(first, cfg)
    right = _comparable(second, cfg)
    if set(left) != set(right):
        raise InvariantViolation(
            f"{stimulus_id}: posteriors disagree on their entries "
            f"({sorted(set(left) ^ set(right))})"
        )
    worst_key = ""
    worst = 0.0
    for key in sorted(left):
        gap = abs(left[key] - right[key])
        if gap > worst or not worst_key:
            worst_key, worst = key, gap
    return Divergence(stimulus_id, worst, len(left), worst_key)


def verify_stimulus(
    stimulus: Stimulus, bundle: DomainBundle, settings: RunSettings = RunSettings()
) -> Divergence:
    """Run the engine and the exhaustive oracle side by side."""
    prepared = prepare(stimulus, bundle, settings)
    heuristic = settings.heuristic or str(bundle.hints.get("heuristic", "none"))
    planner = Planner(
        prepared.env,
        node_budget=settings.node_budget,
        heuristic=heuristic,
        invalid_action=settings.invalid_action,
    )
    siam = Siam(prepared.cfg, prepared.env, planner, settings.hypothesis_cap)
    with stage("infer", stimulus.id):
        table, _ = siam.run(list(prepared.states), list(prepared.actions))
        reference = exact_posterior(
            prepared.cfg,
            prepared.env,
            prepared.states,
            prepared.actions,
            state_cap=settings.oracle_state_cap,
            hypothesis_cap=settings.oracle_hypothesis_cap,
            invalid_action=settings.invalid_action,
        )
    return compare_posteriors(stimulus.id, table, reference, prepared.cfg)


def stimulus_paths(directory: str) -> List[str]:
    """The stimulus documents in ``directory``, in file-name order."""
    try:
        names = os.listdir(directory)
    except OSError as exc:
        raise LirasError(f"cannot list stimuli in {directory}: {exc.strerror}")
    return sorted(
        os.path.join(directory, name)
        for name in names
        if name.endswith(".json") and os.path.isfile(os.path.join(directory, name))
    )


def run_path(path: str, domain: Optional[str], settings: RunSettings) -> RunReport:
    stimulus = load_stimulus(path)
    bundle = bundle_for(stimulus, domain, os.path.dirname(path))
    return run_stimulus(stimulus, bundle, settings)


def verify_path(path: str, domain: Optional[str], settings: RunSettings) -> Divergence:
    stimulus = load_stimulus(path)
    bundle = bundle_for(stimulus, domain, os.path.dirname(path))
    return verify_stimulus(stimulus, bundle, settings)
