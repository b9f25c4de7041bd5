"""Inverse planning over symbolic stimuli.

Sub-commands:

  run     infer mental-state ratings for one stimulus
  eval    run a directory of stimuli and correlate with human ratings
  verify  cross-check the engine against the exhaustive oracle
  synth   synthesize a domain bundle from a natural-language description

Exit status is 0 on success, 1 when the input data is at fault and 2 on an
internal inconsistency.

"""
import argparse
import configparser
import json
import logging
import os
import sys
import warnings

from concurrent.futures import ProcessPoolExecutor
from typing import Any
from typing import Callable
from typing import Dict
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import TextIO

from liras import evaluation
from liras import pipeline
from liras.domains import export_bundle
from liras.lib import config
from liras.lib import InvariantViolation
from liras.lib import LirasError
from liras.lib.log_formatter import JsonFormatter
from liras.oracle import DEFAULT_HYPOTHESIS_CAP as ORACLE_HYPOTHESIS_CAP
from liras.oracle import DEFAULT_STATE_CAP
from liras.oracle import OracleCapError
from liras.pddl.grounding import DEFAULT_ACTION_CAP
from liras.planner import DEFAULT_NODE_BUDGET
from liras.siam import DEFAULT_HYPOTHESIS_CAP
from liras.stimulus import load_human_data
from liras.synthesis import DEFAULT_ATTEMPTS
from liras.synthesis import DEFAULT_TEMPERATURE
from liras.synthesis import load_request
from liras.synthesis import synthesize_bundle
from liras.synthesis import SynthesisSettings
from liras.synthesis.log import SynthesisAttemptLog
from liras.synthesis.transports import API_KEY_VARIABLE
from liras.synthesis.transports import DEFAULT_ENDPOINT
from liras.synthesis.transports import DEFAULT_MODEL
from liras.synthesis.transports import HttpTransport
from liras.synthesis.transports import ReplayTransport
from liras.synthesis.transports import Transport


logger = logging.getLogger(__name__)


CONFIG_SECTION = "liras"
ATTEMPT_LOG = "attempts.json"

SETTINGS_LAYOUT = {
    "siam": {
        "hypothesis_cap": config.Optional(
            config.Positive(config.Integer), default=DEFAULT_HYPOTHESIS_CAP
        ),
        "beta": config.Optional(config.Positive(config.Float)),
    },
    "planner": {
        "node_budget": config.Optional(
            config.Positive(config.Integer), default=DEFAULT_NODE_BUDGET
        ),
        "heuristic": config.Optional(config.OneOf(none="none", manhattan="manhattan")),
        "invalid_action": config.Optional(
            config.OneOf(eliminate="eliminate", skip="skip"), default="eliminate"
        ),
    },
    "grounding": {
        "action_cap": config.Optional(config.Positive(config.Integer), default=DEFAULT_ACTION_CAP)
    },
    "oracle": {
        "state_cap": config.Optional(config.Positive(config.Integer), default=DEFAULT_STATE_CAP),
        "hypothesis_cap": config.Optional(
            config.Positive(config.Integer), default=ORACLE_HYPOTHESIS_CAP
        ),
    },
    "synthesis": {
        "endpoint": config.Optional(config.String, default=DEFAULT_ENDPOINT),
        "model": config.Optional(config.String, default=DEFAULT_MODEL),
        "api_key": config.Optional(config.String),
        "attempts": config.Optional(config.Positive(config.Integer), default=DEFAULT_ATTEMPTS),
        "temperature": config.Optional(config.Positive(config.Float), default=DEFAULT_TEMPERATURE),
        "budget": config.Optional(config.Positive(config.Float)),
        "backoff": config.Optional(config.Positive(config.Float)),
    },
    "eval": {
        "resamples": config.Optional(
            config.Positive(config.Integer), default=evaluation.DEFAULT_RESAMPLES
        ),
        "seed": config.Optional(config.Integer, default=evaluation.DEFAULT_SEED),
    },
}

API_KEY_LAYOUT = {"synthesis": {"api_key": config.DefaultFromEnv(config.String, API_KEY_VARIABLE)}}


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--domain",
        metavar="BUNDLE",
        help="built-in domain name or bundle directory (default: named by each stimulus)",
    )
    parser.add_argument(
        "--beta", type=float, metavar="BETA", help="override the agent's inverse temperature"
    )
    parser.add_argument("--out", metavar="PATH", help="write the JSON report here, not stdout")


def _add_jobs_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--jobs",
        type=int,
        default=1,
        metavar="N",
        help="evaluate up to N stimuli in parallel (default: 1)",
    )


def parse_args(args: Sequence[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="liras",
        description=sys.modules[__name__].__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
    )
    parser.add_argument(
        "--debug", action="store_true", default=False, help="enable extra-verbose debug logging"
    )
    parser.add_argument(
        "--config-file",
        dest="config_file",
        type=argparse.FileType("r"),
        metavar="PATH",
        help=f"INI file with a [{CONFIG_SECTION}] section of settings",
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    run_parser = commands.add_parser("run", help="infer ratings for one stimulus")
    run_parser.add_argument("stimulus", help="path to a stimulus JSON document")
    _add_run_flags(run_parser)
    run_parser.set_defaults(handler=command_run)

    eval_parser = commands.add_parser("eval", help="correlate a directory with human data")
    eval_parser.add_argument("stimuli", help="directory of stimulus JSON documents")
    eval_parser.add_argument("human", help="CSV of mean human ratings")
    _add_run_flags(eval_parser)
    _add_jobs_flag(eval_parser)
    eval_parser.add_argument("--seed", type=int, metavar="SEED", help="bootstrap seed")
    eval_parser.add_argument(
        "--scatter", metavar="PATH", help="also write (model, human) pairs as CSV"
    )
    eval_parser.set_defaults(handler=command_eval)

    verify_parser = commands.add_parser("verify", help="cross-check against the oracle")
    verify_parser.add_argument("stimuli", help="directory of stimulus JSON documents")
    _add_run_flags(verify_parser)
    _add_jobs_flag(verify_parser)
    verify_parser.set_defaults(handler=command_verify)

    synth_parser = commands.add_parser("synth", help="synthesize a domain bundle")
    synth_parser.add_argument("request", help="JSON synthesis request with a description")
    synth_parser.add_argument("output", help="directory to write the bundle into")
    synth_parser.add_argument(
        "--replay", metavar="LOG", help="replay responses from a recorded attempt log"
    )
    synth_parser.add_argument(
        "--transport-url", metavar="URL", help="live endpoint ({model} is substituted)"
    )
    synth_parser.add_argument("--model", metavar="NAME", help="model name for the live endpoint")
    synth_parser.set_defaults(handler=command_synth)

    return parser.parse_args(args)


def read_settings(config_file: Optional[TextIO]) -> Dict[str, str]:
    """The raw ``[liras]`` section of the settings file, if one was given."""
    if config_file is None:
        return {}
    # RawConfigParser so that values are never interpolated.
    parser = configparser.RawConfigParser()
    with config_file:
        parser.read_file(config_file)
    if not parser.has_section(CONFIG_SECTION):
        logger.warning("%s has no [%s] section", config_file.name, CONFIG_SECTION)
        return {}
    return dict(parser.items(CONFIG_SECTION))


def overlay_flags(raw: Dict[str, str], args: argparse.Namespace) -> Dict[str, str]:
    """Layer command-line flags over the settings file."""
    merged = dict(raw)
    overrides = {
        "siam.beta": getattr(args, "beta", None),
        "eval.seed": getattr(args, "seed", None),
        "synthesis.endpoint": getattr(args, "transport_url", None),
        "synthesis.model": getattr(args, "model", None),
    }
    for key, value in overrides.items():
        if value is not None:
            merged[key] = str(value)
    return merged


def configure_logging(debug: bool) -> None:
    logging.captureWarnings(capture=True)

    if debug:
        logging_level = logging.DEBUG
        warnings.simplefilter("always")
    else:
        logging_level = logging.INFO

    formatter = JsonFormatter("%(levelname)s %(message)s %(name)s %(module)s %(lineno)d")

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(logging_level)
    root_logger.addHandler(handler)


def run_settings(settings: config.ConfigNamespace) -> pipeline.RunSettings:
    return pipeline.RunSettings(
        beta=settings.siam.beta,
        hypothesis_cap=settings.siam.hypothesis_cap,
        node_budget=settings.planner.node_budget,
        heuristic=settings.planner.heuristic,
        invalid_action=settings.planner.invalid_action,
        action_cap=settings.grounding.action_cap,
        oracle_state_cap=settings.oracle.state_cap,
        oracle_hypothesis_cap=settings.oracle.hypothesis_cap,
    )


def write_json(document: Any, out: Optional[str]) -> None:
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# batches


class Outcome(NamedTuple):
    """What one worker made of one stimulus.

    Errors cross the process boundary as text; ``cap`` marks an oracle cap
    and ``internal`` an invariant violation.

    """

    path: str
    value: Any = None
    error: Optional[str] = None
    cap: bool = False
    internal: bool = False


def _attempt(
    func: Callable[[str, Optional[str], pipeline.RunSettings], Any],
    path: str,
    domain: Optional[str],
    settings: pipeline.RunSettings,
) -> Outcome:
    try:
        return Outcome(path, value=func(path, domain, settings))
    except pipeline.PipelineError as exc:
        return Outcome(path, error=str(exc), cap=isinstance(exc.cause, OracleCapError))
    except LirasError as exc:
        return Outcome(path, error=str(exc))
    except InvariantViolation as exc:
        return Outcome(path, error=str(exc), internal=True)


def _run_one(path: str, domain: Optional[str], settings: pipeline.RunSettings) -> Outcome:
    return _attempt(pipeline.run_path, path, domain, settings)


def _verify_one(path: str, domain: Optional[str], settings: pipeline.RunSettings) -> Outcome:
    return _attempt(pipeline.verify_path, path, domain, settings)


def map_stimuli(
    worker: Callable[[str, Optional[str], pipeline.RunSettings], Outcome],
    paths: Sequence[str],
    domain: Optional[str],
    settings: pipeline.RunSettings,
    jobs: int,
) -> List[Outcome]:
    """Apply ``worker`` to every path, in path order whatever the parallelism."""
    if jobs <= 1 or len(paths) <= 1:
        return [worker(path, domain, settings) for path in paths]
    count = len(paths)
    with ProcessPoolExecutor(max_workers=min(jobs, count)) as executor:
        return list(executor.map(worker, paths, [domain] * count, [settings] * count))


def _raise_first(outcomes: Sequence[Outcome]) -> None:
    for outcome in outcomes:
        if outcome.internal:
            raise InvariantViolation(f"{outcome.path}: {outcome.error}")
    for outcome in outcomes:
        if outcome.error is not None:
            raise LirasError(f"{outcome.path}: {outcome.error}")


# commands


def command_run(args: argparse.Namespace, settings: config.ConfigNamespace) -> int:
    report = pipeline.run_path(args.stimulus, args.domain, run_settings(settings))
    write_json(report.to_json(), args.out)
    return 0


def command_eval(args: argparse.Namespace, settings: config.ConfigNamespace) -> int:
    human = load_human_data(args.human)
    paths = pipeline.stimulus_paths(args.stimuli)
    if not paths:
        raise LirasError(f"no stimuli in {args.stimuli}")
    outcomes = map_stimuli(_run_one, paths, args.domain, run_settings(settings), args.jobs)
    _raise_first(outcomes)
    reports = sorted((outcome.value for outcome in outcomes), key=lambda r: r.stimulus_id)
    with pipeline.stage("evaluate"):
        result = evaluation.evaluate(
            reports, human, resamples=settings.eval.resamples, seed=settings.eval.seed
        )
    document = result.to_json()
    document["human_normalized"] = human.normalized
    write_json(document, args.out)
    if args.scatter:
        with open(args.scatter, "w", newline="") as f:
            result.write_scatter(f)
    return 0


def command_verify(args: argparse.Namespace, settings: config.ConfigNamespace) -> int:
    paths = pipeline.stimulus_paths(args.stimuli)
    if not paths:
        logger.warning("No stimuli in %s; nothing to verify.", args.stimuli)
    outcomes = map_stimuli(_verify_one, paths, args.domain, run_settings(settings), args.jobs)
    for outcome in outcomes:
        if outcome.error is not None and not outcome.cap:
            _raise_first([outcome])

    divergences = sorted(
        (outcome.value for outcome in outcomes if outcome.value is not None),
        key=lambda d: d.stimulus_id,
    )
    capped = [outcome for outcome in outcomes if outcome.cap]
    worst = max((d.max_divergence for d in divergences), default=0.0)
    write_json(
        {
            "version": pipeline.REPORT_VERSION,
            "tolerance": pipeline.DIVERGENCE_TOLERANCE,
            "max_divergence": worst,
            "instances": [d._asdict() for d in divergences],
            "capped": [{"path": o.path, "error": o.error} for o in capped],
        },
        args.out,
    )

    for outcome in capped:
        logger.error("Not verified: %s", outcome.error)
    failed = [d for d in divergences if d.max_divergence > pipeline.DIVERGENCE_TOLERANCE]
    if failed:
        raise InvariantViolation(
            "posteriors diverge beyond tolerance: "
            + ", ".join(f"{d.stimulus_id} ({d.worst}: {d.max_divergence:.3g})" for d in failed)
        )
    if capped:
        return 1
    logger.info("Verified %d stimuli; max divergence %.3g.", len(divergences), worst)
    return 0


def make_transport(args: argparse.Namespace, settings: config.ConfigNamespace) -> Transport:
    if args.replay:
        return ReplayTransport(SynthesisAttemptLog.load(args.replay))
    raw = {"synthesis.api_key": settings.synthesis.api_key or ""}
    api_key = config.parse_config(raw, API_KEY_LAYOUT).synthesis.api_key
    return HttpTransport(api_key, settings.synthesis.endpoint, settings.synthesis.model)


def command_synth(args: argparse.Namespace, settings: config.ConfigNamespace) -> int:
    request = load_request(args.request)
    transport = make_transport(args, settings)
    synthesis_settings = SynthesisSettings(
        attempts=settings.synthesis.attempts,
        budget=settings.synthesis.budget,
        backoff=settings.synthesis.backoff,
        temperature=settings.synthesis.temperature,
    )
    log = SynthesisAttemptLog()
    try:
        with pipeline.stage("synthesize", request.name):
            bundle = synthesize_bundle(request, transport, synthesis_settings, log)
    finally:
        os.makedirs(args.output, exist_ok=True)
        with open(os.path.join(args.output, ATTEMPT_LOG), "w") as f:
            log.dump(f)
    export_bundle(bundle, args.output)
    logger.info("Synthesized %s after %d attempts.", bundle.name, len(log))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, read settings and run the chosen command."""
    args = parse_args(sys.argv[1:] if argv is None else argv)
    configure_logging(args.debug)
    try:
        raw = overlay_flags(read_settings(args.config_file), args)
        settings = config.parse_config(raw, SETTINGS_LAYOUT)
        return args.handler(args, settings)
    except (LirasError, config.ConfigurationError) as exc:
        logger.error("%s", exc)
        return 1
    except InvariantViolation as exc:
        logger.error("Internal inconsistency: %s", exc)
        return 2
    except Exception:  # pylint: disable=broad-except
        logger.exception("Unexpected error.")
        return 2
