"""Built-in benchmark domains and the on-disk bundle format.

A :py:class:`DomainBundle` is everything needed to run inference on a
stimulus drawn in that domain: the planning domain, the default agent
configuration, the cell legend, and the few init literals a frame cannot
show (agent codes, whose turn it is, which key color opens which door).

Bundles round-trip through a directory of four files so every built-in
domain is reproducible from files alone::

    domain.pddl    the planning domain
    config.json    the agent configuration
    legend.json    the cell legend
    bundle.json    name, template objects, init literals, grid and planner hints

"""
import json
import logging
import os

from typing import Any
from typing import Callable
from typing import Dict
from typing import Mapping
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple

from liras.agent import AgentConfig
from liras.agent import check_config_against_domain
from liras.agent import parse_agent_config
from liras.lib import LirasError
from liras.pddl.domain import DomainSpec
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectSet
from liras.pddl.grounding import DEFAULT_ACTION_CAP
from liras.pddl.grounding import ground
from liras.pddl.grounding import GroundedEnvironment
from liras.pddl.printer import print_domain
from liras.pddl.reader import parse_domain
from liras.pddl.validation import validate_domain
from liras.stimulus import Legend
from liras.stimulus import Stimulus
from liras.stimulus import stimulus_objects


logger = logging.getLogger(__name__)


BUNDLE_VERSION = 1
BUNDLE_FILES = ("domain.pddl", "config.json", "legend.json", "bundle.json")


class BundleError(LirasError):
    """A bundle is incomplete or its parts disagree with each other."""

    def __init__(self, bundle: str, message: str):
        super().__init__(f"bundle {bundle!r}: {message}")
        self.bundle = bundle


class DomainBundle(NamedTuple):
    name: str
    domain: DomainSpec
    objects: ObjectSet
    config: AgentConfig
    legend: Legend
    init: Tuple[str, ...] = ()
    hints: Mapping[str, Any] = {}

    @property
    def grid(self) -> GridDims:
        return self.config.grid

    def ground_template(self, action_cap: int = DEFAULT_ACTION_CAP) -> GroundedEnvironment:
        """Ground the domain over the template objects on the template grid."""
        return ground(self.domain, self.objects, self.grid, action_cap)

    def environment_for(
        self, stimulus: Stimulus, action_cap: int = DEFAULT_ACTION_CAP
    ) -> GroundedEnvironment:
        """Ground the domain over the objects drawn in the stimulus's first frame."""
        objects = stimulus_objects(stimulus, self.legend, self.domain)
        return ground(self.domain, objects, stimulus.grid, action_cap)

    def config_for(self, stimulus: Stimulus) -> AgentConfig:
        if stimulus.grid == self.config.grid:
            return self.config
        return self.config._replace(grid=stimulus.grid)


def check_bundle(bundle: DomainBundle) -> DomainBundle:
    """Validate the domain, price every action and trial-ground the template.

    :raises: :py:exc:`BundleError` describing the first problem found.

    """
    report = validate_domain(bundle.domain)
    if not report.valid:
        problems = "; ".join(violation.message for violation in report.violations)
        raise BundleError(bundle.name, f"domain is invalid: {problems}")
    try:
        check_config_against_domain(bundle.config, bundle.domain)
        bundle.ground_template()
    except LirasError as exc:
        raise BundleError(bundle.name, str(exc))
    return bundle


def bundle_from_text(
    name: str,
    pddl: str,
    objects: ObjectSet,
    config: AgentConfig,
    legend: Legend,
    init: Sequence[str] = (),
    hints: Optional[Mapping[str, Any]] = None,
) -> DomainBundle:
    return check_bundle(
        DomainBundle(name, parse_domain(pddl), objects, config, legend, tuple(init), hints or {})
    )


# on disk


def export_bundle(bundle: DomainBundle, directory: str) -> Dict[str, str]:
    """Write ``bundle`` into ``directory`` and return the paths written."""
    os.makedirs(directory, exist_ok=True)
    paths = {name: os.path.join(directory, name) for name in BUNDLE_FILES}
    with open(paths["domain.pddl"], "w") as f:
        f.write(print_domain(bundle.domain))
    documents = {
        "config.json": bundle.config.to_json(),
        "legend.json": bundle.legend.to_json(),
        "bundle.json": {
            "version": BUNDLE_VERSION,
            "name": bundle.name,
            "objects": bundle.objects.to_json(),
            "init": list(bundle.init),
            "hints": dict(bundle.hints),
        },
    }
    for name, document in documents.items():
        with open(paths[name], "w") as f:
            json.dump(document, f, indent=2, sort_keys=True)
            f.write("\n")
    logger.info("wrote bundle %s to %s", bundle.name, directory)
    return paths


def _read_json(path: str, bundle: str) -> Any:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise BundleError(bundle, f"cannot read {os.path.basename(path)}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise BundleError(bundle, f"{os.path.basename(path)} is not valid JSON: {exc}")


def load_bundle(directory: str) -> DomainBundle:
    """Read a bundle written by :py:func:`export_bundle` (or by hand)."""
    label = os.path.basename(os.path.normpath(directory))
    meta = _read_json(os.path.join(directory, "bundle.json"), label)
    if meta.get("version", BUNDLE_VERSION) != BUNDLE_VERSION:
        raise BundleError(label, f"unsupported bundle version {meta.get('version')!r}")
    name = meta.get("name", label)
    try:
        with open(os.path.join(directory, "domain.pddl")) as f:
            pddl = f.read()
    except OSError as exc:
        raise BundleError(name, f"cannot read domain.pddl: {exc.strerror}")
    config = parse_agent_config(_read_json(os.path.join(directory, "config.json"), name))
    legend = Legend.from_json(_read_json(os.path.join(directory, "legend.json"), name))
    return bundle_from_text(
        name,
        pddl,
        ObjectSet.from_json(meta.get("objects", [])),
        config,
        legend,
        meta.get("init", ()),
        meta.get("hints", {}),
    )


# registry


BundleBuilder = Callable[..., DomainBundle]


def _builders() -> Dict[str, BundleBuilder]:
    from liras.domains import astronaut
    from liras.domains import dkg
    from liras.domains import example
    from liras.domains import foodtruck

    return {
        "dkg-single": lambda **kw: dkg.build_dkg(dkg.DkgVariant("single"), **kw),
        "dkg-double": lambda **kw: dkg.build_dkg(dkg.DkgVariant("double"), **kw),
        "dkg-reuse": lambda **kw: dkg.build_dkg(dkg.DkgVariant("reuse"), **kw),
        "dkg-inverse": lambda **kw: dkg.build_dkg(
            dkg.DkgVariant.rotated(kw.get("colors", dkg.DEFAULT_COLORS)), **kw
        ),
        "m-dkg": dkg.build_multiagent_dkg,
        "foodtruck": foodtruck.build_foodtruck,
        "astronaut": astronaut.build_astronaut,
        "example": example.build_example,
    }


def builtin_names() -> Tuple[str, ...]:
    return tuple(sorted(_builders()))


def resolve_bundle(reference: str, **kwargs: Any) -> DomainBundle:
    """A built-in bundle by name, or a bundle directory on disk."""
    builders = _builders()
    if reference in builders:
        grid = kwargs.get("grid")
        if grid is not None and not isinstance(grid, GridDims):
            # stimulus documents spell the grid as [rows, cols]
            try:
                kwargs["grid"] = GridDims.of(*grid)
            except (TypeError, ValueError) as exc:
                raise LirasError(f"grid option {grid!r}: {exc}")
        try:
            return builders[reference](**kwargs)
        except TypeError as exc:
            raise LirasError(f"domain options for {reference!r}: {exc}")
    if os.path.isdir(reference):
        return load_bundle(reference)
    raise LirasError(
        f"{reference!r} is neither a bundle directory nor a built-in domain "
        f"({', '.join(sorted(builders))})"
    )
