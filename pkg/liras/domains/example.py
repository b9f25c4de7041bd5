"""The boy, balls and plates domain used to illustrate domain synthesis.

Three unique balls hide in cabinets that the boy cannot see into from
behind black space; he walks on white and black space at different costs.

"""
from typing import Optional

from liras.agent import parse_agent_config
from liras.data import read_text
from liras.domains import bundle_from_text
from liras.domains import DomainBundle
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectEntry
from liras.pddl.domain import ObjectSet
from liras.stimulus import Legend
from liras.stimulus import LegendEntry


DOMAIN_FILE = "example.pddl"
CONFIG_FILE = "example_config.json"


def example_legend() -> Legend:
    return Legend(
        [
            LegendEntry(".", "empty"),
            LegendEntry("w", "terrain", terrain=("whitespace",)),
            LegendEntry("b", "terrain", terrain=("blackspace",)),
            LegendEntry("C", "object", type="cabinet"),
            LegendEntry("P_c", "object", type="plate", facts=("(isplateshape $ circle)",)),
            LegendEntry("P_s", "object", type="plate", facts=("(isplateshape $ square)",)),
            LegendEntry("T", "object", type="ball", name="tennisball"),
            LegendEntry("K", "object", type="ball", name="basketball"),
            LegendEntry("B", "object", type="ball", name="baseball"),
            LegendEntry("@", "object", type="agent", name="boy"),
        ]
    )


def build_example(grid: Optional[GridDims] = None) -> DomainBundle:
    config = parse_agent_config(read_text(CONFIG_FILE))
    if grid is not None:
        config = config._replace(grid=grid)
    return bundle_from_text(
        "example",
        read_text(DOMAIN_FILE),
        ObjectSet(
            (
                ObjectEntry("plate1", "plate"),
                ObjectEntry("plate2", "plate"),
                ObjectEntry("cabinet1", "cabinet"),
            )
        ),
        config,
        example_legend(),
        (),
        {"heuristic": "none"},
    )
