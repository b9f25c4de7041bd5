"""End-to-end suites: scenes decoded from frames, inferred and checked whole.

Scenes are small enough for the exhaustive oracle, so every suite here runs
without network access or external services.

"""
import random

from liras.domains import dkg
from liras.domains import resolve_bundle
from liras.stimulus import frames_to_states
from liras.stimulus import parse_stimulus
from liras.stimulus import state_to_frame
from liras.world import apply
from liras.world import valid_actions


# (bundle reference, builder options, first frame), each within the oracle's state cap
SCENES = {
    "dkg": (
        "dkg-single",
        {"gems": ["a", "b", "c"]},
        [
            "A . # B",
            ". . D_r .",
            "k_r @ # .",
            ". . # C",
        ],
    ),
    "m-dkg": (
        "m-dkg",
        {"gems": ["a", "b"]},
        [
            "A . . B",
            ". # . .",
            "@ . . &",
        ],
    ),
    "foodtruck": (
        "foodtruck",
        {},
        [
            "S+K . . . S+L",
            ". # # . .",
            ". . @ . .",
            ". . . . .",
        ],
    ),
    "astronaut": (
        "astronaut",
        {"cost_levels": [1.0, 4.0], "reward_levels": [1.0, 5.0]},
        [
            "s+F s r r",
            "s s+@ r r+W",
            "s s s r",
        ],
    ),
}

# the player fetches the blue key, then heads back toward the two locked doors
VARIANT_ROWS = [
    "A D_b . . .",
    "# # . @ k_b",
    "B D_r . . .",
]


def scene_bundle(name):
    reference, options, _ = SCENES[name]
    return resolve_bundle(reference, **options)


def scene(bundle, rows, stimulus_id="scene"):
    """A one-frame stimulus for ``rows``, its environment and decoded first state."""
    stimulus = parse_stimulus(
        {"id": stimulus_id, "grid_size": [len(rows), len(rows[0].split())], "frames": [rows]}
    )
    env = bundle.environment_for(stimulus)
    (start,) = frames_to_states(stimulus, env, bundle.legend, bundle.init)
    return stimulus, env, start


def named_scene(name):
    bundle = scene_bundle(name)
    return (bundle,) + scene(bundle, SCENES[name][2], name)


def rollout(env, start, steps, seed):
    """A random walk through valid actions."""
    rng = random.Random(seed)
    states = [start]
    actions = []
    for _ in range(steps):
        options = valid_actions(env, states[-1])
        if not options:
            break
        action = rng.choice(options)
        actions.append(action)
        states.append(apply(env, states[-1], action))
    return states, actions


def walk(env, start, steps):
    """Apply ``(name, *arguments)`` steps in order."""
    states = [start]
    for name, *arguments in steps:
        states.append(apply(env, states[-1], env.action(name, *arguments)))
    return states


def recorded(stimulus, env, states, legend):
    """``stimulus`` with its frames replaced by renderings of ``states``."""
    frames = tuple(
        state_to_frame(env, state, legend, annotate=env.is_multi_agent) for state in states
    )
    return stimulus._replace(frames=frames)


def dkg_variant(rule):
    if rule == "inverse":
        variant = dkg.DkgVariant.rotated(dkg.DEFAULT_COLORS)
    else:
        variant = dkg.DkgVariant(rule)
    return dkg.build_dkg(variant, gems=["a", "b"])
