import os
import unittest
import warnings

from liras import pipeline
from liras.data import read_text
from liras.domains import builtin_names
from liras.domains import resolve_bundle
from liras.pddl import parse_domain
from liras.pddl import print_domain
from liras.stimulus import parse_stimulus
from liras.stimulus import states_to_frames
from liras.world import AmbiguousReconstructionWarning
from liras.world import reconstruct_action

from .. import data_path
from .. import read_data
from . import named_scene
from . import rollout
from . import SCENES


FIXTURE_DIRS = [data_path("stimuli"), data_path("dkg")]
ROLLOUTS_PER_SCENE = 250


def fixtures():
    for directory in FIXTURE_DIRS:
        yield from pipeline.stimulus_paths(directory)


class StimulusRoundTripTests(unittest.TestCase):
    def test_documents_reparse(self):
        for path in fixtures():
            with self.subTest(path=path):
                stimulus = pipeline.load_stimulus(path)
                self.assertEqual(parse_stimulus(stimulus.to_json()), stimulus)

    def test_decoded_states_render_the_same_frames(self):
        for path in fixtures():
            with self.subTest(path=path):
                stimulus = pipeline.load_stimulus(path)
                bundle = pipeline.bundle_for(stimulus, base_dir=os.path.dirname(path))
                prepared = pipeline.prepare(stimulus, bundle, pipeline.RunSettings())
                frames = states_to_frames(prepared.env, prepared.states, bundle.legend)
                self.assertEqual(
                    [frame.cells for frame in frames],
                    [frame.cells for frame in stimulus.frames],
                )


class ReconstructionTests(unittest.TestCase):
    def test_every_random_step_is_recovered(self):
        for name in SCENES:
            _, _, env, start = named_scene(name)
            for seed in range(ROLLOUTS_PER_SCENE):
                states, actions = rollout(env, start, 4, seed)
                for index, action in enumerate(actions):
                    with warnings.catch_warnings():
                        warnings.simplefilter("error", AmbiguousReconstructionWarning)
                        found = reconstruct_action(env, states[index], states[index + 1], index)
                    self.assertEqual(found, action, msg=f"{name} seed {seed} step {index}")


class DomainRoundTripTests(unittest.TestCase):
    def sources(self):
        yield "example.pddl", read_text("example.pddl")
        yield "corridor", read_data("corridor", "domain.pddl")
        for name in builtin_names():
            yield name, print_domain(resolve_bundle(name).domain)

    def test_print_parse_print(self):
        for name, text in self.sources():
            with self.subTest(domain=name):
                spec = parse_domain(text)
                printed = print_domain(spec)
                self.assertEqual(parse_domain(printed), spec)
                self.assertEqual(print_domain(parse_domain(printed)), printed)
