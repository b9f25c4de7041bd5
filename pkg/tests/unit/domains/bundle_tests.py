import json
import os
import shutil
import tempfile
import unittest

from liras import domains
from liras.agent import CostProfile
from liras.domains.example import build_example
from liras.lib import LirasError
from liras.pddl.domain import GridDims
from liras.pddl.domain import ObjectEntry
from liras.pddl.domain import ObjectSet
from liras.stimulus import parse_stimulus

from ... import data_path


class BundleFilesTests(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def copy_corridor(self):
        target = os.path.join(self.tmpdir, "corridor")
        shutil.copytree(data_path("corridor"), target)
        return target

    def rewrite(self, directory, name, update):
        path = os.path.join(directory, name)
        with open(path) as f:
            document = json.load(f)
        update(document)
        with open(path, "w") as f:
            json.dump(document, f)

    def test_export_then_load(self):
        bundles = (
            build_example(),
            domains.resolve_bundle("dkg-inverse"),
            domains.resolve_bundle("astronaut", cost_levels=[1.0, 4.0]),
        )
        for bundle in bundles:
            with self.subTest(bundle=bundle.name):
                directory = os.path.join(self.tmpdir, bundle.name)
                paths = domains.export_bundle(bundle, directory)
                self.assertEqual(sorted(paths), sorted(domains.BUNDLE_FILES))
                self.assertEqual(domains.load_bundle(directory), bundle)

    def test_hand_written_bundle(self):
        bundle = domains.load_bundle(data_path("corridor"))
        self.assertEqual(bundle.name, "corridor")
        self.assertEqual(bundle.grid, GridDims(1, 5))
        self.assertEqual([entry.name for entry in bundle.objects], ["gem1", "gem2"])
        self.assertEqual(bundle.hints, {"heuristic": "manhattan"})

    def test_missing_files(self):
        with self.assertRaises(domains.BundleError) as cm:
            domains.load_bundle(os.path.join(self.tmpdir, "nowhere"))
        self.assertEqual(cm.exception.bundle, "nowhere")
        self.assertIn("bundle.json", str(cm.exception))

        directory = self.copy_corridor()
        os.remove(os.path.join(directory, "domain.pddl"))
        with self.assertRaises(domains.BundleError) as cm:
            domains.load_bundle(directory)
        self.assertIn("domain.pddl", str(cm.exception))

    def test_unsupported_version(self):
        directory = self.copy_corridor()
        self.rewrite(directory, "bundle.json", lambda doc: doc.update(version=2))
        with self.assertRaises(domains.BundleError):
            domains.load_bundle(directory)

    def test_not_json(self):
        directory = self.copy_corridor()
        with open(os.path.join(directory, "legend.json"), "w") as f:
            f.write("{")
        with self.assertRaises(domains.BundleError) as cm:
            domains.load_bundle(directory)
        self.assertIn("legend.json is not valid JSON", str(cm.exception))

    def test_costs_must_price_every_action(self):
        directory = self.copy_corridor()
        self.rewrite(directory, "config.json", lambda doc: doc["costs"][0].pop("grab"))
        with self.assertRaises(domains.BundleError) as cm:
            domains.load_bundle(directory)
        self.assertIn("missing ['grab']", str(cm.exception))


class CheckBundleTests(unittest.TestCase):
    def test_unknown_cost_key(self):
        bundle = build_example()
        costs = bundle.config.costs[0].costs + (("teleport", 1.0),)
        config = bundle.config._replace(costs=(CostProfile(0, costs),))
        with self.assertRaises(domains.BundleError) as cm:
            domains.check_bundle(bundle._replace(config=config))
        self.assertIn("teleport", str(cm.exception))

    def test_template_must_ground(self):
        bundle = build_example()._replace(objects=ObjectSet((ObjectEntry("rock1", "rock"),)))
        with self.assertRaises(domains.BundleError) as cm:
            domains.check_bundle(bundle)
        self.assertIn("unknown type 'rock'", str(cm.exception))


class StimulusGroundingTests(unittest.TestCase):
    def setUp(self):
        self.bundle = domains.load_bundle(data_path("corridor"))
        self.stimulus = parse_stimulus(data_path("stimuli", "hallway_left.json"))

    def test_environment_for(self):
        env = self.bundle.environment_for(self.stimulus)
        self.assertEqual(env.grid, GridDims(1, 5))
        self.assertEqual(env.type_of("gem2"), "gem")

    def test_config_for(self):
        self.assertIs(self.bundle.config_for(self.stimulus), self.bundle.config)
        wider = self.stimulus._replace(grid=GridDims(1, 7))
        self.assertEqual(self.bundle.config_for(wider).grid, GridDims(1, 7))


class ResolveBundleTests(unittest.TestCase):
    def test_builtin_names(self):
        self.assertEqual(
            domains.builtin_names(),
            (
                "astronaut",
                "dkg-double",
                "dkg-inverse",
                "dkg-reuse",
                "dkg-single",
                "example",
                "foodtruck",
                "m-dkg",
            ),
        )

    def test_directory(self):
        self.assertEqual(domains.resolve_bundle(data_path("corridor")).name, "corridor")

    def test_grid_option(self):
        self.assertEqual(domains.resolve_bundle("foodtruck", grid=(3, 4)).grid, GridDims(3, 4))
        with self.assertRaises(LirasError):
            domains.resolve_bundle("foodtruck", grid=[0, 4])
        with self.assertRaises(LirasError):
            domains.resolve_bundle("foodtruck", grid=7)
        self.assertEqual(domains.resolve_bundle("example", grid=[4, 4]).grid, GridDims(4, 4))
        with self.assertRaises(LirasError):
            domains.resolve_bundle("example", colors=["blue"])

    def test_unknown(self):
        with self.assertRaises(LirasError) as cm:
            domains.resolve_bundle("maze")
        self.assertIn("dkg-single", str(cm.exception))


class ExampleBundleTests(unittest.TestCase):
    def test_example(self):
        bundle = build_example()
        self.assertEqual(bundle.name, "example")
        self.assertTrue(bundle.config.partial)
        self.assertEqual(bundle.config.belief_config.belief_object, "ball")
        self.assertEqual(bundle.config.query, ("belief", "goal", "cost"))
        self.assertEqual(len(bundle.config.costs), 3)
        self.assertEqual(bundle.legend.entry("P_s").facts, ("(isplateshape $ square)",))
        env = bundle.ground_template()
        self.assertEqual(env.type_of("cabinet1"), "cabinet")
