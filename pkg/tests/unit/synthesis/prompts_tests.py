import json
import unittest

from liras.synthesis import prompts


class LoadTemplateTests(unittest.TestCase):
    def test_slots_match_the_contract(self):
        for template_id, slots in prompts.TEMPLATE_SLOTS.items():
            with self.subTest(template=template_id):
                template = prompts.load_template(template_id)
                self.assertEqual(template.id, template_id)
                self.assertEqual(template.slots, slots)

    def test_cached(self):
        self.assertIs(prompts.load_template("env"), prompts.load_template("env"))

    def test_unknown_id(self):
        with self.assertRaises(prompts.TemplateError) as cm:
            prompts.load_template("summary")
        self.assertEqual(cm.exception.template_id, "summary")

    def test_edited_template_is_rejected(self):
        with self.assertRaises(prompts.TemplateError):
            prompts.PromptTemplate("env", "Describe <<description>>.").check()
        with self.assertRaises(prompts.TemplateError):
            prompts.PromptTemplate(
                "env", "<<description>> <<objects>> <<image>>"
            ).check()


class RenderTests(unittest.TestCase):
    def test_fills_every_slot(self):
        text = prompts.load_template("augment").render(
            description="A boy looks for balls.", grid="3 by 4", actions="pickup, up-white"
        )
        self.assertTrue(text.startswith("A boy looks for balls."))
        self.assertIn("a grid of 3 by 4 cells", text)
        self.assertIn("pickup, up-white.", text)
        self.assertNotIn("<<", text)

    def test_values_must_match_slots(self):
        template = prompts.load_template("env")
        with self.assertRaises(prompts.TemplateError):
            template.render(description="d")
        with self.assertRaises(prompts.TemplateError):
            template.render(description="d", objects="{}", grid="1 by 1")

    def test_values_are_not_rescanned(self):
        text = prompts.load_template("env").render(description="<<objects>>", objects="{}")
        self.assertIn("<<objects>>", text)


class FormatObjectsTests(unittest.TestCase):
    def test_lists(self):
        text = prompts.format_objects({"agent": ("boy",), "generic_objects": ["plate"]})
        self.assertEqual(json.loads(text), {"agent": ["boy"], "generic_objects": ["plate"]})
