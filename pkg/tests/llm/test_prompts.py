"""Test the prompt template registry."""
import pytest

from optinsight.exceptions import MissingVar
from optinsight.llm.prompts import PromptRegistry, prompt_hash

TEMPLATES = [
    "classify_problem",
    "diagnose_issues",
    "diagnose_pos_neg",
    "diagnose_unretrieved",
    "formulate",
    "generate_insights",
    "generate_program",
    "merge_insights",
    "refine_conditions",
    "retrieve_condition",
    "retrieve_label",
    "self_debug",
    "self_explore",
]


def test_bundled_templates():
    """Test that every template used by the engine is shipped."""
    ids = PromptRegistry().ids()
    for template_id in TEMPLATES:
        assert template_id in ids


def test_required_vars():
    """Test that the placeholders of a template are found."""
    template = PromptRegistry().template("self_debug")
    assert template.required_vars == {
        "task_description",
        "program",
        "evidence",
    }


def test_render_with_insights():
    """Test that injected insights are quoted in the prompt."""
    registry = PromptRegistry()
    insight = {
        "id": 3,
        "condition": "Applies when 'makespan' appears.",
        "explanation": "Minimize the largest completion time.",
        "example": "",
    }
    text = registry.render(
        "formulate",
        {"task_description": "Schedule four jobs.", "insights": [insight]},
    )
    assert "Schedule four jobs." in text
    assert "Minimize the largest completion time." in text
    assert text.endswith("\n")
    plain = registry.render(
        "formulate",
        {"task_description": "Schedule four jobs.", "insights": []},
    )
    assert "Minimize the largest completion time." not in plain


def test_missing_var():
    """Test that a missing variable is reported by name."""
    with pytest.raises(MissingVar) as error:
        PromptRegistry().render("self_debug", {"task_description": "x"})
    assert error.value.template_id == "self_debug"
    assert error.value.name == "evidence"
    assert "evidence" in str(error.value)


def test_unknown_template():
    with pytest.raises(KeyError):
        PromptRegistry().template("write_poem")


def test_template_dir_override(tmp_path):
    """Test that a template directory takes precedence."""
    (tmp_path / "self_debug.j2").write_text(
        "Fix {{ program }} now.\n", encoding="utf-8"
    )
    (tmp_path / "greet.j2").write_text("Hello {{ name }}!", encoding="utf-8")
    registry = PromptRegistry(tmp_path)
    assert registry.render("self_debug", {"program": "x = 1"}) == (
        "Fix x = 1 now.\n"
    )
    assert registry.render("greet", {"name": "solver"}) == "Hello solver!\n"
    assert "formulate" in registry.ids()


def test_prompt_hash():
    """Test that the hash ignores line endings and trailing spaces."""
    assert prompt_hash("a  \r\nb\n\n") == prompt_hash("a\nb")
    assert prompt_hash("a\nb") != prompt_hash("a b")
    assert len(prompt_hash("")) == 64
