import random
import re
from dataclasses import replace

import pytest

from examgen.prompting import (
    SECTION_ORDER,
    FewShotTooSmall,
    InvalidSpecError,
    inject_few_shot,
    render_prompt,
    render_regeneration_prompt,
)
from examgen.taxonomy import QuestionKind

from conftest import figure_text, random_question, random_valid_spec


def normalize_line(line: str) -> str:
    return " ".join(line.split())


def figure_lines(name: str) -> list[str]:
    return [normalize_line(l) for l in figure_text(name).splitlines() if l.strip()]


@pytest.mark.parametrize("spec_fixture,figure", [
    ("fig2_spec", "fig2_template.txt"),
    ("fig3_spec", "fig3_template.txt"),
    ("fig4_spec", "fig4_template.txt"),
])
def test_golden_templates_line_for_line(request, spec_fixture, figure):
    spec = request.getfixturevalue(spec_fixture)
    rendered = [normalize_line(l) for l in render_prompt(spec).text.splitlines() if l.strip()]
    expected = figure_lines(figure)
    # every template line present, in order
    assert rendered == expected


def test_fig2_has_mcq_only_lines(fig2_spec, fig3_spec, fig4_spec):
    mcq = render_prompt(fig2_spec).text
    assert "- 1/5: [3 questions]" in mcq
    assert "Deliver all questions at once" in mcq
    for other in (fig3_spec, fig4_spec):
        assert "Deliver all questions at once" not in render_prompt(other).text


def test_fig4_uniform_distribution_lines(fig4_spec):
    text = render_prompt(fig4_spec).text
    count_lines = [l for l in text.splitlines() if re.match(r"\s+- \d/5:", l)]
    assert len(count_lines) == 5
    assert all(l.endswith("[1 question]") for l in count_lines)


def test_render_rejects_invalid_spec(fig2_spec):
    bad = replace(fig2_spec, scope_topics=())
    with pytest.raises(InvalidSpecError):
        render_prompt(bad)


def test_determinism(fig2_spec):
    a = render_prompt(fig2_spec)
    b = render_prompt(fig2_spec)
    assert a.text == b.text
    assert a.digest == b.digest


def test_section_order_invariant():
    rng = random.Random(42)
    for _ in range(30):
        spec = random_valid_spec(rng)
        prompt = render_prompt(spec)
        positions = [prompt.text.index(header + "\n") for header in SECTION_ORDER]
        assert positions == sorted(positions)
        for header, (start, end) in prompt.section_spans.items():
            assert prompt.text[start:].startswith(header)


def test_count_conservation_over_random_specs():
    rng = random.Random(99)
    for _ in range(100):
        spec = random_valid_spec(rng)
        text = render_prompt(spec).text
        counts = [int(m) for m in re.findall(r"- \d/5: \[(\d+) questions?\]", text)]
        assert sum(counts) == spec.total
        # zero-count levels never render
        assert 0 not in counts


def test_zero_count_levels_omitted(fig2_spec):
    spec = replace(fig2_spec, total=5, distribution={1: 5})
    text = render_prompt(spec).text
    assert "- 1/5: [5 questions]" in text
    assert "2/5" not in text.split("#Question Criteria")[0].split("distribution:")[1]


def test_singular_plural_bracket(fig2_spec):
    spec = replace(fig2_spec, total=1, distribution={3: 1})
    text = render_prompt(spec).text
    assert "- Number of questions: [1 question]" in text
    assert "- 3/5: [1 question]" in text


def test_inject_few_shot_appends_in_order(fig2_spec):
    prompt = render_prompt(fig2_spec)
    examples = ["Example question one?", "Example question two?"]
    out = inject_few_shot(prompt, examples)
    assert out.text.startswith(prompt.text)
    assert "#Examples" in out.text
    assert out.text.index(examples[0]) < out.text.index(examples[1])
    assert out.digest != prompt.digest


def test_inject_few_shot_empty_is_identity(fig2_spec):
    prompt = render_prompt(fig2_spec)
    out = inject_few_shot(prompt, [])
    assert out.text == prompt.text
    assert out.digest == prompt.digest


def test_inject_few_shot_rejects_single_example(fig2_spec):
    prompt = render_prompt(fig2_spec)
    with pytest.raises(FewShotTooSmall):
        inject_few_shot(prompt, ["only one"])


def test_regeneration_prompt_matches_hand_narrowed_spec(fig2_spec):
    rng = random.Random(3)
    rejected = replace(
        random_question(rng, 7, QuestionKind.MULTIPLE_CHOICE), difficulty=3)
    narrowed = replace(fig2_spec, total=1, distribution={3: 1}, few_shot_examples=None)
    expected = render_prompt(narrowed)

    out = render_regeneration_prompt(fig2_spec, rejected, [])
    assert out.text == expected.text
    assert "- Number of questions: [1 question]" in out.text
    assert "- 3/5: [1 question]" in out.text
    assert "1/5:" not in out.text.replace("- 3/5:", "")


def test_regeneration_prompt_lists_existing_stems(fig2_spec):
    rng = random.Random(4)
    rejected = replace(
        random_question(rng, 2, QuestionKind.MULTIPLE_CHOICE), difficulty=5)
    stems = ["What does len do?", "Which loop runs twice?"]
    out = render_regeneration_prompt(fig2_spec, rejected, stems)
    assert "#Constraints" in out.text
    for stem in stems:
        assert stem in out.text
    base = render_regeneration_prompt(fig2_spec, rejected, [])
    assert out.text.startswith(base.text)


def test_regeneration_rejects_kind_mismatch(fig2_spec):
    rng = random.Random(5)
    rejected = random_question(rng, 1, QuestionKind.ESSAY)
    with pytest.raises(InvalidSpecError):
        render_regeneration_prompt(fig2_spec, rejected, [])
