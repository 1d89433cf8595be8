"""Rendering of exam specs into the five-section structured prompt.

The prompt always carries the sections #Directive, #Scope,
#Basic Information, #Question Criteria and #Question Types in that
order; an optional #Examples block (few-shot) and, for regeneration
prompts, a #Constraints block are appended after them.

Rendering is deterministic: the same spec always yields the same text
and the same digest.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .taxonomy import (
    DIFFICULTY_LEVELS,
    ExamSpec,
    Question,
    QuestionKind,
    SpecError,
    prompt_digest,
    validate_spec,
)

SECTION_ORDER = (
    "#Directive",
    "#Scope",
    "#Basic Information",
    "#Question Criteria",
    "#Question Types",
)

# Display labels used by the question-type line of #Basic Information.
_KIND_LABEL = {
    QuestionKind.MULTIPLE_CHOICE: "Multiple-choice",
    QuestionKind.SHORT_ANSWER: "short-answer",
    QuestionKind.ESSAY: "Essay",
}

# The short-answer template words its second directive line slightly
# differently ("template below") and titles its distribution block
# without the "5-level" qualifier; both are kind-conditional, like the
# MCQ-only "Deliver all questions at once" line.
_TEMPLATE_LINE = {
    QuestionKind.MULTIPLE_CHOICE: "Please refer to the template and create high-quality questions.",
    QuestionKind.SHORT_ANSWER: "Please refer to the template below and create high-quality questions.",
    QuestionKind.ESSAY: "Please refer to the template and create high-quality questions.",
}

_DISTRIBUTION_HEADING = {
    QuestionKind.MULTIPLE_CHOICE: "5-level difficulty distribution:",
    QuestionKind.SHORT_ANSWER: "Difficulty distribution:",
    QuestionKind.ESSAY: "Difficulty distribution:",
}


class InvalidSpecError(ValueError):
    """Raised when rendering is asked for a spec that fails validation."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{e.code}: {e.message}" for e in self.errors))


class FewShotTooSmall(ValueError):
    """Raised when exactly one few-shot example is supplied."""


@dataclass(frozen=True)
class PromptText:
    text: str
    digest: str
    section_spans: dict[str, tuple[int, int]]


def _pluralize(count: int) -> str:
    return "question" if count == 1 else "questions"


def _build(sections: list[tuple[str, list[str]]]) -> PromptText:
    """Join (header, body-lines) sections into a PromptText with spans."""
    parts: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    pos = 0
    for i, (header, lines) in enumerate(sections):
        chunk = "\n".join([header, *lines])
        if i < len(sections) - 1:
            chunk += "\n\n"
        spans[header] = (pos, pos + len(chunk.rstrip("\n")))
        parts.append(chunk)
        pos += len(chunk)
    text = "".join(parts)
    return PromptText(text=text, digest=prompt_digest(text), section_spans=spans)


def render_prompt(spec: ExamSpec) -> PromptText:
    """Render a validated spec into the structured prompt text."""
    errors = validate_spec(spec)
    if errors:
        raise InvalidSpecError(errors)

    directive = [
        f"You are a [{spec.target_language}] {spec.role_noun} responsible for creating exam questions.",
        _TEMPLATE_LINE[spec.kind],
    ]

    scope = [f"- {topic}" for topic in spec.scope_topics]

    basic = [
        f"- Question type: [{_KIND_LABEL[spec.kind]}]",
        f"- Programming language: [{spec.target_language}]",
        f"- Number of questions: [{spec.total} {_pluralize(spec.total)}]",
        f"- {_DISTRIBUTION_HEADING[spec.kind]}",
    ]
    for level in DIFFICULTY_LEVELS:
        count = spec.distribution[level]
        if count > 0:
            basic.append(f"  - {level}/5: [{count} {_pluralize(count)}]")
    basic.append("- Provide questions, answers, and explanations")
    basic.append("- Specify difficulty for each question")
    if spec.kind is QuestionKind.MULTIPLE_CHOICE:
        basic.append("- Deliver all questions at once")

    criteria = [f"- {line}" for line in spec.criteria]
    qtypes = [f"- {qtype.description}" for qtype in spec.enabled_types]

    sections = [
        ("#Directive", directive),
        ("#Scope", scope),
        ("#Basic Information", basic),
        ("#Question Criteria", criteria),
        ("#Question Types", qtypes),
    ]
    return _build(sections)


def inject_few_shot(prompt: PromptText, examples: list[str]) -> PromptText:
    """Append a #Examples section holding the examples verbatim.

    An empty list is a no-op; a single example is rejected because one
    example is one-shot, not few-shot.
    """
    if not examples:
        return prompt
    if len(examples) == 1:
        raise FewShotTooSmall("few-shot prompting needs at least two examples")
    body = "\n\n".join(examples)
    appendix = f"\n\n#Examples\n{body}"
    text = prompt.text + appendix
    spans = dict(prompt.section_spans)
    spans["#Examples"] = (len(prompt.text) + 2, len(text))
    return PromptText(text=text, digest=prompt_digest(text), section_spans=spans)


def render_regeneration_prompt(
    spec: ExamSpec,
    rejected: Question,
    existing_stems: list[str],
) -> PromptText:
    """Prompt for regenerating one rejected question.

    The spec is narrowed to a single question at the rejected item's
    difficulty; stems already present in the exam are listed in an
    appended #Constraints section so the model does not repeat them.
    """
    if rejected.kind is not spec.kind:
        raise InvalidSpecError([SpecError(
            "KindMismatch",
            f"rejected question kind {rejected.kind.value} != spec kind {spec.kind.value}",
        )])
    difficulty = rejected.difficulty if rejected.difficulty is not None else 3
    narrowed = replace(
        spec,
        total=1,
        distribution={difficulty: 1},
        few_shot_examples=None,
    )
    prompt = render_prompt(narrowed)
    if not existing_stems:
        return prompt
    lines = ["Do not duplicate any of the following existing question stems:"]
    lines += [f"- {' '.join(stem.split())}" for stem in existing_stems]
    appendix = "\n\n#Constraints\n" + "\n".join(lines)
    text = prompt.text + appendix
    spans = dict(prompt.section_spans)
    spans["#Constraints"] = (len(prompt.text) + 2, len(text))
    return PromptText(text=text, digest=prompt_digest(text), section_spans=spans)
