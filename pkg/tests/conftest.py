"""Shared fixtures: figure transcriptions, shipped specs and seeded
random generators for property-style tests."""

from __future__ import annotations

import json
import random
import string
from pathlib import Path

import pytest

from examgen.taxonomy import (
    CodeBlock,
    CurationStatus,
    ExamSpec,
    MultiOption,
    OptionItem,
    Provenance,
    Question,
    QuestionKind,
    SingleOption,
    TextAnswer,
    CodeAnswer,
    new_question_id,
    question_types_for,
    spec_from_dict,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).resolve().parent / "fixtures"
FIGURES = FIXTURES / "figures"
SPECS_DIR = REPO_ROOT / "specs"


def load_spec(name: str) -> ExamSpec:
    with open(SPECS_DIR / name, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def figure_text(name: str) -> str:
    return (FIGURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def fig2_spec() -> ExamSpec:
    return load_spec("fig2_multiple_choice_python.json")


@pytest.fixture(scope="session")
def fig3_spec() -> ExamSpec:
    return load_spec("fig3_short_answer_python.json")


@pytest.fixture(scope="session")
def fig4_spec() -> ExamSpec:
    return load_spec("fig4_essay_python.json")


# Figure fixture name -> the spec its parse runs under.
FIGURE_SPECS = {
    "fig5_mcq_python.md": "fig2_multiple_choice_python.json",
    "fig6_short_answer_python.md": "fig3_short_answer_python.json",
    "fig7_essay_python.md": "fig4_essay_python.json",
    "fig8_mcq_cpp.md": "fig2_multiple_choice_python.json",
    "fig9_mcq_java.md": "fig2_multiple_choice_python.json",
}


# --- seeded random generators ----------------------------------------------

_WORDS = (
    "loop list tuple class value index slice method object string range "
    "filter lambda yield module parser output branch symbol record buffer"
).split()


def random_sentence(rng: random.Random, n_words: int = 6) -> str:
    words = [rng.choice(_WORDS) for _ in range(n_words)]
    return (" ".join(words)).capitalize() + "?"


def random_code(rng: random.Random) -> CodeBlock:
    lines = [
        f"x_{i} = {rng.randint(0, 99)}" for i in range(rng.randint(1, 4))
    ]
    if rng.random() < 0.4:
        lines.append(f"print(x_0 + {rng.randint(1, 9)})")
    if rng.random() < 0.3:
        lines.append("")  # interior blank line must survive round trips
        lines.append("y = [1, 2]")
    return CodeBlock(language_hint=rng.choice(["python", "cpp", ""]),
                     source="\n".join(lines))


def random_question(rng: random.Random, ordinal: int,
                    kind: QuestionKind | None = None) -> Question:
    kind = kind or rng.choice(list(QuestionKind))
    code_blocks = tuple(random_code(rng) for _ in range(rng.randint(0, 2)))
    options: tuple[OptionItem, ...] = ()
    if kind is QuestionKind.MULTIPLE_CHOICE:
        n = rng.randint(2, 4)
        style = rng.choice(["letter", "number"])
        labels = (list(string.ascii_lowercase[:n]) if style == "letter"
                  else [str(i + 1) for i in range(n)])
        options = tuple(
            OptionItem(label=label, text=random_sentence(rng, 3).rstrip("?"))
            for label in labels)
        if rng.random() < 0.25 and n >= 3:
            answer = MultiOption(labels=frozenset(rng.sample(labels, 2)))
        else:
            answer = SingleOption(label=rng.choice(labels))
    elif rng.random() < 0.5:
        answer = TextAnswer(text=random_sentence(rng, 4))
    else:
        answer = CodeAnswer(
            code=random_code(rng),
            expected_behavior=random_sentence(rng, 4) if rng.random() < 0.5 else None)
    return Question(
        id=new_question_id(),
        ordinal=ordinal,
        kind=kind,
        difficulty=rng.randint(1, 5),
        stem=random_sentence(rng, rng.randint(4, 9)),
        code_blocks=code_blocks,
        options=options,
        answer=answer,
        explanation=random_sentence(rng, rng.randint(3, 8)),
        status=CurationStatus.ACCEPTED,
        provenance=Provenance(),
    )


def random_valid_spec(rng: random.Random) -> ExamSpec:
    kind = rng.choice(list(QuestionKind))
    counts = {level: rng.randint(0, 4) for level in range(1, 6)}
    if sum(counts.values()) == 0:
        counts[rng.randint(1, 5)] = 1
    all_types = question_types_for(kind)
    enabled = tuple(rng.sample(all_types, rng.randint(1, len(all_types))))
    return ExamSpec(
        kind=kind,
        target_language=rng.choice(["Python", "C++", "Java"]),
        scope_topics=tuple(random_sentence(rng, 3).rstrip("?")
                           for _ in range(rng.randint(1, 4))),
        total=sum(counts.values()),
        distribution=counts,
        enabled_types=enabled,
    )
