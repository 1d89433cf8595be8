"""Domain model for generated programming exams.

Holds the question taxonomy (3 kinds, 19 concrete question types), the
5-level difficulty scale, exam specifications, and the parsed question
record with its answer-key variants and curation state machine.

All types here are immutable value objects; anything that "changes" a
question produces a new record (the bank owns persistence).
"""

from __future__ import annotations

import hashlib
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping, Optional, Union


class QuestionKind(Enum):
    MULTIPLE_CHOICE = "MultipleChoice"
    SHORT_ANSWER = "ShortAnswer"
    ESSAY = "Essay"


class QuestionType(Enum):
    # Multiple-choice (10)
    OUTPUT_OR_ERROR_SELECTION = "OutputOrErrorSelection"
    MULTI_CORRECT_BEHAVIOR = "MultiCorrectBehavior"
    STEP_ORDERING = "StepOrdering"
    FILL_IN_BLANK_CHOICE = "FillInBlankChoice"
    ALGORITHM_SELECTION = "AlgorithmSelection"
    TERM_DEFINITION_MATCHING = "TermDefinitionMatching"
    PROGRAM_ASSEMBLY = "ProgramAssembly"
    OUTPUT_CAUSE_ANALYSIS = "OutputCauseAnalysis"
    BEHAVIOR_DESCRIPTION_MATCH = "BehaviorDescriptionMatch"
    MODIFICATION_PREDICTION = "ModificationPrediction"
    # Short-answer (6)
    PREDICT_OUTPUT = "PredictOutput"
    FILL_MISSING_CODE = "FillMissingCode"
    DATA_DRIVEN_COMPLETION = "DataDrivenCompletion"
    CODE_FROM_OUTPUT = "CodeFromOutput"
    CODE_FROM_CONDITIONS = "CodeFromConditions"
    MULTI_FUNCTION_PROGRAM = "MultiFunctionProgram"
    # Essay (3)
    TERM_EXPLANATION = "TermExplanation"
    ERROR_CAUSE_ANALYSIS = "ErrorCauseAnalysis"
    CODE_IMPROVEMENT = "CodeImprovement"

    @property
    def kind(self) -> QuestionKind:
        return _TYPE_KIND[self]

    @property
    def description(self) -> str:
        return _TYPE_DESCRIPTION[self]


# Canonical one-line descriptions, in template order per kind.
_MCQ_TYPES: list[tuple[QuestionType, str]] = [
    (QuestionType.OUTPUT_OR_ERROR_SELECTION,
     "Select the correct answer related to the execution result or the cause of an error in a given code snippet"),
    (QuestionType.MULTI_CORRECT_BEHAVIOR,
     "Choose multiple correct answers related to the behavior or execution result of a code snippet"),
    (QuestionType.STEP_ORDERING,
     "Arrange code snippets or algorithm steps in the correct execution sequence"),
    (QuestionType.FILL_IN_BLANK_CHOICE,
     "Fill in the blank with appropriate keywords or function names from the given options"),
    (QuestionType.ALGORITHM_SELECTION,
     "Select the most suitable algorithm or programming approach for a given problem scenario"),
    (QuestionType.TERM_DEFINITION_MATCHING,
     "Match programming terms with their definitions"),
    (QuestionType.PROGRAM_ASSEMBLY,
     "Select the correct combination of code snippets or options to create a valid program"),
    (QuestionType.OUTPUT_CAUSE_ANALYSIS,
     "Analyze the output of a code snippet and identify the cause of the result"),
    (QuestionType.BEHAVIOR_DESCRIPTION_MATCH,
     "Select the explanation that matches the behavior or definition of a code snippet or algorithm"),
    (QuestionType.MODIFICATION_PREDICTION,
     "Predict the result of modifying or replacing parts of a code snippet"),
]

_SHORT_ANSWER_TYPES: list[tuple[QuestionType, str]] = [
    (QuestionType.PREDICT_OUTPUT,
     "Predict the output of the provided code"),
    (QuestionType.FILL_MISSING_CODE,
     "Fill in the missing parts of the program or complete the entire code"),
    (QuestionType.DATA_DRIVEN_COMPLETION,
     "Analyze the provided table or graph and complete the missing parts of the program or complete the entire code"),
    (QuestionType.CODE_FROM_OUTPUT,
     "Generate code to match a given output"),
    (QuestionType.CODE_FROM_CONDITIONS,
     "Write code based on detailed instructions and conditions provided"),
    (QuestionType.MULTI_FUNCTION_PROGRAM,
     "Create complete programs with multiple functions addressing various requirements"),
]

_ESSAY_TYPES: list[tuple[QuestionType, str]] = [
    (QuestionType.TERM_EXPLANATION,
     "Explain specific programming terms"),
    (QuestionType.ERROR_CAUSE_ANALYSIS,
     "Analyze the cause of errors in provided code and explain"),
    (QuestionType.CODE_IMPROVEMENT,
     "Identify problems in given code and propose improvements"),
]

_KIND_TYPES: dict[QuestionKind, list[QuestionType]] = {
    QuestionKind.MULTIPLE_CHOICE: [t for t, _ in _MCQ_TYPES],
    QuestionKind.SHORT_ANSWER: [t for t, _ in _SHORT_ANSWER_TYPES],
    QuestionKind.ESSAY: [t for t, _ in _ESSAY_TYPES],
}

_TYPE_KIND: dict[QuestionType, QuestionKind] = {
    t: kind for kind, types in _KIND_TYPES.items() for t in types
}

_TYPE_DESCRIPTION: dict[QuestionType, str] = {
    t: desc for group in (_MCQ_TYPES, _SHORT_ANSWER_TYPES, _ESSAY_TYPES) for t, desc in group
}


def question_types_for(kind: QuestionKind) -> list[QuestionType]:
    """All question types owned by `kind`, in template listing order."""
    return list(_KIND_TYPES[kind])


DIFFICULTY_LEVELS = (1, 2, 3, 4, 5)

# Default #Question Criteria lines shared by all three templates.
DEFAULT_CRITERIA = (
    "Single-topic questions",
    "Questions integrating multiple topics",
    "Questions assessing creativity and problem-solving skills",
)


def format_difficulty(level: int) -> str:
    """Render a difficulty level as its n/5 badge."""
    return f"{level}/5"


def full_distribution(counts: Mapping[int, int]) -> dict[int, int]:
    """Normalize a partial level->count mapping so all five levels are present.

    Raises ValueError on levels outside 1..5 or negative counts.
    """
    out = {level: 0 for level in DIFFICULTY_LEVELS}
    for level, count in counts.items():
        level = int(level)
        if level not in out:
            raise ValueError(f"difficulty level out of range: {level}")
        if count < 0:
            raise ValueError(f"negative count for level {level}: {count}")
        out[level] = int(count)
    return out


@dataclass(frozen=True)
class SpecError:
    code: str
    message: str


@dataclass(frozen=True)
class ExamSpec:
    """Declarative description of one exam to generate (single kind)."""

    kind: QuestionKind
    target_language: str
    scope_topics: tuple[str, ...]
    total: int
    distribution: Mapping[int, int]
    enabled_types: tuple[QuestionType, ...]
    criteria: tuple[str, ...] = DEFAULT_CRITERIA
    role_noun: str = "expert"
    few_shot_examples: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scope_topics", tuple(self.scope_topics))
        object.__setattr__(self, "distribution", full_distribution(self.distribution))
        object.__setattr__(self, "enabled_types", tuple(self.enabled_types))
        object.__setattr__(self, "criteria", tuple(self.criteria))
        if self.few_shot_examples is not None:
            object.__setattr__(self, "few_shot_examples", tuple(self.few_shot_examples))


def validate_spec(spec: ExamSpec) -> list[SpecError]:
    """Check all ExamSpec invariants; empty list means the spec is ok."""
    errors: list[SpecError] = []
    if not spec.scope_topics or all(not t.strip() for t in spec.scope_topics):
        errors.append(SpecError("EmptyScope", "scope_topics must contain at least one topic"))
    if spec.total < 1:
        errors.append(SpecError("BadTotal", f"total must be >= 1, got {spec.total}"))
    dist_sum = sum(spec.distribution.values())
    if dist_sum != spec.total:
        errors.append(SpecError(
            "DistributionMismatch",
            f"difficulty counts sum to {dist_sum} but total is {spec.total}",
        ))
    if not spec.enabled_types:
        errors.append(SpecError("EmptyTypes", "enabled_types must not be empty"))
    for qtype in spec.enabled_types:
        if qtype.kind is not spec.kind:
            errors.append(SpecError(
                "KindMismatch",
                f"question type {qtype.value} belongs to {qtype.kind.value}, spec kind is {spec.kind.value}",
            ))
    if not spec.target_language.strip():
        errors.append(SpecError("EmptyLanguage", "target_language must be non-empty"))
    return errors


class CurationStatus(Enum):
    DRAFT = "Draft"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"


# Accepted is terminal; Rejected may return to Draft when a regenerated
# item replaces it.
ALLOWED_TRANSITIONS: dict[CurationStatus, frozenset[CurationStatus]] = {
    CurationStatus.DRAFT: frozenset({CurationStatus.ACCEPTED, CurationStatus.REJECTED}),
    CurationStatus.REJECTED: frozenset({CurationStatus.DRAFT}),
    CurationStatus.ACCEPTED: frozenset(),
}


def can_transition(current: CurationStatus, new: CurationStatus) -> bool:
    return new in ALLOWED_TRANSITIONS[current]


@dataclass(frozen=True)
class CodeBlock:
    language_hint: str
    source: str


@dataclass(frozen=True)
class OptionItem:
    label: str
    text: str


@dataclass(frozen=True)
class SingleOption:
    label: str


@dataclass(frozen=True)
class MultiOption:
    labels: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", frozenset(self.labels))


@dataclass(frozen=True)
class TextAnswer:
    text: str


@dataclass(frozen=True)
class CodeAnswer:
    code: CodeBlock
    expected_behavior: Optional[str] = None


AnswerKey = Union[SingleOption, MultiOption, TextAnswer, CodeAnswer]


def prompt_digest(text: str) -> str:
    """Stable content hash used to key fixture responses and provenance."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Provenance:
    prompt_digest: str = ""
    model_id: str = ""
    provider: str = ""
    created_at: str = ""
    raw_span: Optional[tuple[int, int]] = None

    @staticmethod
    def now() -> str:
        return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class Question:
    """One parsed exam item.

    `difficulty` is None when the raw response never labeled the item;
    the validator reports that as an error. `qtype` is best-effort
    metadata and never validated against.
    """

    id: str
    ordinal: int
    kind: QuestionKind
    difficulty: Optional[int]
    stem: str
    answer: AnswerKey
    explanation: str = ""
    qtype: Optional[QuestionType] = None
    code_blocks: tuple[CodeBlock, ...] = ()
    options: tuple[OptionItem, ...] = ()
    status: CurationStatus = CurationStatus.DRAFT
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self) -> None:
        object.__setattr__(self, "code_blocks", tuple(self.code_blocks))
        object.__setattr__(self, "options", tuple(self.options))
        if self.difficulty is not None and self.difficulty not in DIFFICULTY_LEVELS:
            raise ValueError(f"difficulty out of range: {self.difficulty}")

    def with_status(self, status: CurationStatus) -> "Question":
        if not can_transition(self.status, status):
            raise IllegalTransition(
                f"cannot move question {self.id} from {self.status.value} to {status.value}")
        return replace(self, status=status)


class IllegalTransition(ValueError):
    """Raised on a curation-state change the state machine forbids."""


def new_question_id() -> str:
    return uuid.uuid4().hex


def answer_labels(answer: AnswerKey) -> frozenset[str]:
    """Option labels referenced by an answer; empty for text/code answers."""
    if isinstance(answer, SingleOption):
        return frozenset({answer.label})
    if isinstance(answer, MultiOption):
        return answer.labels
    return frozenset()


# --- canonical JSON (de)serialization -------------------------------------
#
# ExamSpec travels as a JSON document with difficulty keys "1".."5";
# questions use the same dict shape in the bank, the HTTP API and the
# JSON exam export.

def spec_to_dict(spec: ExamSpec) -> dict[str, Any]:
    return {
        "kind": spec.kind.value,
        "target_language": spec.target_language,
        "scope_topics": list(spec.scope_topics),
        "total": spec.total,
        "distribution": {str(level): spec.distribution[level] for level in DIFFICULTY_LEVELS},
        "enabled_types": [t.value for t in spec.enabled_types],
        "criteria": list(spec.criteria),
        "role_noun": spec.role_noun,
        "few_shot_examples": list(spec.few_shot_examples) if spec.few_shot_examples else None,
    }


def spec_from_dict(data: Mapping[str, Any]) -> ExamSpec:
    few_shot = data.get("few_shot_examples")
    return ExamSpec(
        kind=QuestionKind(data["kind"]),
        target_language=data["target_language"],
        scope_topics=tuple(data["scope_topics"]),
        total=int(data["total"]),
        distribution={int(k): int(v) for k, v in data["distribution"].items()},
        enabled_types=tuple(QuestionType(t) for t in data["enabled_types"]),
        criteria=tuple(data.get("criteria", DEFAULT_CRITERIA)),
        role_noun=data.get("role_noun", "expert"),
        few_shot_examples=tuple(few_shot) if few_shot else None,
    )


def answer_to_dict(answer: AnswerKey) -> dict[str, Any]:
    if isinstance(answer, SingleOption):
        return {"type": "single_option", "label": answer.label}
    if isinstance(answer, MultiOption):
        return {"type": "multi_option", "labels": sorted(answer.labels)}
    if isinstance(answer, TextAnswer):
        return {"type": "text", "text": answer.text}
    if isinstance(answer, CodeAnswer):
        return {
            "type": "code",
            "code": {"language_hint": answer.code.language_hint, "source": answer.code.source},
            "expected_behavior": answer.expected_behavior,
        }
    raise TypeError(f"unknown answer type: {answer!r}")


def answer_from_dict(data: Mapping[str, Any]) -> AnswerKey:
    atype = data["type"]
    if atype == "single_option":
        return SingleOption(label=data["label"])
    if atype == "multi_option":
        return MultiOption(labels=frozenset(data["labels"]))
    if atype == "text":
        return TextAnswer(text=data["text"])
    if atype == "code":
        code = data["code"]
        return CodeAnswer(
            code=CodeBlock(language_hint=code["language_hint"], source=code["source"]),
            expected_behavior=data.get("expected_behavior"),
        )
    raise ValueError(f"unknown answer type tag: {atype}")


def question_to_dict(question: Question) -> dict[str, Any]:
    return {
        "id": question.id,
        "ordinal": question.ordinal,
        "kind": question.kind.value,
        "qtype": question.qtype.value if question.qtype else None,
        "difficulty": question.difficulty,
        "stem": question.stem,
        "code_blocks": [
            {"language_hint": b.language_hint, "source": b.source} for b in question.code_blocks
        ],
        "options": [{"label": o.label, "text": o.text} for o in question.options],
        "answer": answer_to_dict(question.answer),
        "explanation": question.explanation,
        "status": question.status.value,
        "provenance": {
            "prompt_digest": question.provenance.prompt_digest,
            "model_id": question.provenance.model_id,
            "provider": question.provenance.provider,
            "created_at": question.provenance.created_at,
            "raw_span": list(question.provenance.raw_span) if question.provenance.raw_span else None,
        },
    }


def question_from_dict(data: Mapping[str, Any]) -> Question:
    prov = data.get("provenance") or {}
    raw_span = prov.get("raw_span")
    return Question(
        id=data["id"],
        ordinal=int(data["ordinal"]),
        kind=QuestionKind(data["kind"]),
        qtype=QuestionType(data["qtype"]) if data.get("qtype") else None,
        difficulty=data.get("difficulty"),
        stem=data["stem"],
        code_blocks=tuple(
            CodeBlock(language_hint=b["language_hint"], source=b["source"])
            for b in data.get("code_blocks", ())
        ),
        options=tuple(OptionItem(label=o["label"], text=o["text"]) for o in data.get("options", ())),
        answer=answer_from_dict(data["answer"]),
        explanation=data.get("explanation", ""),
        status=CurationStatus(data.get("status", "Draft")),
        provenance=Provenance(
            prompt_digest=prov.get("prompt_digest", ""),
            model_id=prov.get("model_id", ""),
            provider=prov.get("provider", ""),
            created_at=prov.get("created_at", ""),
            raw_span=tuple(raw_span) if raw_span else None,
        ),
    )


def content_key(question: Question) -> tuple:
    """Content fields used for round-trip equality.

    Identity, curation status and provenance are bank metadata and are
    deliberately excluded.
    """
    return (
        question.ordinal,
        question.kind,
        question.difficulty,
        question.stem,
        question.code_blocks,
        question.options,
        question.answer,
        question.explanation,
    )
