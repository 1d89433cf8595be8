"""Tolerant parser for raw model output.

Model responses vary: question headings appear as "18. **Question:**",
"Q2." or "1. Question:", options as "a) ..." or "1. ...", answers inline
or as fenced code, difficulty as a per-question tag or an enclosing
"Level n/5" heading. The parser recognizes the union of these shapes
and reports everything else as diagnostics instead of failing; it never
raises on arbitrary input.

Bold markers and bullet ornaments are presentation, not structure, and
are ignored when matching field markers. Fenced code is preserved
byte-exactly (minus the fence lines themselves).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .taxonomy import (
    AnswerKey,
    CodeAnswer,
    CodeBlock,
    ExamSpec,
    MultiOption,
    OptionItem,
    Provenance,
    Question,
    QuestionKind,
    SingleOption,
    TextAnswer,
    new_question_id,
)


class Severity(Enum):
    WARNING = "Warning"
    ERROR = "Error"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: tuple[int, int]


@dataclass
class ParseResult:
    questions: list[Question] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]


class AnswerMissing(ValueError):
    """No Answer marker (or an empty answer section) in a question block."""


_SMART_QUOTES = str.maketrans({"“": '"', "”": '"', "‘": "'", "’": "'"})

# Language words accepted when a fence has no info string but opens with
# a bare language name on its own line (seen in copy-pasted output).
_BARE_LANGUAGE_WORDS = {
    "python", "cpp", "c++", "java", "javascript", "js", "c", "csharp", "ruby", "go", "rust",
}

_RE_FENCE_OPEN = re.compile(r"^\s*```(.*)$")
_RE_FENCE_CLOSE = re.compile(r"^\s*```\s*$")

# the colon is mandatory: "3. Question marks are rare" is an option
# line or stem text, not a heading
_RE_HEAD_NUMBERED = re.compile(
    r"^\s*(?:\*\*)?(\d{1,3})[.)]\s*(?:\*\*)?\s*Question\s*:\s*(?:\*\*)?\s*(.*)$",
    re.IGNORECASE,
)
_RE_HEAD_Q = re.compile(r"^\s*(?:\*\*)?Q(\d{1,3})[.):]\s*(?:\*\*)?\s*(.*)$")
_RE_HEAD_EXPORT = re.compile(
    r"^\s*\*\*Question\s+(\d{1,3})\s*(?:\((\d)\s*/\s*5\))?\*\*\s*(.*)$",
    re.IGNORECASE,
)
_RE_LEVEL_HEADING = re.compile(
    r"^\s*(?:\*\*)?\s*Level\s+(\d)\s*/\s*5\s*(?:\([^)]*\))?\s*(?:\*\*)?\s*$",
    re.IGNORECASE,
)
_RE_DIFFICULTY_TAG = re.compile(
    r"^\s*[-•]?\s*(?:\*\*)?\s*Difficulty\s*:?\s*(?:\*\*)?\s*(?:Level\s*)?(\d)\s*(?:/\s*5)?\b.*$",
    re.IGNORECASE,
)
_RE_ANSWER_MARKER = re.compile(
    r"^\s*[•-]?\s*(?:\*\*)?\s*Answer\s*:?\s*(?:\*\*)?\s*:?\s*(.*)$", re.IGNORECASE)
_RE_EXPLANATION_MARKER = re.compile(
    r"^\s*[•-]?\s*(?:\*\*)?\s*Explanation\s*:?\s*(?:\*\*)?\s*:?\s*(.*)$", re.IGNORECASE)

_RE_OPTION_LETTER = re.compile(r"^\s*(?:\*\*)?([a-h])(?:\*\*)?[).](?:\*\*)?\s+(.*)$")
_RE_OPTION_NUMBER = re.compile(r"^\s*(?:\*\*)?(\d{1,2})(?:\*\*)?[.)](?:\*\*)?\s+(.*)$")

_RE_LABEL_TOKEN = re.compile(r"^([A-Za-z]|\d{1,2})\s*[).\]]?\s*(.*)$", re.DOTALL)
_RE_LABEL_MORE = re.compile(r"^(?:,|&)\s*(.*)$|^and\s+(.*)$", re.DOTALL | re.IGNORECASE)


@dataclass(frozen=True)
class _Line:
    text: str
    start: int  # char offset into the normalized input

    @property
    def end(self) -> int:
        return self.start + len(self.text)


def _split_lines(text: str) -> list[_Line]:
    lines: list[_Line] = []
    pos = 0
    for raw in text.split("\n"):
        lines.append(_Line(raw, pos))
        pos += len(raw) + 1
    return lines


@dataclass(frozen=True)
class _Fence:
    first_line: int  # index of the opening ``` line
    last_line: int   # index of the closing ``` line (== len when unterminated)
    block: CodeBlock
    unterminated: bool


def _scan_fences(lines: list[_Line]) -> list[_Fence]:
    fences: list[_Fence] = []
    i = 0
    while i < len(lines):
        m = _RE_FENCE_OPEN.match(lines[i].text)
        if not m:
            i += 1
            continue
        info = m.group(1).strip().lower()
        body: list[str] = []
        j = i + 1
        closed = False
        while j < len(lines):
            if _RE_FENCE_CLOSE.match(lines[j].text):
                closed = True
                break
            body.append(lines[j].text)
            j += 1
        hint = info
        if not hint and body:
            first = body[0].strip().lower()
            if first in _BARE_LANGUAGE_WORDS:
                hint = "cpp" if first == "c++" else first
                body = body[1:]
        fences.append(_Fence(
            first_line=i,
            last_line=j if closed else len(lines),
            block=CodeBlock(language_hint=hint, source="\n".join(body)),
            unterminated=not closed,
        ))
        i = (j + 1) if closed else len(lines)
    return fences


def _in_fence(idx: int, fences: list[_Fence]) -> bool:
    return any(f.first_line <= idx <= f.last_line for f in fences)


def extract_code_blocks(block: str) -> list[CodeBlock]:
    """All triple-backtick fenced regions of `block`, in document order."""
    return [f.block for f in _scan_fences(_split_lines(block.replace("\r\n", "\n")))]


def _match_option(line: str) -> Optional[tuple[str, str, str]]:
    """Match one option line; returns (style, label, text) or None."""
    stripped = re.sub(r"^\s*[•*-]\s+", "", line)
    m = _RE_OPTION_LETTER.match(stripped)
    if m:
        return ("letter", m.group(1).lower(), m.group(2).strip().strip("*").strip())
    m = _RE_OPTION_NUMBER.match(stripped)
    if m:
        return ("number", m.group(1), m.group(2).strip().strip("*").strip())
    return None


def _scan_option_run(lines: list[_Line], fences: list[_Fence]) -> tuple[list[OptionItem], Optional[int], Optional[int], bool]:
    """First run of >= 2 consecutive option-styled lines outside fences.

    Returns (options, run_start_line, run_end_line, mixed_styles).
    """
    n = len(lines)
    i = 0
    while i < n:
        if _in_fence(i, fences):
            i += 1
            continue
        first = _match_option(lines[i].text)
        next_ok = (
            i + 1 < n
            and not _in_fence(i + 1, fences)
            and _match_option(lines[i + 1].text) is not None
        )
        if first and next_ok:
            style = first[0]
            options: list[OptionItem] = []
            mixed = False
            j = i
            while j < n and not _in_fence(j, fences):
                m = _match_option(lines[j].text)
                if not m:
                    break
                if m[0] == style:
                    options.append(OptionItem(label=m[1], text=m[2]))
                else:
                    mixed = True
                j += 1
            return options, i, j, mixed
        i += 1
    return [], None, None, False


def extract_options(block: str) -> list[OptionItem]:
    """Option lines of a question block; empty when none are present.

    Letter ("a) text") and number ("1. text") styles are both accepted
    but never mixed in one result: the first style wins.
    """
    lines = _split_lines(block.replace("\r\n", "\n"))
    fences = _scan_fences(lines)
    options, _, _, _ = _scan_option_run(lines, fences)
    return options


def _parse_label_list(text: str) -> Optional[list[str]]:
    """Parse "c", "c)", "3.", "a, c", "a and c" into option labels."""
    text = text.translate(_SMART_QUOTES).strip().strip("*").strip("\"'").strip()
    m = _RE_LABEL_TOKEN.match(text)
    if not m:
        return None
    labels = [m.group(1).lower()]
    rest = m.group(2).strip()
    while rest:
        sep = _RE_LABEL_MORE.match(rest)
        if not sep:
            break
        rest = (sep.group(1) if sep.group(1) is not None else sep.group(2)).strip()
        m = _RE_LABEL_TOKEN.match(rest)
        if not m:
            return labels  # trailing prose after a separator: keep what parsed
        labels.append(m.group(1).lower())
        rest = m.group(2).strip()
    return labels


def _answer_from_region(
    marker_rest: str,
    region_lines: list[_Line],
    options: list[OptionItem],
    kind: QuestionKind,
) -> AnswerKey:
    if kind is QuestionKind.MULTIPLE_CHOICE:
        candidate = marker_rest.strip()
        if not candidate:
            for line in region_lines:
                if line.text.strip():
                    candidate = line.text.strip()
                    break
        labels = _parse_label_list(candidate) if candidate else None
        if not labels:
            raise AnswerMissing("answer marker present but no option label found")
        if len(labels) == 1:
            return SingleOption(label=labels[0])
        return MultiOption(labels=frozenset(labels))

    fences = _scan_fences(region_lines)
    if fences:
        first = fences[0]
        trailing_lines = [
            line.text for idx, line in enumerate(region_lines)
            if idx > first.last_line and not _in_fence(idx, fences)
        ]
        trailing = "\n".join(trailing_lines).strip()
        return CodeAnswer(code=first.block, expected_behavior=trailing or None)
    body_lines = [marker_rest] if marker_rest.strip() else []
    body_lines += [line.text for line in region_lines]
    text = "\n".join(body_lines).strip()
    if not text:
        raise AnswerMissing("answer section is empty")
    return TextAnswer(text=text)


def extract_answer(block: str, options: list[OptionItem], kind: QuestionKind) -> AnswerKey:
    """Parse the answer section of a question block into an AnswerKey.

    Raises AnswerMissing when the block carries no Answer marker. Labels
    are recorded as written; membership in `options` is the validator's
    concern, not the parser's.
    """
    lines = _split_lines(block.replace("\r\n", "\n"))
    fences = _scan_fences(lines)
    marker_idx = None
    marker_rest = ""
    for idx, line in enumerate(lines):
        if _in_fence(idx, fences):
            continue
        m = _RE_ANSWER_MARKER.match(line.text)
        if m:
            marker_idx, marker_rest = idx, m.group(1)
            break
    if marker_idx is None:
        raise AnswerMissing("no Answer marker in block")
    end = len(lines)
    for idx in range(marker_idx + 1, len(lines)):
        if not _in_fence(idx, fences) and _RE_EXPLANATION_MARKER.match(lines[idx].text):
            end = idx
            break
    return _answer_from_region(marker_rest, lines[marker_idx + 1:end], options, kind)


@dataclass
class _Block:
    ordinal: int
    heading_difficulty: Optional[int]
    inherited_difficulty: Optional[int]
    heading_rest: str
    lines: list[_Line]
    span: tuple[int, int]


def _match_heading(text: str) -> Optional[tuple[int, Optional[int], str]]:
    """Recognize a question heading; returns (ordinal, difficulty, rest)."""
    m = _RE_HEAD_EXPORT.match(text)
    if m:
        return int(m.group(1)), int(m.group(2)) if m.group(2) else None, m.group(3)
    m = _RE_HEAD_NUMBERED.match(text)
    if m:
        return int(m.group(1)), None, m.group(2)
    m = _RE_HEAD_Q.match(text)
    if m:
        return int(m.group(1)), None, m.group(2)
    return None


def _segment(lines: list[_Line], fences: list[_Fence]) -> list[_Block]:
    blocks: list[_Block] = []
    current_level: Optional[int] = None
    open_block: Optional[dict] = None

    def close(end_line_idx: int) -> None:
        nonlocal open_block
        if open_block is None:
            return
        body = open_block["lines"]
        end_char = body[-1].end if body else open_block["head_end"]
        blocks.append(_Block(
            ordinal=open_block["ordinal"],
            heading_difficulty=open_block["difficulty"],
            inherited_difficulty=open_block["level"],
            heading_rest=open_block["rest"],
            lines=body,
            span=(open_block["start"], end_char),
        ))
        open_block = None

    for idx, line in enumerate(lines):
        if _in_fence(idx, fences):
            if open_block is not None:
                open_block["lines"].append(line)
            continue
        level_m = _RE_LEVEL_HEADING.match(line.text)
        if level_m:
            close(idx)
            current_level = int(level_m.group(1))
            continue
        head = _match_heading(line.text)
        if head:
            close(idx)
            ordinal, difficulty, rest = head
            open_block = {
                "ordinal": ordinal,
                "difficulty": difficulty,
                "level": current_level,
                "rest": rest.strip(),
                "lines": [],
                "start": line.start,
                "head_end": line.end,
            }
            continue
        if open_block is not None:
            open_block["lines"].append(line)
    close(len(lines))
    return blocks


def _parse_block(
    block: _Block,
    spec: ExamSpec,
    provenance: Provenance,
    diagnostics: list[Diagnostic],
) -> Optional[Question]:
    lines = block.lines
    fences = _scan_fences(lines)
    for f in fences:
        if f.unterminated:
            diagnostics.append(Diagnostic(
                Severity.WARNING, "UnterminatedFence",
                "code fence not closed before end of question block", block.span))

    # Answer / Explanation markers partition the block.
    answer_idx: Optional[int] = None
    answer_rest = ""
    explanation_idx: Optional[int] = None
    explanation_rest = ""
    for idx, line in enumerate(lines):
        if _in_fence(idx, fences):
            continue
        if answer_idx is None:
            m = _RE_ANSWER_MARKER.match(line.text)
            if m:
                answer_idx, answer_rest = idx, m.group(1)
                continue
        if explanation_idx is None and (answer_idx is None or idx > answer_idx):
            m = _RE_EXPLANATION_MARKER.match(line.text)
            if m:
                explanation_idx, explanation_rest = idx, m.group(1)
                if answer_idx is not None:
                    break

    if answer_idx is None:
        diagnostics.append(Diagnostic(
            Severity.ERROR, "AnswerMissing",
            f"question {block.ordinal}: no Answer marker found", block.span))
        return None

    pre_end = answer_idx
    if explanation_idx is not None and explanation_idx < answer_idx:
        pre_end = explanation_idx
    pre_lines = lines[:pre_end]
    pre_fences = [f for f in fences if f.last_line < pre_end]

    # Difficulty: per-question tag wins over heading badge over Level heading.
    difficulty = block.heading_difficulty
    tag_indices: set[int] = set()
    for idx, line in enumerate(pre_lines):
        if _in_fence(idx, fences):
            continue
        m = _RE_DIFFICULTY_TAG.match(line.text)
        if m:
            level = int(m.group(1))
            if 1 <= level <= 5:
                difficulty = level
                tag_indices.add(idx)
    if difficulty is None:
        difficulty = block.inherited_difficulty

    options: list[OptionItem] = []
    run_start = run_end = None
    if spec.kind is QuestionKind.MULTIPLE_CHOICE:
        options, run_start, run_end, mixed = _scan_option_run(pre_lines, pre_fences)
        if mixed:
            diagnostics.append(Diagnostic(
                Severity.WARNING, "OptionStyleMixed",
                f"question {block.ordinal}: option labels mix letter and number styles; "
                "first style kept", block.span))

    # Stem: text before the first fence or the option run, minus tag lines.
    stem_cut = pre_end
    if pre_fences:
        stem_cut = min(stem_cut, pre_fences[0].first_line)
    if run_start is not None:
        stem_cut = min(stem_cut, run_start)
    stem_lines = [block.heading_rest] if block.heading_rest else []
    stem_lines += [
        line.text for idx, line in enumerate(pre_lines[:stem_cut]) if idx not in tag_indices
    ]
    stem = "\n".join(stem_lines).strip()

    code_blocks = tuple(f.block for f in pre_fences)

    try:
        answer = _answer_from_region(
            answer_rest,
            lines[answer_idx + 1:(explanation_idx if explanation_idx is not None
                                  and explanation_idx > answer_idx else len(lines))],
            options,
            spec.kind,
        )
    except AnswerMissing as exc:
        diagnostics.append(Diagnostic(
            Severity.ERROR, "AnswerMissing",
            f"question {block.ordinal}: {exc}", block.span))
        return None

    explanation = ""
    if explanation_idx is not None and explanation_idx > answer_idx:
        expl_lines = [explanation_rest] if explanation_rest.strip() else []
        expl_lines += [line.text for line in lines[explanation_idx + 1:]]
        explanation = "\n".join(expl_lines).strip()
    if not explanation:
        diagnostics.append(Diagnostic(
            Severity.WARNING, "ExplanationMissing",
            f"question {block.ordinal}: no explanation section", block.span))

    return Question(
        id=new_question_id(),
        ordinal=block.ordinal,
        kind=spec.kind,
        difficulty=difficulty,
        stem=stem,
        code_blocks=code_blocks,
        options=tuple(options),
        answer=answer,
        explanation=explanation,
        provenance=Provenance(
            prompt_digest=provenance.prompt_digest,
            model_id=provenance.model_id,
            provider=provenance.provider,
            created_at=provenance.created_at,
            raw_span=block.span,
        ),
    )


def parse_exam(text: str, spec: ExamSpec, provenance: Optional[Provenance] = None) -> ParseResult:
    """Parse raw model output into Question records plus diagnostics.

    Total over arbitrary input: unparseable content becomes diagnostics,
    never an exception.
    """
    result = ParseResult()
    provenance = provenance or Provenance()
    if not text.strip():
        result.diagnostics.append(Diagnostic(
            Severity.ERROR, "EmptyInput", "input is empty or whitespace-only",
            (0, len(text))))
        return result

    normalized = text.replace("\r\n", "\n")
    lines = _split_lines(normalized)
    fences = _scan_fences(lines)
    blocks = _segment(lines, fences)
    if not blocks:
        result.diagnostics.append(Diagnostic(
            Severity.ERROR, "NoQuestionsFound",
            "no question headings recognized in input", (0, len(normalized))))
        return result

    prev_ordinal = 0
    for block in blocks:
        question = _parse_block(block, spec, provenance, result.diagnostics)
        if question is None:
            continue
        if question.ordinal <= prev_ordinal:
            adjusted = prev_ordinal + 1
            result.diagnostics.append(Diagnostic(
                Severity.WARNING, "OrdinalAdjusted",
                f"question ordinal {question.ordinal} not increasing; renumbered to {adjusted}",
                block.span))
            question = replace(question, ordinal=adjusted)
        prev_ordinal = question.ordinal
        result.questions.append(question)
    return result
