"""Question bank persistence, exam assembly and export.

The store is a single sqlite file (no server dependency): one row per
question keyed by a globally unique question id, one row per generation
job including its spec, state-transition log and validation report.
Reads may run concurrently; writes funnel through one lock.

Exports come in two formats: Markdown (canonical layout the response
parser can read back) and JSON (schema_version "1", stable key order,
schema shipped in docs/export_schema.json). Markdown always uses letter
option labels; number-labeled questions are normalized on the way out.
"""

from __future__ import annotations

import json
import sqlite3
import string
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Any, Iterable, Optional, Sequence

from .taxonomy import (
    CodeAnswer,
    CurationStatus,
    ExamSpec,
    MultiOption,
    OptionItem,
    Question,
    QuestionKind,
    SingleOption,
    TextAnswer,
    question_from_dict,
    question_to_dict,
    spec_from_dict,
    spec_to_dict,
)

EXPORT_SCHEMA_VERSION = "1"

# Pipeline states, forward-only; Failed is reachable from any of them.
JOB_STATES = ("Pending", "Prompted", "Received", "Parsed", "Validated")
JOB_FAILED = "Failed"


class BankError(RuntimeError):
    pass


class DuplicateId(BankError):
    pass


class UnknownId(BankError):
    pass


class IllegalJobTransition(BankError):
    pass


@dataclass(frozen=True)
class BankRecord:
    question: Question
    job_id: str
    validation: Optional[list[dict]]
    updated_at: str


@dataclass(frozen=True)
class JobRecord:
    job_id: str
    parent_job_id: Optional[str]
    state: str
    reason: Optional[str]
    spec: ExamSpec
    model_config: str
    context: dict
    prompt_digest: Optional[str]
    raw_response: Optional[str]
    diagnostics: list[dict]
    report: Optional[dict]
    transitions: list[list[str]]
    created_at: str
    updated_at: str


@dataclass(frozen=True)
class ExamDocument:
    """An assembled exam; only Accepted questions may appear."""

    title: str
    spec_summary: str
    questions: tuple[Question, ...]
    answer_key_separate: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "questions", tuple(self.questions))
        for q in self.questions:
            if q.status is not CurationStatus.ACCEPTED:
                raise ValueError(
                    f"exam documents hold Accepted questions only; {q.id} is {q.status.value}")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


_SCHEMA = """
CREATE TABLE IF NOT EXISTS jobs (
    job_id TEXT PRIMARY KEY,
    parent_job_id TEXT,
    state TEXT NOT NULL,
    reason TEXT,
    spec_json TEXT NOT NULL,
    model_config TEXT NOT NULL DEFAULT '',
    context_json TEXT,
    prompt_digest TEXT,
    raw_response TEXT,
    diagnostics_json TEXT,
    report_json TEXT,
    transitions_json TEXT NOT NULL DEFAULT '[]',
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS questions (
    question_id TEXT PRIMARY KEY,
    job_id TEXT NOT NULL,
    ordinal INTEGER NOT NULL,
    target_language TEXT,
    question_json TEXT NOT NULL,
    status TEXT NOT NULL,
    validation_json TEXT,
    updated_at TEXT NOT NULL,
    UNIQUE (job_id, question_id)
);
CREATE INDEX IF NOT EXISTS idx_questions_job ON questions (job_id, ordinal);
"""


class ExamBank:
    """Single-file embedded store for questions and generation jobs."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- jobs ---------------------------------------------------------------

    def create_job(self, job_id: str, spec: ExamSpec, model_config: str,
                   parent_job_id: Optional[str] = None,
                   context: Optional[dict] = None) -> JobRecord:
        now = _now()
        with self._lock:
            self._conn.execute(
                "INSERT INTO jobs (job_id, parent_job_id, state, spec_json, model_config,"
                " context_json, transitions_json, created_at, updated_at)"
                " VALUES (?,?,?,?,?,?,?,?,?)",
                (job_id, parent_job_id, JOB_STATES[0], json.dumps(spec_to_dict(spec)),
                 model_config, json.dumps(context) if context else None,
                 json.dumps([[JOB_STATES[0], now]]), now, now))
            self._conn.commit()
        return self.get_job(job_id)

    def get_job(self, job_id: str) -> JobRecord:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM jobs WHERE job_id = ?", (job_id,)).fetchone()
        if row is None:
            raise UnknownId(f"no job {job_id}")
        return JobRecord(
            job_id=row["job_id"],
            parent_job_id=row["parent_job_id"],
            state=row["state"],
            reason=row["reason"],
            spec=spec_from_dict(json.loads(row["spec_json"])),
            model_config=row["model_config"],
            context=json.loads(row["context_json"]) if row["context_json"] else {},
            prompt_digest=row["prompt_digest"],
            raw_response=row["raw_response"],
            diagnostics=json.loads(row["diagnostics_json"]) if row["diagnostics_json"] else [],
            report=json.loads(row["report_json"]) if row["report_json"] else None,
            transitions=json.loads(row["transitions_json"]),
            created_at=row["created_at"],
            updated_at=row["updated_at"],
        )

    def list_jobs(self) -> list[JobRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT job_id FROM jobs ORDER BY created_at, job_id").fetchall()
        return [self.get_job(row["job_id"]) for row in rows]

    def advance_job(
        self,
        job_id: str,
        state: str,
        reason: Optional[str] = None,
        *,
        prompt_digest: Optional[str] = None,
        raw_response: Optional[str] = None,
        diagnostics: Optional[list[dict]] = None,
        report: Optional[dict] = None,
    ) -> JobRecord:
        """Move a job forward (or to Failed); backward moves are rejected."""
        job = self.get_job(job_id)
        if state != JOB_FAILED:
            if state not in JOB_STATES:
                raise IllegalJobTransition(f"unknown job state {state}")
            if job.state == JOB_FAILED:
                raise IllegalJobTransition("job already failed")
            if JOB_STATES.index(state) <= JOB_STATES.index(job.state):
                raise IllegalJobTransition(f"cannot move job from {job.state} to {state}")
        now = _now()
        transitions = job.transitions + [[state, now]]
        sets = ["state = ?", "reason = ?", "transitions_json = ?", "updated_at = ?"]
        args: list[Any] = [state, reason, json.dumps(transitions), now]
        if prompt_digest is not None:
            sets.append("prompt_digest = ?")
            args.append(prompt_digest)
        if raw_response is not None:
            sets.append("raw_response = ?")
            args.append(raw_response)
        if diagnostics is not None:
            sets.append("diagnostics_json = ?")
            args.append(json.dumps(diagnostics))
        if report is not None:
            sets.append("report_json = ?")
            args.append(json.dumps(report))
        args.append(job_id)
        with self._lock:
            self._conn.execute(f"UPDATE jobs SET {', '.join(sets)} WHERE job_id = ?", args)
            self._conn.commit()
        return self.get_job(job_id)

    # -- questions ----------------------------------------------------------

    def put_questions(
        self,
        job_id: str,
        questions: Sequence[Question],
        validation: Optional[dict[str, list[dict]]] = None,
    ) -> None:
        """Store questions under a job; identical re-puts are no-ops.

        A question id already present under a different job is an error.
        """
        ids = [q.id for q in questions]
        if len(set(ids)) != len(ids):
            raise DuplicateId("question ids must be unique within one put")
        try:
            language = self.get_job(job_id).spec.target_language
        except UnknownId:
            language = None
        validation = validation or {}
        now = _now()
        with self._lock:
            for q in questions:
                row = self._conn.execute(
                    "SELECT job_id FROM questions WHERE question_id = ?", (q.id,)).fetchone()
                if row is not None and row["job_id"] != job_id:
                    raise DuplicateId(
                        f"question id {q.id} already exists under job {row['job_id']}")
                excerpt = validation.get(q.id)
                self._conn.execute(
                    "INSERT INTO questions (question_id, job_id, ordinal, target_language,"
                    " question_json, status, validation_json, updated_at)"
                    " VALUES (?,?,?,?,?,?,?,?)"
                    " ON CONFLICT(question_id) DO UPDATE SET ordinal=excluded.ordinal,"
                    " question_json=excluded.question_json, status=excluded.status,"
                    " validation_json=excluded.validation_json, updated_at=excluded.updated_at",
                    (q.id, job_id, q.ordinal, language,
                     json.dumps(question_to_dict(q)), q.status.value,
                     json.dumps(excerpt) if excerpt is not None else None, now))
            self._conn.commit()

    def _record_from_row(self, row: sqlite3.Row) -> BankRecord:
        return BankRecord(
            question=question_from_dict(json.loads(row["question_json"])),
            job_id=row["job_id"],
            validation=json.loads(row["validation_json"]) if row["validation_json"] else None,
            updated_at=row["updated_at"],
        )

    def get_question(self, question_id: str) -> BankRecord:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM questions WHERE question_id = ?", (question_id,)).fetchone()
        if row is None:
            raise UnknownId(f"no question {question_id}")
        return self._record_from_row(row)

    def list_questions(self, job_id: Optional[str] = None,
                       status: Optional[CurationStatus] = None) -> list[BankRecord]:
        query = "SELECT * FROM questions"
        clauses, args = [], []
        if job_id is not None:
            clauses.append("job_id = ?")
            args.append(job_id)
        if status is not None:
            clauses.append("status = ?")
            args.append(status.value)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY job_id, ordinal, question_id"
        with self._lock:
            rows = self._conn.execute(query, args).fetchall()
        return [self._record_from_row(row) for row in rows]

    def set_status(self, question_id: str, status: CurationStatus) -> BankRecord:
        """Apply a curation transition; illegal moves raise IllegalTransition."""
        record = self.get_question(question_id)
        updated = record.question.with_status(status)  # raises IllegalTransition
        now = _now()
        with self._lock:
            self._conn.execute(
                "UPDATE questions SET question_json = ?, status = ?, updated_at = ?"
                " WHERE question_id = ?",
                (json.dumps(question_to_dict(updated)), status.value, now, question_id))
            self._conn.commit()
        return self.get_question(question_id)

    def update_question(self, question: Question,
                        validation: Optional[list[dict]] = None) -> BankRecord:
        """Replace a stored question's content (curation edits)."""
        self.get_question(question.id)  # raises UnknownId
        now = _now()
        with self._lock:
            self._conn.execute(
                "UPDATE questions SET question_json = ?, status = ?, ordinal = ?,"
                " validation_json = ?, updated_at = ? WHERE question_id = ?",
                (json.dumps(question_to_dict(question)), question.status.value,
                 question.ordinal,
                 json.dumps(validation) if validation is not None else None,
                 now, question.id))
            self._conn.commit()
        return self.get_question(question.id)

    # -- assembly -----------------------------------------------------------

    def assemble(
        self,
        kinds: Optional[Iterable[QuestionKind]] = None,
        min_difficulty: int = 1,
        max_difficulty: int = 5,
        target_language: Optional[str] = None,
        limit: Optional[int] = None,
        title: str = "Exam",
        answer_key_separate: bool = False,
    ) -> ExamDocument:
        """Deterministically assemble Accepted questions into a document.

        Order: difficulty ascending, then ordinal, then id.
        """
        kind_set = set(kinds) if kinds else None
        records = self.list_questions(status=CurationStatus.ACCEPTED)
        picked: list[Question] = []
        with self._lock:
            lang_rows = {
                row["question_id"]: row["target_language"]
                for row in self._conn.execute(
                    "SELECT question_id, target_language FROM questions").fetchall()
            }
        for record in records:
            q = record.question
            if kind_set is not None and q.kind not in kind_set:
                continue
            if q.difficulty is None or not (min_difficulty <= q.difficulty <= max_difficulty):
                continue
            if target_language is not None:
                lang = lang_rows.get(q.id)
                if lang is None or lang.lower() != target_language.lower():
                    continue
            picked.append(q)
        picked.sort(key=lambda q: (q.difficulty, q.ordinal, q.id))
        if limit is not None:
            picked = picked[:limit]
        summary_bits = [f"{len(picked)} question(s)"]
        if kind_set:
            summary_bits.append("kinds: " + ", ".join(sorted(k.value for k in kind_set)))
        summary_bits.append(f"difficulty {min_difficulty}-{max_difficulty}")
        if target_language:
            summary_bits.append(f"language: {target_language}")
        return ExamDocument(
            title=title,
            spec_summary="; ".join(summary_bits),
            questions=tuple(picked),
            answer_key_separate=answer_key_separate,
        )


# --- export ---------------------------------------------------------------

def normalize_option_labels(question: Question) -> Question:
    """Rewrite options to letter labels a), b), ... and remap the answer."""
    if not question.options:
        return question
    mapping = {
        opt.label: string.ascii_lowercase[i] for i, opt in enumerate(question.options)
    }
    options = tuple(
        OptionItem(label=mapping[opt.label], text=opt.text) for opt in question.options
    )
    answer = question.answer
    if isinstance(answer, SingleOption):
        answer = SingleOption(label=mapping.get(answer.label, answer.label))
    elif isinstance(answer, MultiOption):
        answer = MultiOption(labels=frozenset(
            mapping.get(label, label) for label in answer.labels))
    return replace(question, options=options, answer=answer)


def _render_answer_lines(question: Question) -> list[str]:
    answer = question.answer
    if isinstance(answer, SingleOption):
        return [f"Answer: {answer.label}"]
    if isinstance(answer, MultiOption):
        return [f"Answer: {', '.join(sorted(answer.labels))}"]
    lines = ["Answer:", ""]
    if isinstance(answer, CodeAnswer):
        lines += [f"```{answer.code.language_hint}", *answer.code.source.split("\n"), "```"]
        if answer.expected_behavior:
            lines += ["", answer.expected_behavior]
    elif isinstance(answer, TextAnswer):
        lines += answer.text.split("\n")
    return lines


def _render_question_heading(question: Question) -> str:
    if question.difficulty is not None:
        return f"**Question {question.ordinal} ({question.difficulty}/5)**"
    return f"**Question {question.ordinal}**"


def export_markdown(document: ExamDocument) -> bytes:
    """Canonical Markdown rendering (UTF-8, LF newlines).

    Layout per question: heading with difficulty badge, stem, fenced
    code (byte-exact), letter-labeled options, then answer and
    explanation either inline or under a trailing "## Answer Key".
    """
    out: list[str] = [f"# {document.title}", ""]
    key_section: list[str] = ["## Answer Key", ""]
    for q in document.questions:
        q = normalize_option_labels(q)
        out.append(_render_question_heading(q))
        out.append("")
        if q.stem:
            out += q.stem.split("\n")
            out.append("")
        for block in q.code_blocks:
            out.append(f"```{block.language_hint}")
            out += block.source.split("\n")
            out.append("```")
            out.append("")
        if q.options:
            out += [f"{opt.label}) {opt.text}" for opt in q.options]
            out.append("")
        answer_lines = _render_answer_lines(q)
        explanation_lines = ["Explanation:", *q.explanation.split("\n")] if q.explanation else []
        if document.answer_key_separate:
            key_section.append(_render_question_heading(q))
            key_section.append("")
            key_section += answer_lines
            key_section.append("")
            if explanation_lines:
                key_section += explanation_lines
                key_section.append("")
        else:
            out += answer_lines
            out.append("")
            if explanation_lines:
                out += explanation_lines
                out.append("")
    if document.answer_key_separate:
        out += key_section
    text = "\n".join(out).rstrip("\n") + "\n"
    return text.encode("utf-8")


def document_to_dict(document: ExamDocument) -> dict[str, Any]:
    return {
        "schema_version": EXPORT_SCHEMA_VERSION,
        "title": document.title,
        "spec_summary": document.spec_summary,
        "answer_key_separate": document.answer_key_separate,
        "questions": [question_to_dict(q) for q in document.questions],
    }


def export_json(document: ExamDocument) -> bytes:
    return json.dumps(document_to_dict(document), indent=2, ensure_ascii=False).encode("utf-8")


def export(document: ExamDocument, format: str) -> bytes:
    """Serialize an exam document; format is "markdown" or "json"."""
    fmt = format.lower()
    if fmt in ("markdown", "md"):
        return export_markdown(document)
    if fmt == "json":
        return export_json(document)
    raise ValueError(f"unknown export format: {format}")
