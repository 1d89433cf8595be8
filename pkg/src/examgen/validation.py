"""Exam validation: structural checks plus execution-based verification.

`validate` checks a parsed exam against its spec (question count,
difficulty distribution, per-question structure, duplicate stems) and
reports findings from a closed code registry.

`verify_by_execution` runs question code in a throwaway sandbox and
compares observed stdout with the stated expectation, catching answers
that merely look plausible. Each run gets a fresh empty working
directory, a wall-clock timeout, an output cap, and (for the Python
interpreter) a socket guard; network access is never granted. This does
not defend against deliberately malicious code beyond isolation and
timeout - a documented limitation.

Expected output is extracted in this order: an explicit "Output:"
section, then the answer text (for choice questions, the chosen
option's text), then inline `# comment` expectations on print lines.
Comparison trims trailing whitespace per line and collapses CRLF but is
case-sensitive, because the subject languages distinguish case.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import sys
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .taxonomy import (
    CodeAnswer,
    CodeBlock,
    ExamSpec,
    MultiOption,
    Question,
    QuestionKind,
    SingleOption,
    TextAnswer,
    answer_labels,
)

# --- structural validation -------------------------------------------------

FINDING_CODES = frozenset({
    "CountMismatch",
    "DistributionMismatch",
    "KindMismatch",
    "TooFewOptions",
    "UnexpectedOptions",
    "DuplicateOptionLabel",
    "AnswerNotInOptions",
    "AnswerKindMismatch",
    "DifficultyMissing",
    "ExplanationMissing",
    "DuplicateStem",
})


class FindingSeverity(Enum):
    ERROR = "Error"
    WARNING = "Warning"
    INFO = "Info"


@dataclass(frozen=True)
class Finding:
    severity: FindingSeverity
    code: str
    message: str
    question_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.code not in FINDING_CODES:
            raise ValueError(f"finding code not in registry: {self.code}")


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]
    checks_run: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not any(f.severity is FindingSeverity.ERROR for f in self.findings)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks_run": list(self.checks_run),
            "findings": [
                {
                    "severity": f.severity.value,
                    "code": f.code,
                    "message": f.message,
                    "question_id": f.question_id,
                }
                for f in self.findings
            ],
        }


def validate_question(question: Question, spec: ExamSpec) -> list[Finding]:
    """Structural checks for one question against its spec."""
    findings: list[Finding] = []
    qid = question.id

    if question.kind is not spec.kind:
        findings.append(Finding(
            FindingSeverity.ERROR, "KindMismatch",
            f"question {question.ordinal} is {question.kind.value}, spec wants {spec.kind.value}",
            qid))

    if question.kind is QuestionKind.MULTIPLE_CHOICE:
        if len(question.options) < 2:
            findings.append(Finding(
                FindingSeverity.ERROR, "TooFewOptions",
                f"question {question.ordinal} has {len(question.options)} option(s), need >= 2",
                qid))
        labels = [o.label for o in question.options]
        for label, count in Counter(labels).items():
            if count > 1:
                findings.append(Finding(
                    FindingSeverity.ERROR, "DuplicateOptionLabel",
                    f"question {question.ordinal} repeats option label '{label}'", qid))
        if not isinstance(question.answer, (SingleOption, MultiOption)):
            findings.append(Finding(
                FindingSeverity.ERROR, "AnswerKindMismatch",
                f"question {question.ordinal} is multiple-choice but its answer is not an option label",
                qid))
        else:
            unknown = sorted(answer_labels(question.answer) - set(labels))
            if unknown:
                findings.append(Finding(
                    FindingSeverity.ERROR, "AnswerNotInOptions",
                    f"question {question.ordinal} answers {', '.join(unknown)} "
                    f"but options are {', '.join(labels) or '(none)'}", qid))
    else:
        if question.options:
            findings.append(Finding(
                FindingSeverity.ERROR, "UnexpectedOptions",
                f"question {question.ordinal} is {question.kind.value} but carries options", qid))
        if isinstance(question.answer, (SingleOption, MultiOption)):
            findings.append(Finding(
                FindingSeverity.ERROR, "AnswerKindMismatch",
                f"question {question.ordinal} is {question.kind.value} but answers an option label",
                qid))

    if question.difficulty is None:
        findings.append(Finding(
            FindingSeverity.ERROR, "DifficultyMissing",
            f"question {question.ordinal} has no difficulty label", qid))
    if not question.explanation.strip():
        findings.append(Finding(
            FindingSeverity.WARNING, "ExplanationMissing",
            f"question {question.ordinal} has no explanation", qid))
    return findings


def validate(questions: Sequence[Question], spec: ExamSpec) -> ValidationReport:
    """Check a parsed exam against its spec; never raises."""
    findings: list[Finding] = []

    if len(questions) != spec.total:
        findings.append(Finding(
            FindingSeverity.ERROR, "CountMismatch",
            f"exam has {len(questions)} question(s), spec wants {spec.total}"))

    counts = Counter(q.difficulty for q in questions if q.difficulty is not None)
    off_levels = [
        level for level in sorted(spec.distribution)
        if counts.get(level, 0) != spec.distribution[level]
    ]
    if off_levels:
        detail = "; ".join(
            f"level {level}/5 has {counts.get(level, 0)}, spec wants {spec.distribution[level]}"
            for level in off_levels)
        findings.append(Finding(
            FindingSeverity.ERROR, "DistributionMismatch", detail))

    for question in questions:
        findings.extend(validate_question(question, spec))

    seen: dict[str, int] = {}
    for question in questions:
        key = " ".join(question.stem.split()).lower()
        if not key:
            continue
        if key in seen:
            findings.append(Finding(
                FindingSeverity.WARNING, "DuplicateStem",
                f"question {question.ordinal} repeats the stem of question {seen[key]}",
                question.id))
        else:
            seen[key] = question.ordinal

    return ValidationReport(
        findings=tuple(findings),
        checks_run=("count", "distribution", "structure", "duplicate_stems"),
    )


# --- sandboxed execution ---------------------------------------------------

class Outcome(Enum):
    VERIFIED = "Verified"
    MISMATCH = "Mismatch"
    EXECUTION_ERROR = "ExecutionError"
    TIMEOUT = "Timeout"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class ExecutionVerdict:
    outcome: Outcome
    observed_stdout: str = ""
    expected: str = ""
    detail: str = ""


@dataclass(frozen=True)
class LanguageCommand:
    """Subprocess recipe for one language.

    Templates may use {file} (source path), {exe} (compiled binary
    path), {workdir} and {classname}; syntax_cmd is the parse/compile-
    only tier used by syntax_check.
    """
    source_name: str
    run_cmd: tuple[str, ...]
    compile_cmd: Optional[tuple[str, ...]] = None
    syntax_cmd: Optional[tuple[str, ...]] = None


def default_language_commands(interpreter_command: str) -> dict[str, LanguageCommand]:
    """Python always; C++/Java only when their toolchains are on PATH."""
    commands = {
        "python": LanguageCommand(
            source_name="main.py",
            run_cmd=(interpreter_command, "{file}"),
            syntax_cmd=(interpreter_command, "-m", "py_compile", "{file}"),
        ),
    }
    if shutil.which("g++"):
        commands["cpp"] = LanguageCommand(
            source_name="main.cpp",
            compile_cmd=("g++", "-O0", "-o", "{exe}", "{file}"),
            run_cmd=("{exe}",),
            syntax_cmd=("g++", "-fsyntax-only", "{file}"),
        )
    if shutil.which("javac") and shutil.which("java"):
        commands["java"] = LanguageCommand(
            source_name="{classname}.java",
            compile_cmd=("javac", "-d", "{classdir}", "{file}"),
            run_cmd=("java", "-cp", "{classdir}", "{classname}"),
            syntax_cmd=("javac", "-d", "{classdir}", "{file}"),
        )
    return commands


@dataclass(frozen=True)
class SandboxConfig:
    interpreter_command: str = sys.executable
    working_dir: Optional[str] = None  # base for per-run temp dirs
    wall_timeout: float = 5.0
    max_output_bytes: int = 64 * 1024
    network: bool = False  # must stay False; execution never gets network
    env: dict = field(default_factory=dict)
    languages: Optional[dict[str, LanguageCommand]] = None
    default_language: str = "python"

    def __post_init__(self) -> None:
        if self.wall_timeout <= 0:
            raise ValueError("wall_timeout must be positive")
        if self.network:
            raise ValueError("network access is never granted to sandboxed code")
        if self.languages is None:
            object.__setattr__(
                self, "languages", default_language_commands(self.interpreter_command))


_SOCKET_GUARD = """\
import socket as _socket


def _deny(*args, **kwargs):
    raise OSError("network access is disabled in this sandbox")


_socket.socket = _deny
_socket.create_connection = _deny
"""


@dataclass(frozen=True)
class RunOutcome:
    exit_code: Optional[int]
    stdout: str
    stderr: str
    timed_out: bool
    detail: str = ""


def _java_classname(source: str) -> str:
    m = re.search(r"\bpublic\s+class\s+(\w+)", source)
    if m:
        return m.group(1)
    m = re.search(r"\bclass\s+(\w+)", source)
    return m.group(1) if m else "Main"


def _fill(template: Sequence[str], mapping: dict[str, str]) -> list[str]:
    return [part.format(**mapping) for part in template]


def run_in_sandbox(source: str, language: str, sandbox: SandboxConfig) -> RunOutcome:
    """Execute one source file in a fresh, empty working directory.

    The script lives outside the working directory, so the code sees a
    pristine cwd every run; files it writes vanish with the run.
    """
    lang = sandbox.languages.get(language)
    if lang is None:
        return RunOutcome(None, "", "", False, f"no command configured for language '{language}'")

    root = tempfile.mkdtemp(prefix="examgen-run-", dir=sandbox.working_dir)
    try:
        src_dir = Path(root) / "src"
        work_dir = Path(root) / "work"
        guard_dir = Path(root) / "guard"
        for d in (src_dir, work_dir, guard_dir):
            d.mkdir()

        classname = _java_classname(source) if language == "java" else "Main"
        source_path = src_dir / lang.source_name.format(classname=classname)
        source_path.write_text(source, encoding="utf-8")
        exe_path = src_dir / "program"
        mapping = {
            "file": str(source_path),
            "exe": str(exe_path),
            "workdir": str(work_dir),
            "classdir": str(src_dir),
            "classname": classname,
        }

        env = {"PATH": os.environ.get("PATH", ""), "LANG": "C.UTF-8"}
        env.update(sandbox.env)
        if language == "python":
            (guard_dir / "sitecustomize.py").write_text(_SOCKET_GUARD, encoding="utf-8")
            env["PYTHONPATH"] = str(guard_dir)

        def run(cmd: list[str]) -> subprocess.CompletedProcess:
            return subprocess.run(
                cmd, cwd=work_dir, env=env, capture_output=True,
                timeout=sandbox.wall_timeout, text=True, errors="replace")

        try:
            if lang.compile_cmd:
                compiled = run(_fill(lang.compile_cmd, mapping))
                if compiled.returncode != 0:
                    return RunOutcome(
                        compiled.returncode,
                        compiled.stdout[:sandbox.max_output_bytes],
                        compiled.stderr[:sandbox.max_output_bytes],
                        False, "compilation failed")
            proc = run(_fill(lang.run_cmd, mapping))
        except subprocess.TimeoutExpired:
            return RunOutcome(None, "", "", True,
                              f"killed after {sandbox.wall_timeout}s wall clock")
        return RunOutcome(
            proc.returncode,
            proc.stdout[:sandbox.max_output_bytes],
            proc.stderr[:sandbox.max_output_bytes],
            False)
    finally:
        shutil.rmtree(root, ignore_errors=True)


# --- expectation extraction ------------------------------------------------

_RE_OUTPUT_SECTION = re.compile(r"^\s*(?:\*\*)?Output\s*:?\s*(?:\*\*)?\s*(.*)$", re.IGNORECASE)
_RE_EXPECTED_EXCEPTION = re.compile(
    r"(?:throws?|raises?)\s+(?:an?\s+)?`?([A-Za-z_][\w.]*(?:Exception|Error))`?", re.IGNORECASE)
_RE_PRINT_COMMENT = re.compile(r"^\s*print\s*\(.*\)\s*#\s*(.+)$")


def _output_section(text: str) -> Optional[str]:
    """Content of an explicit "Output:" marker: same-line rest plus the
    following lines up to the first blank line."""
    lines = text.split("\n")
    for i, line in enumerate(lines):
        m = _RE_OUTPUT_SECTION.match(line)
        if m:
            collected = [m.group(1)] if m.group(1).strip() else []
            for follow in lines[i + 1:]:
                if not follow.strip():
                    break
                collected.append(follow)
            if collected:
                return "\n".join(collected)
    return None


def _print_comment_expectations(source: str) -> Optional[str]:
    """Expected lines from `print(...)  # value` style inline comments.

    A " - note" suffix and a leading "prints" are dropped, so a comment
    like "# [[99, 2], [3, 4]] - Affected ..." expects "[[99, 2], [3, 4]]".
    """
    expected: list[str] = []
    for line in source.split("\n"):
        m = _RE_PRINT_COMMENT.match(line)
        if not m:
            continue
        comment = m.group(1).strip()
        if comment.lower().startswith("prints "):
            comment = comment[len("prints "):]
        comment = comment.split(" - ")[0].strip()
        if comment:
            expected.append(comment)
    return "\n".join(expected) if expected else None


def _selected_option_text(question: Question) -> Optional[str]:
    if isinstance(question.answer, SingleOption):
        for opt in question.options:
            if opt.label == question.answer.label:
                return opt.text
    return None


def normalize_output(text: str) -> str:
    """Whitespace-tolerant, case-sensitive normal form for comparison."""
    lines = text.replace("\r\n", "\n").split("\n")
    return "\n".join(line.rstrip() for line in lines).strip("\n")


_RE_CALL = re.compile(r"\b([A-Za-z_]\w*)\s*\(([^()]*)\)")


def _synthesize_driver(question: Question, code: CodeBlock) -> Optional[str]:
    """Driver for function-writing answers: wrap example calls found in
    the stem/explanation in print(). No example calls, no driver - we do
    not invent inputs."""
    defined = set(re.findall(r"^\s*def\s+(\w+)\s*\(", code.source, re.MULTILINE))
    if not defined:
        return None
    calls: list[str] = []
    parts = [question.stem, question.explanation]
    if isinstance(question.answer, CodeAnswer) and question.answer.expected_behavior:
        parts.append(question.answer.expected_behavior)
    prose = "\n".join(parts)
    for m in _RE_CALL.finditer(prose):
        if m.group(1) in defined and m.group(2).strip():
            call = f"{m.group(1)}({m.group(2).strip()})"
            if call not in calls:
                calls.append(call)
    if not calls:
        return None
    return "\n".join(f"print({call})" for call in calls)


def _has_top_level_output(source: str, language: str) -> bool:
    if language == "python":
        return bool(re.search(r"^\s*print\s*\(", source, re.MULTILINE))
    if language == "cpp":
        return "cout" in source or "printf" in source
    if language == "java":
        return "System.out" in source
    return False


def verify_by_execution(
    question: Question,
    sandbox: SandboxConfig,
    *,
    driver: Optional[str] = None,
    expected_stdout: Optional[str] = None,
    expected_exception: Optional[str] = None,
) -> ExecutionVerdict:
    """Run a question's code and compare observed with expected behavior.

    Keyword overrides let a caller supply the deterministic driver and
    oracle explicitly; by default both are derived from the question
    (option text, "Output:" sections, print-line comments, example
    calls in the prose). Questions with no executable interpretation
    come back Unsupported rather than guessed at.
    """
    code: Optional[CodeBlock] = None
    if isinstance(question.answer, CodeAnswer):
        code = question.answer.code
    elif question.code_blocks:
        code = question.code_blocks[0]
    if code is None or not code.source.strip():
        return ExecutionVerdict(
            Outcome.UNSUPPORTED, detail="question has no code to execute")

    language = code.language_hint or sandbox.default_language
    if language not in sandbox.languages:
        return ExecutionVerdict(
            Outcome.UNSUPPORTED, detail=f"no toolchain configured for '{language}'")

    answer_text = ""
    if isinstance(question.answer, TextAnswer):
        answer_text = question.answer.text
    elif isinstance(question.answer, CodeAnswer):
        answer_text = question.answer.expected_behavior or ""
    else:
        answer_text = _selected_option_text(question) or ""

    if expected_exception is None:
        m = _RE_EXPECTED_EXCEPTION.search(answer_text) or _RE_EXPECTED_EXCEPTION.search(
            question.explanation)
        if m:
            expected_exception = m.group(1)

    expected = expected_stdout
    if expected is None and expected_exception is None:
        expected = (
            _output_section(answer_text)
            or _output_section(question.explanation)
            or (answer_text if isinstance(question.answer, (TextAnswer, SingleOption)) and
                answer_text.strip() else None)
            or _print_comment_expectations(code.source)
        )

    script = code.source
    if isinstance(question.answer, CodeAnswer):
        effective_driver = driver
        if effective_driver is None and not _has_top_level_output(code.source, language):
            effective_driver = _synthesize_driver(question, code)
            if effective_driver is None:
                return ExecutionVerdict(
                    Outcome.UNSUPPORTED,
                    detail="no example calls to drive the answer code with")
        if effective_driver:
            script = code.source.rstrip("\n") + "\n" + effective_driver + "\n"
    elif driver:
        script = code.source.rstrip("\n") + "\n" + driver + "\n"

    if expected is None and expected_exception is None:
        return ExecutionVerdict(
            Outcome.UNSUPPORTED, detail="no expected output stated anywhere in the question")

    run = run_in_sandbox(script, language, sandbox)
    if run.timed_out:
        return ExecutionVerdict(Outcome.TIMEOUT, detail=run.detail)
    if run.exit_code is None:
        return ExecutionVerdict(Outcome.UNSUPPORTED, detail=run.detail)

    if run.exit_code != 0:
        if expected_exception and expected_exception in run.stderr:
            return ExecutionVerdict(
                Outcome.VERIFIED, observed_stdout=run.stdout,
                expected=f"exception {expected_exception}",
                detail="declared exception observed in stderr")
        return ExecutionVerdict(
            Outcome.EXECUTION_ERROR, observed_stdout=run.stdout,
            expected=expected or "", detail=run.stderr.strip()[-2000:])

    if expected_exception and expected is None:
        return ExecutionVerdict(
            Outcome.MISMATCH, observed_stdout=run.stdout,
            expected=f"exception {expected_exception}",
            detail="expected an exception but execution succeeded")

    if normalize_output(run.stdout) == normalize_output(expected or ""):
        return ExecutionVerdict(
            Outcome.VERIFIED, observed_stdout=run.stdout, expected=expected or "")
    return ExecutionVerdict(
        Outcome.MISMATCH, observed_stdout=run.stdout, expected=expected or "",
        detail="observed stdout differs from expected output")


def verify_many(
    questions: Sequence[Question],
    sandbox: SandboxConfig,
    max_workers: Optional[int] = None,
) -> dict[str, ExecutionVerdict]:
    """Run verify_by_execution over many questions, bounded-parallel."""
    from concurrent.futures import ThreadPoolExecutor

    workers = max_workers or os.cpu_count() or 2
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            q.id: pool.submit(verify_by_execution, q, sandbox) for q in questions
        }
        return {qid: fut.result() for qid, fut in futures.items()}


# --- syntax check ----------------------------------------------------------

class SyntaxCheckTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class SyntaxVerdict:
    status: str  # WellFormed | SyntaxError | Unsupported
    detail: str = ""


def syntax_check(block: CodeBlock, language: str,
                 sandbox: Optional[SandboxConfig] = None) -> SyntaxVerdict:
    """Cheap tier below full execution: parse/compile-only invocation."""
    sandbox = sandbox or SandboxConfig()
    lang = sandbox.languages.get(language)
    if lang is None or lang.syntax_cmd is None:
        return SyntaxVerdict("Unsupported", f"no syntax command for '{language}'")

    root = tempfile.mkdtemp(prefix="examgen-syntax-", dir=sandbox.working_dir)
    try:
        classname = _java_classname(block.source) if language == "java" else "Main"
        source_path = Path(root) / lang.source_name.format(classname=classname)
        source_path.write_text(block.source, encoding="utf-8")
        mapping = {
            "file": str(source_path), "exe": str(Path(root) / "program"),
            "workdir": root, "classdir": root, "classname": classname,
        }
        try:
            proc = subprocess.run(
                _fill(lang.syntax_cmd, mapping), cwd=root,
                env={"PATH": os.environ.get("PATH", "")},
                capture_output=True, timeout=sandbox.wall_timeout, text=True,
                errors="replace")
        except subprocess.TimeoutExpired:
            raise SyntaxCheckTimeout(f"syntax check exceeded {sandbox.wall_timeout}s")
        if proc.returncode == 0:
            return SyntaxVerdict("WellFormed")
        detail = (proc.stderr or proc.stdout).strip()
        return SyntaxVerdict("SyntaxError", detail[:2000])
    finally:
        shutil.rmtree(root, ignore_errors=True)
