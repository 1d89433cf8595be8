import random
from collections import Counter
from dataclasses import replace

import pytest

from examgen.parsing import parse_exam
from examgen.taxonomy import (
    CodeAnswer,
    CodeBlock,
    OptionItem,
    Question,
    QuestionKind,
    SingleOption,
    TextAnswer,
    new_question_id,
)
from examgen.validation import (
    FINDING_CODES,
    FindingSeverity,
    Outcome,
    SandboxConfig,
    run_in_sandbox,
    syntax_check,
    validate,
    verify_by_execution,
)

from conftest import FIXTURES, figure_text, random_question, random_valid_spec


def load_full_exam_questions(fig2_spec):
    text = (FIXTURES / "responses" / "fig2_full_exam.md").read_text(encoding="utf-8")
    result = parse_exam(text, fig2_spec)
    assert result.errors == []
    return result.questions


@pytest.fixture(scope="module")
def sandbox():
    return SandboxConfig(wall_timeout=10.0)


def test_full_exam_passes(fig2_spec):
    questions = load_full_exam_questions(fig2_spec)
    report = validate(questions, fig2_spec)
    assert report.passed, [f.message for f in report.findings
                           if f.severity is FindingSeverity.ERROR]
    assert Counter(q.difficulty for q in questions) == {1: 3, 2: 3, 3: 5, 4: 5, 5: 4}


def test_relabeled_difficulty_names_both_levels(fig2_spec):
    questions = list(load_full_exam_questions(fig2_spec))
    idx = next(i for i, q in enumerate(questions) if q.difficulty == 5)
    questions[idx] = replace(questions[idx], difficulty=4)
    report = validate(questions, fig2_spec)
    assert not report.passed
    finding = next(f for f in report.findings if f.code == "DistributionMismatch")
    assert "4/5" in finding.message and "5/5" in finding.message


def test_answer_not_in_options(fig2_spec):
    questions = list(load_full_exam_questions(fig2_spec))
    questions[0] = replace(questions[0], answer=SingleOption("e"))
    report = validate(questions, fig2_spec)
    codes = [f.code for f in report.findings]
    assert "AnswerNotInOptions" in codes
    assert not report.passed


def test_count_mismatch(fig2_spec):
    questions = load_full_exam_questions(fig2_spec)[:19]
    report = validate(questions, fig2_spec)
    assert any(f.code == "CountMismatch" for f in report.findings)


def test_duplicate_stem_is_warning_only(fig2_spec):
    questions = list(load_full_exam_questions(fig2_spec))
    questions[1] = replace(questions[1], stem=questions[0].stem)
    report = validate(questions, fig2_spec)
    dup = [f for f in report.findings if f.code == "DuplicateStem"]
    assert dup and all(f.severity is FindingSeverity.WARNING for f in dup)


def test_missing_difficulty_and_explanation(fig2_spec):
    questions = list(load_full_exam_questions(fig2_spec))
    questions[0] = replace(questions[0], difficulty=None, explanation="")
    report = validate(questions, fig2_spec)
    codes = {f.code: f.severity for f in report.findings}
    assert codes["DifficultyMissing"] is FindingSeverity.ERROR
    assert codes["ExplanationMissing"] is FindingSeverity.WARNING


def test_all_finding_codes_come_from_registry(fig2_spec):
    questions = list(load_full_exam_questions(fig2_spec))
    questions[0] = replace(questions[0], difficulty=None, explanation="",
                           answer=SingleOption("z"), options=questions[0].options[:1])
    report = validate(questions, fig2_spec)
    assert {f.code for f in report.findings} <= FINDING_CODES


def test_monotonicity_warning_never_flips_errors_do(fig2_spec):
    questions = list(load_full_exam_questions(fig2_spec))
    base = validate(questions, fig2_spec)
    assert base.passed

    warned = list(questions)
    warned[3] = replace(warned[3], explanation="")
    assert validate(warned, fig2_spec).passed  # warning only

    errored = list(questions)
    errored[3] = replace(errored[3], options=errored[3].options[:1])
    assert not validate(errored, fig2_spec).passed


def test_distribution_soundness_against_oracle():
    rng = random.Random(77)
    for _ in range(300):
        spec = random_valid_spec(rng)
        n = rng.randint(0, spec.total + 2)
        questions = [random_question(rng, i + 1, spec.kind) for i in range(n)]
        report = validate(questions, spec)
        flagged = any(f.code == "DistributionMismatch" for f in report.findings)
        oracle = Counter(
            q.difficulty for q in questions if q.difficulty is not None
        ) != Counter({k: v for k, v in spec.distribution.items() if v > 0})
        assert flagged == oracle


# --- execution ---------------------------------------------------------------

def _fig6_question(fig3_spec):
    return parse_exam(figure_text("fig6_short_answer_python.md"), fig3_spec).questions[0]


def _fig7_question(fig4_spec):
    return parse_exam(figure_text("fig7_essay_python.md"), fig4_spec).questions[0]


def _fig5_question(fig2_spec):
    return parse_exam(figure_text("fig5_mcq_python.md"), fig2_spec).questions[0]


def test_fig6_verified_with_example_driver(fig3_spec, sandbox):
    # oracle: 4 is even, 7 is odd, so the printed values must be True then False
    verdict = verify_by_execution(
        _fig6_question(fig3_spec), sandbox,
        driver="print(check_even(4))\nprint(check_even(7))",
        expected_stdout="True\nFalse")
    assert verdict.outcome is Outcome.VERIFIED
    assert verdict.observed_stdout.splitlines() == ["True", "False"]


def test_fig6_without_example_calls_is_unsupported(fig3_spec, sandbox):
    verdict = verify_by_execution(_fig6_question(fig3_spec), sandbox)
    assert verdict.outcome is Outcome.UNSUPPORTED


def test_driver_synthesis_from_stem_calls(fig3_spec, sandbox):
    q = _fig6_question(fig3_spec)
    q = replace(q, stem=q.stem + " For example, check_even(10) returns True.")
    verdict = verify_by_execution(q, sandbox, expected_stdout="True")
    assert verdict.outcome is Outcome.VERIFIED


def test_fig7_verified_from_print_comments(fig4_spec, sandbox):
    verdict = verify_by_execution(_fig7_question(fig4_spec), sandbox)
    assert verdict.outcome is Outcome.VERIFIED
    assert verdict.observed_stdout.splitlines() == [
        "[[99, 2], [3, 4]]", "[[99, 2], [3, 4]]"]


def test_sandbox_isolation_between_runs(fig2_spec, sandbox):
    # the file-writing snippet must observe a fresh directory every run
    probe = (
        "import os\n"
        "print(os.path.exists('data.txt'))\n"
        + _fig5_question(fig2_spec).code_blocks[0].source
    )
    first = run_in_sandbox(probe, "python", sandbox)
    second = run_in_sandbox(probe, "python", sandbox)
    assert first.stdout == second.stdout == "False\n"

    v1 = verify_by_execution(_fig5_question(fig2_spec), sandbox)
    v2 = verify_by_execution(_fig5_question(fig2_spec), sandbox)
    assert v1.outcome == v2.outcome


def test_verification_asymmetry_mismatch(fig3_spec, sandbox):
    verdict = verify_by_execution(
        _fig6_question(fig3_spec), sandbox,
        driver="print(check_even(4))", expected_stdout="False")
    assert verdict.outcome is Outcome.MISMATCH


def test_verification_asymmetry_execution_error(fig3_spec, sandbox):
    q = _fig6_question(fig3_spec)
    broken = replace(
        q, answer=CodeAnswer(code=CodeBlock("python", "raise RuntimeError('no')")))
    verdict = verify_by_execution(broken, sandbox,
                                  driver="pass", expected_stdout="True")
    assert verdict.outcome is Outcome.EXECUTION_ERROR


def test_expected_exception_flips_to_verified(sandbox):
    q = Question(
        id=new_question_id(), ordinal=1, kind=QuestionKind.MULTIPLE_CHOICE,
        difficulty=3, stem="What happens when this runs?",
        code_blocks=(CodeBlock("python", "values = [1]\nprint(values[5])"),),
        options=(OptionItem("a", "Prints 1"),
                 OptionItem("b", "Raises an IndexError")),
        answer=SingleOption("b"),
        explanation="Index 5 is out of range.")
    verdict = verify_by_execution(q, sandbox)
    assert verdict.outcome is Outcome.VERIFIED

    wrong = replace(q, answer=SingleOption("a"))
    verdict = verify_by_execution(wrong, sandbox)
    assert verdict.outcome is Outcome.EXECUTION_ERROR


def test_timeout_verdict(fig3_spec):
    fast = SandboxConfig(wall_timeout=0.5)
    q = replace(
        _fig6_question(fig3_spec),
        answer=CodeAnswer(code=CodeBlock("python", "while True:\n    pass")))
    verdict = verify_by_execution(q, fast, driver="pass", expected_stdout="x")
    assert verdict.outcome is Outcome.TIMEOUT


def test_essay_without_code_is_unsupported(fig4_spec, sandbox):
    q = parse_exam(figure_text("fig7_essay_python.md"), fig4_spec).questions[0]
    prose_only = replace(q, answer=TextAnswer("Just words."), code_blocks=())
    verdict = verify_by_execution(prose_only, sandbox)
    assert verdict.outcome is Outcome.UNSUPPORTED


def test_network_is_denied_inside_python_sandbox(sandbox):
    probe = (
        "import socket\n"
        "try:\n"
        "    socket.socket()\n"
        "    print('open')\n"
        "except OSError as exc:\n"
        "    print('blocked')\n"
    )
    outcome = run_in_sandbox(probe, "python", sandbox)
    assert outcome.stdout.strip() == "blocked"


def test_sandbox_config_rejects_network():
    with pytest.raises(ValueError):
        SandboxConfig(network=True)


def test_output_cap_applies():
    small = SandboxConfig(max_output_bytes=100, wall_timeout=10.0)
    outcome = run_in_sandbox("print('x' * 10000)", "python", small)
    assert len(outcome.stdout) == 100


# --- syntax check ------------------------------------------------------------

def test_syntax_check_well_formed(fig2_spec):
    block = _fig5_question(fig2_spec).code_blocks[0]
    assert syntax_check(block, "python").status == "WellFormed"


def test_syntax_check_malformed():
    verdict = syntax_check(CodeBlock("python", "def f(:"), "python")
    assert verdict.status == "SyntaxError"
    assert verdict.detail


def test_syntax_check_unconfigured_language():
    verdict = syntax_check(CodeBlock("cobol", "MOVE A TO B."), "cobol")
    assert verdict.status == "Unsupported"


def test_java_classname_extraction():
    from examgen.validation import _java_classname

    fig9_source = (
        "public class Main {\n"
        "    public static void main(String[] args) {\n"
        "        int[] numbers = {1, 2, 3};\n"
        "        System.out.println(numbers[3]);\n"
        "    }\n"
        "}")
    assert _java_classname(fig9_source) == "Main"
    assert _java_classname("class Helper { }") == "Helper"
    assert _java_classname("// nothing here") == "Main"


def test_fig9_java_execution_matches_toolchain_availability(fig2_spec):
    import shutil as _shutil

    q = parse_exam(figure_text("fig9_mcq_java.md"), fig2_spec).questions[0]
    verdict = verify_by_execution(q, SandboxConfig(wall_timeout=20.0))
    if _shutil.which("javac") and _shutil.which("java"):
        # the declared ArrayIndexOutOfBoundsException flips the nonzero
        # exit to Verified
        assert verdict.outcome is Outcome.VERIFIED
    else:
        assert verdict.outcome is Outcome.UNSUPPORTED
