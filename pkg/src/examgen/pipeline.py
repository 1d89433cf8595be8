"""Generation pipeline: render -> complete -> parse -> validate -> store.

One function advances a persisted job through its whole lifecycle,
recording every stage transition in the bank. Both the HTTP service
(asynchronously, via a worker pool) and the CLI (synchronously) drive
jobs through here.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from . import gateway
from .bank import ExamBank, JobRecord
from .parsing import ParseResult, parse_exam
from .prompting import PromptText, inject_few_shot, render_prompt
from .taxonomy import Provenance, new_question_id, prompt_digest
from .validation import validate


def _diagnostics_dicts(result: ParseResult) -> list[dict]:
    return [
        {
            "severity": d.severity.value,
            "code": d.code,
            "message": d.message,
            "span": list(d.span),
        }
        for d in result.diagnostics
    ]


def _per_question_findings(report_dict: dict) -> dict[str, list[dict]]:
    by_question: dict[str, list[dict]] = {}
    for finding in report_dict["findings"]:
        qid = finding.get("question_id")
        if qid:
            by_question.setdefault(qid, []).append(finding)
    return by_question


def build_prompt(job: JobRecord) -> PromptText:
    """The prompt a job will send: either the one frozen in its context
    (regeneration jobs) or a fresh render of its spec."""
    stored = job.context.get("prompt_text")
    if stored:
        return PromptText(text=stored, digest=prompt_digest(stored), section_spans={})
    prompt = render_prompt(job.spec)
    if job.spec.few_shot_examples:
        prompt = inject_few_shot(prompt, list(job.spec.few_shot_examples))
    return prompt


def run_pipeline(
    bank: ExamBank,
    job_id: str,
    cfg: gateway.ModelConfig,
    store: Optional[gateway.FixtureStore] = None,
) -> JobRecord:
    """Advance one Pending job to Validated (or Failed). Never raises:
    failures land in the job record's reason field."""
    job = bank.get_job(job_id)
    try:
        prompt = build_prompt(job)
        bank.advance_job(job_id, "Prompted", prompt_digest=prompt.digest)

        response = gateway.complete(prompt, cfg, store=store)
        bank.advance_job(job_id, "Received", raw_response=response.text)

        provenance = Provenance(
            prompt_digest=prompt.digest,
            model_id=response.model_id,
            provider=cfg.provider.value,
            created_at=response.received_at,
        )
        result = parse_exam(response.text, job.spec, provenance)
        bank.advance_job(job_id, "Parsed", diagnostics=_diagnostics_dicts(result))

        questions = result.questions
        target_job = job_id
        if job.context.get("rejected_question_id"):
            # Regeneration: the fresh question takes the rejected one's
            # slot inside the parent job; the old record stays Rejected.
            target_job = job.parent_job_id or job_id
            ordinal = int(job.context.get("ordinal", 1))
            questions = [
                replace(q, id=new_question_id(), ordinal=ordinal) for q in questions
            ]

        report = validate(questions, job.spec)
        report_dict = report.to_dict()
        bank.put_questions(target_job, questions,
                           validation=_per_question_findings(report_dict))
        return bank.advance_job(job_id, "Validated", report=report_dict)
    except Exception as exc:  # noqa: BLE001 - the job record carries the failure
        reason = f"{type(exc).__name__}: {exc}"
        return bank.advance_job(job_id, "Failed", reason=reason)
