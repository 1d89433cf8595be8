"""HTTP facade over the generation pipeline for the review UI and scripts.

Routes (JSON bodies unless stated):
    POST /jobs                          create a generation job
    GET  /jobs                          list jobs
    GET  /jobs/{id}                     poll job state
    GET  /questions?job=&status=        question views with findings
    POST /questions/{id}/curate         accept | reject | edit(patch)
    POST /questions/{id}/regenerate     single-question replacement job
    GET  /export?format=markdown|json   exam download (Accepted only)
    GET|POST /stats                     survey stats over a CSV body
    GET  /healthz                       liveness

Jobs run asynchronously on a small worker pool; clients poll. There is
no authentication: the server is meant to bind to loopback.
"""

from __future__ import annotations

import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import replace
from enum import Enum
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from . import survey as survey_mod
from .bank import BankRecord, ExamBank, UnknownId, export
from .gateway import FixtureStore, ModelConfig, Provider
from .pipeline import run_pipeline
from .prompting import render_regeneration_prompt
from .taxonomy import (
    ALLOWED_TRANSITIONS,
    CurationStatus,
    IllegalTransition,
    OptionItem,
    Question,
    QuestionKind,
    answer_from_dict,
    question_to_dict,
    spec_from_dict,
    spec_to_dict,
    validate_spec,
)
from .validation import FindingSeverity, validate, validate_question


class JobState(Enum):
    PENDING = "Pending"
    PROMPTED = "Prompted"
    RECEIVED = "Received"
    PARSED = "Parsed"
    VALIDATED = "Validated"
    FAILED = "Failed"


def default_model_configs() -> dict[str, ModelConfig]:
    return {"fixture-default": ModelConfig(provider=Provider.FIXTURE, model_id="fixture")}


def question_view(record: BankRecord) -> dict:
    q = record.question
    return {
        **question_to_dict(q),
        "job_id": record.job_id,
        "validation": record.validation or [],
        "updated_at": record.updated_at,
        "allowed_transitions": sorted(s.value for s in ALLOWED_TRANSITIONS[q.status]),
    }


def create_app(
    bank_path: str,
    model_configs: Optional[dict[str, ModelConfig]] = None,
    fixtures_dir: Optional[str] = None,
    frontend_dir: Optional[str] = None,
    max_workers: int = 2,
) -> FastAPI:
    bank = ExamBank(bank_path)
    configs = model_configs or default_model_configs()
    store = FixtureStore(fixtures_dir) if fixtures_dir else None
    executor = ThreadPoolExecutor(max_workers=max_workers)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        executor.shutdown(wait=True)
        bank.close()

    app = FastAPI(title="examgen", version="0.1.0", lifespan=lifespan)
    app.state.bank = bank
    app.state.configs = configs
    app.state.fixture_store = store
    app.state.executor = executor

    def job_view(job_id: str) -> dict:
        job = bank.get_job(job_id)
        records = bank.list_questions(job_id=job_id)
        errors = sum(1 for d in job.diagnostics if d["severity"] == "Error")
        warnings = sum(1 for d in job.diagnostics if d["severity"] == "Warning")
        report = job.report
        if job.state == "Validated" and not job.context.get("rejected_question_id"):
            # curation changes the exam after the pipeline snapshot, so the
            # whole-exam report recomputes lazily here over the questions
            # still in play (Rejected ones are out pending replacement);
            # regeneration child jobs keep their pipeline report since their
            # output lives in the parent job
            current = [r.question for r in records
                       if r.question.status is not CurationStatus.REJECTED]
            report = validate(current, job.spec).to_dict()
        return {
            "job_id": job.job_id,
            "parent_job_id": job.parent_job_id,
            "state": job.state,
            "reason": job.reason,
            "spec": spec_to_dict(job.spec),
            "model_config": job.model_config,
            "prompt_digest": job.prompt_digest,
            "diagnostics_summary": {"errors": errors, "warnings": warnings},
            "diagnostics": job.diagnostics,
            "report": report,
            "transitions": job.transitions,
            "question_ids": [r.question.id for r in records],
            "created_at": job.created_at,
            "updated_at": job.updated_at,
        }

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/jobs", status_code=201)
    def create_job(body: dict) -> dict:
        model_name = body.get("model", "fixture-default")
        if model_name not in configs:
            raise HTTPException(status_code=404, detail=f"unknown model config '{model_name}'")
        try:
            spec = spec_from_dict(body.get("spec") or {})
        except (KeyError, ValueError, TypeError) as exc:
            return JSONResponse(
                status_code=400,
                content={"errors": ["MalformedSpec"], "detail": str(exc)})
        errors = validate_spec(spec)
        if errors:
            return JSONResponse(
                status_code=400,
                content={
                    "errors": [e.code for e in errors],
                    "detail": "; ".join(f"{e.code}: {e.message}" for e in errors),
                })
        job_id = uuid.uuid4().hex
        bank.create_job(job_id, spec, model_name)
        executor.submit(run_pipeline, bank, job_id, configs[model_name], store)
        return {"job_id": job_id, "state": JobState.PENDING.value}

    @app.get("/jobs")
    def list_jobs() -> list[dict]:
        return [job_view(job.job_id) for job in bank.list_jobs()]

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        try:
            return job_view(job_id)
        except UnknownId:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")

    @app.get("/questions")
    def list_questions(job: Optional[str] = None, status: Optional[str] = None) -> list[dict]:
        status_filter = None
        if status:
            try:
                status_filter = CurationStatus(status)
            except ValueError:
                raise HTTPException(status_code=400, detail=f"unknown status '{status}'")
        records = bank.list_questions(job_id=job, status=status_filter)
        return [question_view(r) for r in records]

    def _apply_patch(question: Question, patch: dict) -> Question:
        updates: dict = {}
        if "stem" in patch:
            updates["stem"] = str(patch["stem"])
        if "explanation" in patch:
            updates["explanation"] = str(patch["explanation"])
        if "options" in patch:
            updates["options"] = tuple(
                OptionItem(label=str(o["label"]), text=str(o["text"]))
                for o in patch["options"])
        if "answer" in patch:
            updates["answer"] = answer_from_dict(patch["answer"])
        if not updates:
            raise HTTPException(
                status_code=422,
                detail="patch must set at least one of stem, options, answer, explanation")
        return replace(question, **updates)

    @app.post("/questions/{question_id}/curate")
    def curate(question_id: str, body: dict) -> dict:
        action = body.get("action")
        try:
            record = bank.get_question(question_id)
        except UnknownId:
            raise HTTPException(status_code=404, detail=f"unknown question {question_id}")

        if action in ("accept", "reject"):
            target = (CurationStatus.ACCEPTED if action == "accept"
                      else CurationStatus.REJECTED)
            try:
                updated = bank.set_status(question_id, target)
            except IllegalTransition as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            return question_view(updated)

        if action == "edit":
            patch = body.get("patch") or {}
            try:
                patched = _apply_patch(record.question, patch)
            except (KeyError, ValueError, TypeError) as exc:
                raise HTTPException(status_code=422, detail=f"malformed patch: {exc}")
            spec = bank.get_job(record.job_id).spec
            before = {
                f.code for f in validate_question(record.question, spec)
                if f.severity is FindingSeverity.ERROR
            }
            findings = validate_question(patched, spec)
            introduced = [
                f for f in findings
                if f.severity is FindingSeverity.ERROR and f.code not in before
            ]
            finding_dicts = [
                {"severity": f.severity.value, "code": f.code,
                 "message": f.message, "question_id": f.question_id}
                for f in findings
            ]
            if introduced:
                raise HTTPException(
                    status_code=422,
                    detail={
                        "message": "edit breaks question invariants",
                        "findings": [
                            {"code": f.code, "message": f.message} for f in introduced
                        ],
                    })
            updated = bank.update_question(patched, validation=finding_dicts)
            return question_view(updated)

        raise HTTPException(
            status_code=422, detail="action must be accept, reject or edit")

    @app.post("/questions/{question_id}/regenerate", status_code=201)
    def regenerate(question_id: str) -> dict:
        try:
            record = bank.get_question(question_id)
        except UnknownId:
            raise HTTPException(status_code=404, detail=f"unknown question {question_id}")
        rejected = record.question
        if rejected.status is not CurationStatus.REJECTED:
            raise HTTPException(
                status_code=409,
                detail=f"question is {rejected.status.value}; only Rejected questions regenerate")

        parent = bank.get_job(record.job_id)
        siblings = [
            r.question.stem for r in bank.list_questions(job_id=record.job_id)
            if r.question.id != question_id
        ]
        prompt = render_regeneration_prompt(parent.spec, rejected, siblings)
        difficulty = rejected.difficulty if rejected.difficulty is not None else 3
        child_spec = replace(
            parent.spec, total=1, distribution={difficulty: 1}, few_shot_examples=None)
        child_id = uuid.uuid4().hex
        bank.create_job(
            child_id, child_spec, parent.model_config,
            parent_job_id=record.job_id,
            context={
                "rejected_question_id": question_id,
                "ordinal": rejected.ordinal,
                "prompt_text": prompt.text,
            })
        cfg = configs.get(parent.model_config) or next(iter(configs.values()))
        executor.submit(run_pipeline, bank, child_id, cfg, store)
        return {"job_id": child_id, "state": JobState.PENDING.value}

    @app.get("/export")
    def export_endpoint(
        format: str = Query("markdown"),
        answer_key_separate: bool = Query(False),
        kinds: Optional[str] = Query(None),
        min_difficulty: int = Query(1),
        max_difficulty: int = Query(5),
        language: Optional[str] = Query(None),
        limit: Optional[int] = Query(None),
        title: str = Query("Exam"),
    ) -> Response:
        fmt = format.lower()
        if fmt not in ("markdown", "md", "json"):
            raise HTTPException(status_code=400, detail=f"unknown format '{format}'")
        kind_list = None
        if kinds:
            try:
                kind_list = [QuestionKind(k) for k in kinds.split(",") if k]
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        document = bank.assemble(
            kinds=kind_list,
            min_difficulty=min_difficulty,
            max_difficulty=max_difficulty,
            target_language=language,
            limit=limit,
            title=title,
            answer_key_separate=answer_key_separate,
        )
        payload = export(document, fmt)
        if fmt == "json":
            return Response(
                content=payload, media_type="application/json",
                headers={"Content-Disposition": "attachment; filename=exam.json"})
        return Response(
            content=payload, media_type="text/markdown; charset=utf-8",
            headers={"Content-Disposition": "attachment; filename=exam.md"})

    async def _stats_impl(request: Request, fmt: str) -> Response:
        raw = await request.body()
        if not raw.strip():
            raise HTTPException(status_code=400, detail="request body must be the survey CSV")
        try:
            responses = survey_mod.parse_responses_csv(raw.decode("utf-8"))
            table = survey_mod.compute_stats(responses)
        except survey_mod.SurveyError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if fmt == "csv":
            return PlainTextResponse(survey_mod.format_table(table, "csv"), media_type="text/csv")
        if fmt == "json":
            cells = [
                {"group": group.value, "item": item,
                 "mean": cell.mean, "sd": cell.sd, "n": cell.n}
                for (group, item), cell in sorted(
                    table.cells.items(), key=lambda kv: (kv[0][1], kv[0][0].value))
            ]
            return JSONResponse({
                "cells": cells,
                "text": survey_mod.format_table(table, "text"),
                "csv": survey_mod.format_table(table, "csv"),
                "notes": table.notes,
            })
        return PlainTextResponse(survey_mod.format_table(table, "text"))

    @app.get("/stats")
    async def stats_get(request: Request, format: str = Query("text")) -> Response:
        return await _stats_impl(request, format.lower())

    @app.post("/stats")
    async def stats_post(request: Request, format: str = Query("text")) -> Response:
        return await _stats_impl(request, format.lower())

    if frontend_dir and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
