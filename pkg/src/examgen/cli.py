"""Command-line entry point.

Subcommands wrap the pipeline for scripted use:

    examgen generate --spec spec.json --model fixture-default --out bank.db
    examgen validate --bank bank.db [--exec]
    examgen export   --bank bank.db --format markdown
    examgen stats    --csv responses.csv
    examgen serve    --bind 127.0.0.1:8080 --bank bank.db

Exit codes: 0 success, 2 malformed input (spec/CSV/flags), 3 provider
failure, 4 validation reported errors (questions are still stored).
stdout carries data; stderr carries diagnostics.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import uuid
from typing import Optional

from . import gateway, survey
from .bank import ExamBank, export as export_document
from .pipeline import run_pipeline
from .prompting import FewShotTooSmall, InvalidSpecError, inject_few_shot, render_prompt
from .taxonomy import QuestionKind, spec_from_dict
from .validation import SandboxConfig, validate, verify_many

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_PROVIDER = 3
EXIT_VALIDATION = 4

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _load_spec(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return spec_from_dict(data)
    except FileNotFoundError:
        raise CliError(EXIT_BAD_INPUT, f"spec file not found: {path}")
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise CliError(EXIT_BAD_INPUT, f"malformed spec file {path}: {exc}")


def _exit_with(code: int, message: str) -> int:
    _err(message)
    return code


def _model_config(args: argparse.Namespace) -> gateway.ModelConfig:
    if args.provider == "fixture" or args.model == "fixture-default":
        return gateway.ModelConfig(
            provider=gateway.Provider.FIXTURE,
            model_id=args.model,
            fixtures_dir=args.fixtures,
        )
    return gateway.ModelConfig(
        provider=gateway.Provider.LIVE,
        endpoint_url=args.endpoint or os.environ.get("EXAMGEN_ENDPOINT", DEFAULT_ENDPOINT),
        model_id=args.model,
        credential_source=args.api_key_env,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    spec = _load_spec(args.spec)
    try:
        prompt = render_prompt(spec)
        if spec.few_shot_examples:
            prompt = inject_few_shot(prompt, list(spec.few_shot_examples))
    except (InvalidSpecError, FewShotTooSmall) as exc:
        return _exit_with(EXIT_BAD_INPUT, f"invalid spec: {exc}")

    if args.dry_run:
        print(prompt.text)
        return EXIT_OK

    bank = ExamBank(args.out)
    job_id = uuid.uuid4().hex
    bank.create_job(job_id, spec, args.model)
    cfg = _model_config(args)
    job = run_pipeline(bank, job_id, cfg)
    if job.state == "Failed":
        reason = job.reason or ""
        if any(tag in reason for tag in (
                "FixtureMiss", "CredentialMissing", "GatewayTimeout",
                "RetriesExhausted", "ResponseTruncated")):
            return _exit_with(EXIT_PROVIDER, f"provider failure: {reason}")
        if "InvalidSpecError" in reason:
            return _exit_with(EXIT_BAD_INPUT, f"invalid spec: {reason}")
        return _exit_with(EXIT_PROVIDER, f"pipeline failure: {reason}")

    report = job.report or {}
    stored = len(bank.list_questions(job_id=job_id))
    print(f"job {job_id}: state={job.state} questions_stored={stored}")
    print(f"validation passed: {report.get('passed')}")
    for finding in report.get("findings", []):
        print(f"  [{finding['severity']}] {finding['code']}: {finding['message']}")
    return EXIT_OK if report.get("passed") else EXIT_VALIDATION


def cmd_validate(args: argparse.Namespace) -> int:
    if not os.path.exists(args.bank):
        return _exit_with(EXIT_BAD_INPUT, f"bank file not found: {args.bank}")
    bank = ExamBank(args.bank)
    sandbox = SandboxConfig(wall_timeout=args.sandbox_timeout)
    had_errors = False
    output: dict = {"jobs": []}
    for job in bank.list_jobs():
        records = bank.list_questions(job_id=job.job_id)
        questions = [r.question for r in records]
        report = validate(questions, job.spec)
        entry = {"job_id": job.job_id, **report.to_dict()}
        if not report.passed:
            had_errors = True
        if args.exec_code:
            verdicts = verify_many(questions, sandbox)
            entry["execution"] = {
                qid: {
                    "outcome": v.outcome.value,
                    "observed_stdout": v.observed_stdout,
                    "expected": v.expected,
                    "detail": v.detail,
                }
                for qid, v in verdicts.items()
            }
        output["jobs"].append(entry)

    if args.json:
        print(json.dumps(output, indent=2))
    else:
        for entry in output["jobs"]:
            print(f"job {entry['job_id']}: passed={entry['passed']}")
            for finding in entry["findings"]:
                print(f"  [{finding['severity']}] {finding['code']}: {finding['message']}")
            for qid, verdict in entry.get("execution", {}).items():
                detail = f" ({verdict['detail']})" if verdict["detail"] else ""
                print(f"  exec {qid}: {verdict['outcome']}{detail}")
    return EXIT_VALIDATION if had_errors else EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    if not os.path.exists(args.bank):
        return _exit_with(EXIT_BAD_INPUT, f"bank file not found: {args.bank}")
    bank = ExamBank(args.bank)
    kinds = None
    if args.kinds:
        try:
            kinds = [QuestionKind(k) for k in args.kinds.split(",") if k]
        except ValueError as exc:
            return _exit_with(EXIT_BAD_INPUT, f"unknown kind: {exc}")
    document = bank.assemble(
        kinds=kinds,
        min_difficulty=args.min_difficulty,
        max_difficulty=args.max_difficulty,
        target_language=args.language,
        limit=args.limit,
        title=args.title,
        answer_key_separate=args.answer_key_separate,
    )
    payload = export_document(document, args.format)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
        _err(f"wrote {len(payload)} bytes to {args.out}")
    else:
        sys.stdout.buffer.write(payload)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        responses = survey.load_responses_csv(args.csv)
        table = survey.compute_stats(responses, sample_sd=not args.population_sd)
    except FileNotFoundError:
        return _exit_with(EXIT_BAD_INPUT, f"CSV file not found: {args.csv}")
    except survey.SurveyError as exc:
        return _exit_with(EXIT_BAD_INPUT, f"malformed survey CSV: {exc}")
    print(survey.format_table(table, args.format), end="")
    for note in table.notes:
        _err(f"note: {note}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app, default_model_configs

    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        return _exit_with(EXIT_BAD_INPUT, f"--bind must be host:port, got {args.bind}")
    configs = default_model_configs()
    if args.fixtures:
        configs["fixture-default"] = gateway.ModelConfig(
            provider=gateway.Provider.FIXTURE, fixtures_dir=args.fixtures)
    app = create_app(
        args.bank,
        model_configs=configs,
        fixtures_dir=args.fixtures,
        frontend_dir=args.frontend,
    )
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="examgen", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="run the full generation pipeline")
    gen.add_argument("--spec", required=True, help="path to an exam spec JSON file")
    gen.add_argument("--model", default="fixture-default",
                     help="model config name; anything but fixture-default is a live model id")
    gen.add_argument("--out", required=True, help="bank file to store results in")
    gen.add_argument("--provider", choices=["fixture", "live"], default=None,
                     help="force a provider regardless of --model")
    gen.add_argument("--fixtures", default=None, help="fixtures directory (digest.txt files)")
    gen.add_argument("--endpoint", default=None, help="chat-completions endpoint URL")
    gen.add_argument("--api-key-env", default="OPENAI_API_KEY",
                     help="environment variable holding the API key")
    gen.add_argument("--dry-run", action="store_true",
                     help="print the rendered prompt and exit without calling any provider")
    gen.set_defaults(func=cmd_generate)

    val = sub.add_parser("validate", help="re-validate a bank, optionally executing code")
    val.add_argument("--bank", required=True)
    val.add_argument("--exec", dest="exec_code", action="store_true",
                     help="also run sandboxed execution verification")
    val.add_argument("--sandbox-timeout", type=float, default=5.0)
    val.add_argument("--json", action="store_true", help="print the report as JSON")
    val.set_defaults(func=cmd_validate)

    exp = sub.add_parser("export", help="assemble and export accepted questions")
    exp.add_argument("--bank", required=True)
    exp.add_argument("--format", choices=["markdown", "md", "json"], default="markdown")
    exp.add_argument("--out", default=None, help="output file (default stdout)")
    exp.add_argument("--answer-key-separate", action="store_true")
    exp.add_argument("--kinds", default=None, help="comma-separated kinds filter")
    exp.add_argument("--min-difficulty", type=int, default=1)
    exp.add_argument("--max-difficulty", type=int, default=5)
    exp.add_argument("--language", default=None)
    exp.add_argument("--limit", type=int, default=None)
    exp.add_argument("--title", default="Exam")
    exp.set_defaults(func=cmd_export)

    st = sub.add_parser("stats", help="survey statistics table from a response CSV")
    st.add_argument("--csv", required=True)
    st.add_argument("--format", choices=["text", "csv"], default="text")
    st.add_argument("--population-sd", action="store_true",
                    help="use the population (n) divisor instead of the sample (n-1) one")
    st.set_defaults(func=cmd_stats)

    srv = sub.add_parser("serve", help="serve the HTTP API (and the review UI if built)")
    srv.add_argument("--bind", default="127.0.0.1:8080")
    srv.add_argument("--bank", required=True)
    srv.add_argument("--fixtures", default=None)
    srv.add_argument("--frontend", default=None, help="directory of built UI assets")
    srv.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        return _exit_with(exc.code, str(exc))
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
