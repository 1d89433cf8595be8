"""Chat-completion provider abstraction.

Two providers share one `complete()` entry point: a live HTTP client
speaking the OpenAI-compatible chat-completions protocol (single user
message, bearer token from an environment variable, exponential backoff
on 429/5xx and transport errors), and a deterministic fixture provider
keyed by prompt digest for fully offline runs.

The gateway never interprets response content; truncation is the only
content-level condition it reports, because a silently cut-off exam
would corrupt downstream count checks.
"""

from __future__ import annotations

import os
import random
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import httpx

from .prompting import PromptText

BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 2.0


class Provider(Enum):
    LIVE = "Live"
    FIXTURE = "Fixture"


class GatewayError(RuntimeError):
    pass


class CredentialMissing(GatewayError):
    pass


class GatewayTimeout(GatewayError):
    pass


class RetriesExhausted(GatewayError):
    def __init__(self, message: str, last_status: Optional[int] = None):
        super().__init__(message)
        self.last_status = last_status


class FixtureMiss(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"no fixture registered for digest {digest}")
        self.digest = digest


class ResponseTruncated(GatewayError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    provider: Provider = Provider.FIXTURE
    endpoint_url: str = ""
    model_id: str = "fixture"
    temperature: float = 0.0
    max_output_tokens: int = 8192
    timeout: float = 60.0
    max_retries: int = 3
    credential_source: str = "OPENAI_API_KEY"
    fixtures_dir: Optional[str] = None
    parallelism: int = 2

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.provider is Provider.LIVE:
            if not self.endpoint_url:
                raise ValueError("Live provider requires endpoint_url")
            if not self.credential_source:
                raise ValueError("Live provider requires credential_source")


@dataclass(frozen=True)
class RawResponse:
    text: str
    model_id: str
    attempts: int
    usage: Optional[dict] = None
    received_at: str = ""


class FixtureStore:
    """Digest-keyed response table; reads are lock-free snapshots,
    registration is serialized."""

    def __init__(self, directory: Optional[str] = None):
        self._table: dict[str, str] = {}
        self._lock = threading.Lock()
        self.directory = directory

    def register(self, digest: str, response_text: str) -> None:
        with self._lock:
            self._table[digest] = response_text

    def lookup(self, digest: str) -> Optional[str]:
        text = self._table.get(digest)
        if text is not None:
            return text
        if self.directory:
            path = Path(self.directory) / f"{digest}.txt"
            if path.is_file():
                return path.read_text(encoding="utf-8")
        return None


_default_store = FixtureStore()


def register_fixture(digest: str, response_text: str) -> None:
    """Register (or overwrite) the canned response for a prompt digest."""
    _default_store.register(digest, response_text)


def clear_fixtures() -> None:
    _default_store._table.clear()


def backoff_delays(retries: int, rng: Optional[random.Random] = None) -> list[float]:
    """Jittered exponential delays; jitter stays below the base step so
    the sequence is nondecreasing."""
    rng = rng or random.Random()
    return [
        BACKOFF_BASE_SECONDS * (BACKOFF_FACTOR ** attempt) + rng.uniform(0, BACKOFF_BASE_SECONDS)
        for attempt in range(retries)
    ]

# Live calls in flight are bounded per config by small semaphores.
_semaphores: dict[ModelConfig, threading.BoundedSemaphore] = {}
_semaphores_lock = threading.Lock()


def _semaphore_for(cfg: ModelConfig) -> threading.BoundedSemaphore:
    with _semaphores_lock:
        sem = _semaphores.get(cfg)
        if sem is None:
            sem = threading.BoundedSemaphore(max(1, cfg.parallelism))
            _semaphores[cfg] = sem
        return sem


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def complete(
    prompt: PromptText,
    cfg: ModelConfig,
    *,
    store: Optional[FixtureStore] = None,
    sleep: Callable[[float], None] = time.sleep,
    rng: Optional[random.Random] = None,
) -> RawResponse:
    """Resolve a prompt to raw model text via the configured provider."""
    if cfg.provider is Provider.FIXTURE:
        # Lookup order: caller-supplied store, process-wide registrations,
        # then the on-disk fixtures directory (one <digest>.txt per prompt).
        stores = [s for s in (store, _default_store) if s is not None]
        if cfg.fixtures_dir:
            stores.append(FixtureStore(cfg.fixtures_dir))
        for candidate in stores:
            text = candidate.lookup(prompt.digest)
            if text is not None:
                return RawResponse(
                    text=text, model_id=cfg.model_id, attempts=1,
                    usage=None, received_at=_now())
        raise FixtureMiss(prompt.digest)

    return _complete_live(prompt, cfg, sleep=sleep, rng=rng)


def _complete_live(
    prompt: PromptText,
    cfg: ModelConfig,
    *,
    sleep: Callable[[float], None],
    rng: Optional[random.Random],
) -> RawResponse:
    api_key = os.environ.get(cfg.credential_source, "")
    if not api_key:
        raise CredentialMissing(
            f"environment variable {cfg.credential_source} is not set or empty")

    payload = {
        "model": cfg.model_id,
        "messages": [{"role": "user", "content": prompt.text}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
    }
    headers = {"Authorization": f"Bearer {api_key}"}
    delays = backoff_delays(cfg.max_retries, rng)

    last_status: Optional[int] = None
    last_error: Optional[Exception] = None
    timed_out = False
    attempts = 0
    sem = _semaphore_for(cfg)

    with sem:
        for attempt in range(cfg.max_retries + 1):
            attempts = attempt + 1
            try:
                resp = httpx.post(
                    cfg.endpoint_url, json=payload, headers=headers, timeout=cfg.timeout)
            except httpx.TimeoutException as exc:
                last_error, timed_out = exc, True
            except httpx.TransportError as exc:
                last_error, timed_out = exc, False
            else:
                if resp.status_code == 200:
                    return _decode(resp, cfg, attempts)
                last_status, last_error, timed_out = resp.status_code, None, False
                if resp.status_code != 429 and resp.status_code < 500:
                    raise RetriesExhausted(
                        f"non-retryable HTTP {resp.status_code} from provider",
                        last_status=resp.status_code)
            if attempt < cfg.max_retries:
                sleep(delays[attempt])

    if timed_out:
        raise GatewayTimeout(f"request timed out after {attempts} attempt(s): {last_error}")
    detail = last_error if last_error is not None else f"HTTP {last_status}"
    raise RetriesExhausted(
        f"gave up after {attempts} attempt(s): {detail}", last_status=last_status)


def _decode(resp: httpx.Response, cfg: ModelConfig, attempts: int) -> RawResponse:
    try:
        body = resp.json()
        choice = body["choices"][0]
        content = choice["message"]["content"]
        finish = choice.get("finish_reason")
    except (KeyError, IndexError, ValueError) as exc:
        raise RetriesExhausted(f"malformed provider response: {exc}", last_status=200)
    if finish == "length":
        raise ResponseTruncated(
            "provider reported token cutoff (finish_reason=length); response is incomplete")
    return RawResponse(
        text=content,
        model_id=body.get("model", cfg.model_id),
        attempts=attempts,
        usage=body.get("usage"),
        received_at=_now(),
    )
