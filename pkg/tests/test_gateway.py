import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from examgen import gateway
from examgen.gateway import (
    CredentialMissing,
    FixtureMiss,
    FixtureStore,
    GatewayTimeout,
    ModelConfig,
    Provider,
    ResponseTruncated,
    RetriesExhausted,
    backoff_delays,
    complete,
    register_fixture,
)
from examgen.prompting import render_prompt


@pytest.fixture(autouse=True)
def clean_fixture_table():
    gateway.clear_fixtures()
    yield
    gateway.clear_fixtures()


@pytest.fixture
def fig2_prompt(fig2_spec):
    return render_prompt(fig2_spec)


FIXTURE_CFG = ModelConfig(provider=Provider.FIXTURE, model_id="fixture")


class _ScriptedHandler(BaseHTTPRequestHandler):
    """Replays a scripted list of (status, body) responses in order."""

    script: list[tuple[int, dict]] = []
    seen: list[dict] = []

    def do_POST(self):  # noqa: N802 - stdlib naming
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        type(self).seen.append({"body": body, "auth": self.headers.get("Authorization")})
        status, payload = self.script.pop(0)
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):  # quiet
        pass


@pytest.fixture
def scripted_server():
    server = HTTPServer(("127.0.0.1", 0), _ScriptedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _ScriptedHandler.script = []
    _ScriptedHandler.seen = []
    yield server
    server.shutdown()
    thread.join(timeout=5)


def _ok_payload(text: str, finish: str = "stop") -> dict:
    return {
        "model": "stub-model",
        "choices": [{"message": {"role": "assistant", "content": text},
                     "finish_reason": finish}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 20},
    }


def _live_cfg(server, retries: int = 3) -> ModelConfig:
    port = server.server_address[1]
    return ModelConfig(
        provider=Provider.LIVE,
        endpoint_url=f"http://127.0.0.1:{port}/v1/chat/completions",
        model_id="stub-model",
        max_retries=retries,
        timeout=5.0,
        credential_source="EXAMGEN_TEST_KEY",
    )


def test_fixture_round_trip(fig2_prompt):
    register_fixture(fig2_prompt.digest, "18. **Question:**\nSomething?")
    resp = complete(fig2_prompt, FIXTURE_CFG)
    assert resp.text == "18. **Question:**\nSomething?"
    assert resp.attempts == 1


def test_fixture_reregistration_overwrites(fig2_prompt):
    register_fixture(fig2_prompt.digest, "first")
    register_fixture(fig2_prompt.digest, "second")
    assert complete(fig2_prompt, FIXTURE_CFG).text == "second"


def test_fixture_miss(fig2_prompt):
    with pytest.raises(FixtureMiss):
        complete(fig2_prompt, FIXTURE_CFG)


def test_fixture_is_deterministic(fig2_prompt):
    register_fixture(fig2_prompt.digest, "payload éß")
    first = complete(fig2_prompt, FIXTURE_CFG)
    second = complete(fig2_prompt, FIXTURE_CFG)
    assert first.text == second.text == "payload éß"


def test_fixture_directory_lookup(fig2_prompt, tmp_path):
    (tmp_path / f"{fig2_prompt.digest}.txt").write_text("from disk", encoding="utf-8")
    cfg = ModelConfig(provider=Provider.FIXTURE, fixtures_dir=str(tmp_path))
    assert complete(fig2_prompt, cfg).text == "from disk"


def test_explicit_store_wins(fig2_prompt):
    store = FixtureStore()
    store.register(fig2_prompt.digest, "from store")
    register_fixture(fig2_prompt.digest, "from global")
    assert complete(fig2_prompt, FIXTURE_CFG, store=store).text == "from store"


def test_live_retries_on_503_then_succeeds(scripted_server, fig2_prompt, monkeypatch):
    monkeypatch.setenv("EXAMGEN_TEST_KEY", "sk-test")
    _ScriptedHandler.script = [
        (503, {"error": "busy"}),
        (503, {"error": "busy"}),
        (200, _ok_payload("generated exam text")),
    ]
    sleeps: list[float] = []
    resp = complete(fig2_prompt, _live_cfg(scripted_server),
                    sleep=sleeps.append, rng=random.Random(0))
    assert resp.attempts == 3
    assert resp.text == "generated exam text"
    assert len(sleeps) == 2
    assert sleeps == sorted(sleeps)
    # request shape: single user message, bearer token
    sent = _ScriptedHandler.seen[0]
    assert sent["auth"] == "Bearer sk-test"
    assert sent["body"]["messages"] == [{"role": "user", "content": fig2_prompt.text}]
    assert set(sent["body"]) == {"model", "messages", "temperature", "max_tokens"}


def test_live_retries_exhausted_carries_status(scripted_server, fig2_prompt, monkeypatch):
    monkeypatch.setenv("EXAMGEN_TEST_KEY", "sk-test")
    _ScriptedHandler.script = [(503, {}), (503, {}), (503, {})]
    with pytest.raises(RetriesExhausted) as exc:
        complete(fig2_prompt, _live_cfg(scripted_server, retries=2),
                 sleep=lambda _: None)
    assert exc.value.last_status == 503


def test_live_non_retryable_4xx_fails_fast(scripted_server, fig2_prompt, monkeypatch):
    monkeypatch.setenv("EXAMGEN_TEST_KEY", "sk-test")
    _ScriptedHandler.script = [(401, {"error": "bad key"})]
    with pytest.raises(RetriesExhausted) as exc:
        complete(fig2_prompt, _live_cfg(scripted_server), sleep=lambda _: None)
    assert exc.value.last_status == 401
    assert len(_ScriptedHandler.seen) == 1


def test_live_truncation_is_an_error(scripted_server, fig2_prompt, monkeypatch):
    monkeypatch.setenv("EXAMGEN_TEST_KEY", "sk-test")
    _ScriptedHandler.script = [(200, _ok_payload("partial", finish="length"))]
    with pytest.raises(ResponseTruncated):
        complete(fig2_prompt, _live_cfg(scripted_server), sleep=lambda _: None)


def test_credential_missing(fig2_prompt, monkeypatch, scripted_server):
    monkeypatch.delenv("EXAMGEN_TEST_KEY", raising=False)
    with pytest.raises(CredentialMissing):
        complete(fig2_prompt, _live_cfg(scripted_server), sleep=lambda _: None)
    assert _ScriptedHandler.seen == []  # no request went out


def test_timeout_surfaces_as_gateway_timeout(fig2_prompt, monkeypatch):
    monkeypatch.setenv("EXAMGEN_TEST_KEY", "sk-test")
    # unroutable per RFC 5737; connect attempt times out
    cfg = ModelConfig(
        provider=Provider.LIVE,
        endpoint_url="http://192.0.2.1:9/v1/chat/completions",
        max_retries=1,
        timeout=0.2,
        credential_source="EXAMGEN_TEST_KEY",
    )
    with pytest.raises((GatewayTimeout, RetriesExhausted)):
        complete(fig2_prompt, cfg, sleep=lambda _: None)


def test_backoff_delays_nondecreasing_property():
    for seed in range(200):
        delays = backoff_delays(6, random.Random(seed))
        assert delays == sorted(delays)
        assert all(d >= 1.0 for d in delays)


def test_config_invariants():
    with pytest.raises(ValueError):
        ModelConfig(provider=Provider.LIVE, endpoint_url="", credential_source="KEY")
    with pytest.raises(ValueError):
        ModelConfig(temperature=-0.1)
    # Fixture ignores endpoint/credentials entirely
    ModelConfig(provider=Provider.FIXTURE, endpoint_url="", credential_source="")


def test_gateway_never_interprets_content(fig2_prompt):
    garbled = "\x00\x01 not an exam at all ☃"
    register_fixture(fig2_prompt.digest, garbled)
    assert complete(fig2_prompt, FIXTURE_CFG).text == garbled


def test_parallelism_bound_limits_in_flight_calls(fig2_prompt, monkeypatch):
    import time
    from http.server import ThreadingHTTPServer

    monkeypatch.setenv("EXAMGEN_TEST_KEY", "sk-test")
    in_flight = {"now": 0, "peak": 0}
    gate = threading.Lock()

    class SlowHandler(BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802
            with gate:
                in_flight["now"] += 1
                in_flight["peak"] = max(in_flight["peak"], in_flight["now"])
            time.sleep(0.15)
            length = int(self.headers.get("Content-Length", 0))
            self.rfile.read(length)
            data = json.dumps(_ok_payload("ok")).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
            with gate:
                in_flight["now"] -= 1

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), SlowHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        cfg = ModelConfig(
            provider=Provider.LIVE,
            endpoint_url=f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions",
            credential_source="EXAMGEN_TEST_KEY",
            parallelism=2,
        )
        workers = [
            threading.Thread(target=complete, args=(fig2_prompt, cfg))
            for _ in range(5)
        ]
        for w in workers:
            w.start()
        for w in workers:
            w.join(timeout=30)
        assert in_flight["peak"] <= 2
        assert in_flight["peak"] >= 1
    finally:
        server.shutdown()
        thread.join(timeout=5)
