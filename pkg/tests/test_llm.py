import socket

import pytest

from coincidence.llm import (
    AuthFailure,
    ChatClient,
    EndpointUnreachable,
    ExhaustedRetries,
    LMEndpointConfig,
    RequestRejected,
    collect,
    lm_responder,
)
from coincidence.prompts import render_zero_shot
from coincidence.responders import NO, YES

from stub_server import StubServer

KEY_ENV = "COINCIDENCE_TEST_KEY"


@pytest.fixture
def server():
    with StubServer() as s:
        yield s


@pytest.fixture
def key(monkeypatch):
    monkeypatch.setenv(KEY_ENV, "sk-test")


def _config(url, **kw):
    kw.setdefault("backoff_initial", 0.01)
    return LMEndpointConfig(base_url=url, model_name="stub-model", api_key_env_var=KEY_ENV, **kw)


def test_round_trip(server, key):
    text = lm_responder(_config(server.url), render_zero_shot([64, 96], 49))
    assert text == "yes"
    (req,) = server.state.requests
    assert req["path"] == "/v1/chat/completions"
    assert req["auth"] == "Bearer sk-test"
    assert req["body"]["model"] == "stub-model"
    assert req["body"]["temperature"] == 0
    assert req["body"]["messages"] == [{"role": "user", "content": render_zero_shot([64, 96], 49).text}]


def test_retry_after_429(server, key):
    server.state.statuses = [429, 429]
    server.state.retry_after = 0
    sleeps = []
    with ChatClient(_config(server.url), sleep=sleeps.append) as client:
        c = client.complete("hello")
    assert (c.text, c.attempts) == ("yes", 3)
    assert sleeps == [0.0, 0.0]
    assert len(server.state.requests) == 3


def test_backoff_schedule_without_retry_after(server, key):
    server.state.statuses = [503, 503, 503]
    sleeps = []
    cfg = _config(server.url, backoff_initial=1.0, backoff_factor=2.0, backoff_max=3.0)
    with ChatClient(cfg, sleep=sleeps.append) as client:
        assert client.complete("x").attempts == 4
    assert sleeps == [1.0, 2.0, 3.0]


def test_validation_error_not_retried(server, key):
    server.state.statuses = [400]
    with ChatClient(_config(server.url), sleep=lambda s: None) as client:
        with pytest.raises(RequestRejected):
            client.complete("x")
    assert len(server.state.requests) == 1


def test_auth_status(server, key):
    server.state.statuses = [401]
    with ChatClient(_config(server.url), sleep=lambda s: None) as client:
        with pytest.raises(AuthFailure):
            client.complete("x")


def test_exhausted(server, key):
    server.state.statuses = [500] * 10
    with ChatClient(_config(server.url, max_attempts=3), sleep=lambda s: None) as client:
        with pytest.raises(ExhaustedRetries):
            client.complete("x")
    assert len(server.state.requests) == 3


def test_unreachable(key):
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    with ChatClient(_config(f"http://127.0.0.1:{port}", max_attempts=2), sleep=lambda s: None) as client:
        with pytest.raises(EndpointUnreachable):
            client.complete("x")


def test_missing_key_fails_before_network(server, monkeypatch):
    monkeypatch.delenv(KEY_ENV, raising=False)
    with pytest.raises(AuthFailure):
        ChatClient(_config(server.url))
    assert server.state.requests == []


def test_config_validation():
    with pytest.raises(ValueError):
        LMEndpointConfig("http://x", "m", temperature=0.7)
    with pytest.raises(ValueError):
        LMEndpointConfig("http://x", "m", max_concurrent_requests=0)
    assert LMEndpointConfig("http://x", "m", backoff_max=5).backoff(10) == 5


def test_concurrency_bound_and_ordering(server, key):
    server.state.delay = 0.05
    server.state.reply = lambda prompt: "No." if "produce 7?" in prompt else "Yes."
    prompts = [render_zero_shot([2], q, set_id=f"s{q % 3}") for q in range(1, 25)]
    seen = []
    with ChatClient(_config(server.url, max_concurrent_requests=3)) as client:
        judgments, failures = collect(client, prompts, "llm", on_result=seen.append)
    assert failures == []
    assert len(judgments) == len(seen) == 24
    assert 2 <= server.state.max_in_flight <= 3
    assert [j.key for j in judgments] == sorted((j.key for j in judgments), key=lambda k: (k[0], str(k[1])))
    by_query = {j.query: j for j in judgments}
    assert by_query[7].decision == NO and by_query[8].decision == YES
    assert by_query[7].raw_text == "No."


def test_collect_records_failures(server, key):
    server.state.statuses = [400]
    server.state.delay = 0.0
    prompts = [render_zero_shot([2], 4, set_id="a")]
    with ChatClient(_config(server.url, max_concurrent_requests=1)) as client:
        judgments, failures = collect(client, prompts, "llm")
    assert judgments == []
    assert failures[0].error == "RequestRejected" and failures[0].record()["set_id"] == "a"
