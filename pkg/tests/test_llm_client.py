"""LLM client tests: sessions, fingerprints, cassettes, record/replay.

All network behavior is exercised through ``httpx.MockTransport``; the
replay tests use a poisoned transport that fails the test if any request is
ever issued, proving replay mode stays offline.
"""

from __future__ import annotations

import hashlib
import json

import httpx
import pytest

from har_pioneer.errors import (
    CassetteMissError,
    ConfigurationError,
    LLMTimeoutError,
    ParseError,
    TransportError,
)
from har_pioneer.llm_client import (
    Cassette,
    ChatSession,
    LLMClient,
    LLMConfig,
    fingerprint_request,
    load_session,
    new_session,
    save_session,
)


def completion_response(text="hello"):
    return httpx.Response(
        200, json={"choices": [{"message": {"role": "assistant", "content": text}}]}
    )


def mock_transport(handler):
    return httpx.MockTransport(handler)


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test-not-real")


class PoisonedTransport(httpx.BaseTransport):
    """A transport that must never be used."""

    def handle_request(self, request):  # pragma: no cover - failure path
        raise AssertionError(f"network request issued in replay mode: {request.url}")


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------


def test_new_session_shapes():
    session = new_session()
    assert session.messages == []
    assert session.model == "gpt-4" and session.temperature == 0.0
    with_system = new_session(system_text="be terse")
    assert with_system.messages == [{"role": "system", "content": "be terse"}]


def test_session_append_validation():
    session = new_session()
    session.append("user", "hi")
    session.append("assistant", "hello")
    with pytest.raises(ConfigurationError):
        session.append("oracle", "hm")
    with pytest.raises(ConfigurationError):
        session.append("user", "")
    with pytest.raises(ConfigurationError):
        session.append("system", "too late")  # system only first
    session.append("user", "next")
    session.append("assistant", "reply")
    with pytest.raises(ConfigurationError):
        session.append("assistant", "twice")


def test_session_round_trip(tmp_path):
    session = new_session(system_text="sys", model="gpt-4", temperature=0.5)
    session.append("user", "q")
    session.append("assistant", "a")
    path = tmp_path / "session.json"
    save_session(path, session)
    loaded = load_session(path)
    assert loaded.messages == session.messages
    assert loaded.model == session.model
    assert loaded.temperature == session.temperature
    assert loaded.session_id == session.session_id
    with pytest.raises(ConfigurationError):
        load_session(tmp_path / "nope.json")


# ---------------------------------------------------------------------------
# Fingerprints
# ---------------------------------------------------------------------------


def test_fingerprint_matches_independent_construction():
    messages = [{"role": "user", "content": "hi"}]
    expected = hashlib.sha256(
        json.dumps(
            {"messages": messages, "model": "gpt-4", "temperature": 0.0},
            sort_keys=True,
            separators=(",", ":"),
        ).encode()
    ).hexdigest()
    assert fingerprint_request("gpt-4", 0.0, messages) == expected


def test_fingerprint_sensitivity():
    base = fingerprint_request("gpt-4", 0.0, [{"role": "user", "content": "hi"}])
    assert fingerprint_request("gpt-4", 0.0, [{"role": "user", "content": "hi "}]) != base
    assert fingerprint_request("gpt-4", 0.1, [{"role": "user", "content": "hi"}]) != base
    assert fingerprint_request("gpt-5", 0.0, [{"role": "user", "content": "hi"}]) != base
    # Extra keys in message dicts are ignored; the canonical form is stable.
    assert (
        fingerprint_request(
            "gpt-4", 0.0, [{"role": "user", "content": "hi", "name": "x"}]
        )
        == base
    )


# ---------------------------------------------------------------------------
# Cassettes
# ---------------------------------------------------------------------------


def test_cassette_round_trip(tmp_path):
    path = tmp_path / "cassette.json"
    cassette = Cassette(path)
    with pytest.raises(CassetteMissError):
        cassette.lookup("ab" * 32)
    cassette.store("ab" * 32, "a reply", "gpt-4")
    cassette.save()
    reloaded = Cassette(path)
    assert reloaded.lookup("ab" * 32) == "a reply"
    raw = json.loads(path.read_text())
    assert raw["version"] == 1
    entry = raw["entries"]["ab" * 32]
    assert entry["reply"] == "a reply" and entry["model"] == "gpt-4"


def test_cassette_rejects_malformed_file(tmp_path):
    path = tmp_path / "cassette.json"
    path.write_text("[]")
    with pytest.raises(ConfigurationError):
        Cassette(path)


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------


def test_config_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        LLMConfig(mode="offline")
    with pytest.raises(ConfigurationError):
        LLMConfig(timeout_s=0)
    with pytest.raises(ConfigurationError):
        LLMConfig(retries=3)
    with pytest.raises(ConfigurationError):
        LLMClient(LLMConfig(mode="replay"))  # no cassette path
    with pytest.raises(ConfigurationError):
        LLMClient(LLMConfig(mode="record"))


def test_live_mode_requires_api_key(monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    client = LLMClient(LLMConfig(mode="live"), transport=PoisonedTransport())
    with pytest.raises(ConfigurationError, match="OPENAI_API_KEY"):
        client.complete(new_session(), "hi")


def test_record_then_replay_round_trip(tmp_path, api_key):
    cassette_path = tmp_path / "cassette.json"
    seen = []

    def handler(request):
        seen.append(json.loads(request.content))
        assert request.headers["authorization"] == "Bearer sk-test-not-real"
        assert str(request.url).endswith("/chat/completions")
        return completion_response("recorded reply")

    recorder = LLMClient(
        LLMConfig(mode="record", cassette_path=str(cassette_path)),
        transport=mock_transport(handler),
    )
    session = new_session()
    reply = recorder.complete(session, "what now?")
    assert reply == "recorded reply"
    assert len(seen) == 1
    assert seen[0]["model"] == "gpt-4"
    assert seen[0]["messages"] == [{"role": "user", "content": "what now?"}]
    assert session.messages[-1] == {"role": "assistant", "content": "recorded reply"}

    # Replay with a poisoned transport: the cassette must answer.
    replayer = LLMClient(
        LLMConfig(mode="replay", cassette_path=str(cassette_path)),
        transport=PoisonedTransport(),
    )
    session2 = new_session()
    assert replayer.complete(session2, "what now?") == "recorded reply"
    assert replayer.last_fingerprint(session2) == recorder.last_fingerprint(session)


def test_replay_miss_raises(tmp_path):
    cassette_path = tmp_path / "cassette.json"
    Cassette(cassette_path).save()
    client = LLMClient(
        LLMConfig(mode="replay", cassette_path=str(cassette_path)),
        transport=PoisonedTransport(),
    )
    with pytest.raises(CassetteMissError):
        client.complete(new_session(), "unknown prompt")


def test_replay_depends_on_history(tmp_path, api_key):
    """The same prompt in a different session history misses the cassette."""
    cassette_path = tmp_path / "cassette.json"
    recorder = LLMClient(
        LLMConfig(mode="record", cassette_path=str(cassette_path)),
        transport=mock_transport(lambda r: completion_response("one")),
    )
    recorder.complete(new_session(), "q")

    replayer = LLMClient(
        LLMConfig(mode="replay", cassette_path=str(cassette_path)),
        transport=PoisonedTransport(),
    )
    fresh = new_session()
    assert replayer.complete(fresh, "q") == "one"
    with pytest.raises(CassetteMissError):
        replayer.complete(fresh, "q")  # history now differs


def test_transport_error_and_single_retry(api_key):
    calls = []

    def flaky(request):
        calls.append(1)
        if len(calls) == 1:
            return httpx.Response(500, text="boom")
        return completion_response("second try")

    client = LLMClient(
        LLMConfig(mode="live", retries=1), transport=mock_transport(flaky)
    )
    assert client.complete(new_session(), "hi") == "second try"
    assert len(calls) == 2

    calls.clear()
    strict = LLMClient(
        LLMConfig(mode="live", retries=0), transport=mock_transport(flaky)
    )
    with pytest.raises(TransportError) as err:
        strict.complete(new_session(), "hi")
    assert err.value.status_code == 500
    assert len(calls) == 1


def test_timeout_maps_to_llm_timeout(api_key):
    def sleepy(request):
        raise httpx.ReadTimeout("too slow", request=request)

    client = LLMClient(
        LLMConfig(mode="live", retries=0), transport=mock_transport(sleepy)
    )
    with pytest.raises(LLMTimeoutError):
        client.complete(new_session(), "hi")


def test_malformed_completion_shape(api_key):
    client = LLMClient(
        LLMConfig(mode="live", retries=0),
        transport=mock_transport(
            lambda r: httpx.Response(200, json={"choices": []})
        ),
    )
    with pytest.raises(ParseError):
        client.complete(new_session(), "hi")


def test_empty_prompt_rejected(tmp_path):
    Cassette(tmp_path / "c.json").save()
    client = LLMClient(LLMConfig(mode="replay", cassette_path=str(tmp_path / "c.json")))
    with pytest.raises(ConfigurationError):
        client.complete(new_session(), "")
