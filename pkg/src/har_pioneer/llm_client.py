"""Minimal chat-completions client with record/replay cassettes.

The client speaks the generic chat-completions JSON shape (POST
``{base_url}/chat/completions`` with ``{model, messages, temperature}``) so
any compatible provider works. Three modes:

* ``live``   - network call, nothing persisted;
* ``record`` - network call, reply stored in the cassette file;
* ``replay`` - cassette lookup only; guaranteed to perform zero network
  operations (tests inject a transport that fails on any request).

Requests are keyed by a fingerprint: the SHA-256 of the canonical JSON of
``{model, temperature, messages}``. Credentials never enter the fingerprint
or the cassette.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import httpx

from har_pioneer.errors import (
    CassetteMissError,
    ConfigurationError,
    LLMTimeoutError,
    ParseError,
    TransportError,
)

DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4"
DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"
_ROLES = ("system", "user", "assistant")


@dataclass
class ChatSession:
    """Append-only message list for one logical conversation."""

    session_id: str
    model: str
    temperature: float
    messages: list[dict] = field(default_factory=list)

    def append(self, role: str, content: str) -> None:
        if role not in _ROLES:
            raise ConfigurationError(f"unknown chat role {role!r}")
        if not content:
            raise ConfigurationError("chat message content must be non-empty")
        if (
            role == "assistant"
            and self.messages
            and self.messages[-1]["role"] == "assistant"
        ):
            raise ConfigurationError(
                "two consecutive assistant messages are not allowed"
            )
        if role == "system" and self.messages:
            raise ConfigurationError("a system message must come first")
        self.messages.append({"role": role, "content": content})

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "model": self.model,
            "temperature": self.temperature,
            "messages": [dict(m) for m in self.messages],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ChatSession":
        session = cls(
            session_id=str(raw["session_id"]),
            model=str(raw["model"]),
            temperature=float(raw["temperature"]),
        )
        for message in raw.get("messages", []):
            session.append(str(message["role"]), str(message["content"]))
        return session


def new_session(
    system_text: str | None = None,
    model: str = DEFAULT_MODEL,
    temperature: float = 0.0,
) -> ChatSession:
    """Fresh session with no history (optionally one system message)."""
    session = ChatSession(
        session_id=uuid.uuid4().hex, model=model, temperature=temperature
    )
    if system_text:
        session.append("system", system_text)
    return session


def save_session(path: str | Path, session: ChatSession) -> None:
    Path(path).write_text(
        json.dumps(session.to_dict(), indent=2, sort_keys=True) + "\n"
    )


def load_session(path: str | Path) -> ChatSession:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"session file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"session file {path} is not valid JSON: {exc}"
        ) from None
    try:
        return ChatSession.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed session file {path}: {exc}") from None


def fingerprint_request(
    model: str, temperature: float, messages: Sequence[dict]
) -> str:
    """Stable request key, independent of serialization whitespace/headers."""
    canonical = json.dumps(
        {
            "model": model,
            "temperature": temperature,
            "messages": [
                {"role": m["role"], "content": m["content"]} for m in messages
            ],
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Cassette:
    """Fingerprint -> recorded reply store, persisted as readable JSON."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.entries: dict[str, dict] = {}
        if self.path.exists():
            try:
                raw = json.loads(self.path.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigurationError(
                    f"cassette file {self.path} is not valid JSON: {exc}"
                ) from None
            if not isinstance(raw, dict) or not isinstance(
                raw.get("entries", {}), dict
            ):
                raise ConfigurationError(
                    f"cassette file {self.path} must be a mapping with an "
                    f'"entries" table'
                )
            self.entries = dict(raw.get("entries", {}))

    def lookup(self, fingerprint: str) -> str:
        entry = self.entries.get(fingerprint)
        if entry is None:
            raise CassetteMissError(fingerprint)
        return entry["reply"]

    def store(self, fingerprint: str, reply: str, model: str) -> None:
        self.entries[fingerprint] = {
            "reply": reply,
            "model": model,
            "recorded_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        self.save()

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(
            json.dumps(
                {"version": 1, "entries": self.entries},
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
        tmp.replace(self.path)


@dataclass(frozen=True)
class LLMConfig:
    """Client configuration; mode decides whether the network is touched."""

    mode: str = "replay"
    base_url: str = DEFAULT_BASE_URL
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    timeout_s: float = 120.0
    api_key_env: str = DEFAULT_API_KEY_ENV
    cassette_path: str | None = None
    retries: int = 1

    def __post_init__(self):
        if self.mode not in ("live", "record", "replay"):
            raise ConfigurationError(
                f'mode must be "live", "record" or "replay", got {self.mode!r}'
            )
        if self.timeout_s <= 0:
            raise ConfigurationError("timeout_s must be positive")
        if self.retries not in (0, 1):
            raise ConfigurationError("retries must be 0 or 1 (single retry)")


class LLMClient:
    """Chat-completions client honoring the configured mode.

    ``transport`` is an optional httpx transport, injected by tests; replay
    mode never constructs an HTTP client at all.
    """

    def __init__(
        self,
        config: LLMConfig,
        transport: httpx.BaseTransport | None = None,
    ):
        self.config = config
        self._transport = transport
        self._cassette: Cassette | None = None
        if config.mode in ("record", "replay"):
            if not config.cassette_path:
                raise ConfigurationError(
                    f"{config.mode} mode requires a cassette path"
                )
            self._cassette = Cassette(config.cassette_path)

    # -- network ------------------------------------------------------------

    def _post_once(self, messages: list[dict]) -> str:
        api_key = os.environ.get(self.config.api_key_env, "")
        if not api_key:
            raise ConfigurationError(
                f"{self.config.mode} mode needs an API key in "
                f"${self.config.api_key_env}"
            )
        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
        }
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        try:
            with httpx.Client(
                transport=self._transport, timeout=self.config.timeout_s
            ) as client:
                response = client.post(
                    url,
                    json=payload,
                    headers={"Authorization": f"Bearer {api_key}"},
                )
        except httpx.TimeoutException as exc:
            raise LLMTimeoutError(
                f"no reply within {self.config.timeout_s:g}s: {exc}"
            ) from None
        if not (200 <= response.status_code < 300):
            raise TransportError(response.status_code, response.text[:200])
        try:
            body = response.json()
            reply = body["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise ParseError(
                f"chat endpoint reply is not in chat-completions shape: {exc}"
            ) from None
        if not isinstance(reply, str) or not reply:
            raise ParseError("chat endpoint returned an empty reply")
        return reply

    def _post(self, messages: list[dict]) -> str:
        try:
            return self._post_once(messages)
        except (TransportError, LLMTimeoutError):
            if self.config.retries < 1:
                raise
            return self._post_once(messages)

    # -- public -------------------------------------------------------------

    def complete(self, session: ChatSession, prompt: str) -> str:
        """Send ``prompt`` in ``session``; append user+assistant messages."""
        if not prompt:
            raise ConfigurationError("prompt must be non-empty")
        messages = session.messages + [{"role": "user", "content": prompt}]
        fingerprint = fingerprint_request(
            self.config.model, self.config.temperature, messages
        )
        if self.config.mode == "replay":
            assert self._cassette is not None
            reply = self._cassette.lookup(fingerprint)
        else:
            reply = self._post(messages)
            if self.config.mode == "record":
                assert self._cassette is not None
                self._cassette.store(fingerprint, reply, self.config.model)
        session.append("user", prompt)
        session.append("assistant", reply)
        return reply

    def last_fingerprint(self, session: ChatSession) -> str:
        """Fingerprint of the most recent request in ``session``."""
        if not session.messages or session.messages[-1]["role"] != "assistant":
            raise ConfigurationError("session has no completed exchange")
        return fingerprint_request(
            self.config.model, self.config.temperature, session.messages[:-1]
        )
