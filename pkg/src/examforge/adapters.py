"""LLM adapters: scripted mocks for tests, HTTP clients for live runs.

Every pipeline stage that talks to a model goes through one of two small
interfaces:

- ``TeacherAdapter.generate(prompt, attachments, attempt, item_id=...)``
  produces one candidate solution per call.
- ``ModelAdapter.answer(question_text, image_refs, item_id=...)`` produces
  one benchmark response per call.

``item_id`` is passed alongside the prompt so scripted mocks can be keyed by
``(item_id, attempt)`` exactly as campaign scripts are written; live adapters
ignore it except for journaling.

The live adapters speak a chat-completions-style HTTP API: POST
``{base_url}/chat/completions`` with ``{"model": ..., "messages": [...]}``,
bearer token read from an environment variable named in config. Calls are
rate limited by a token bucket and retried with exponential backoff; every
request/response pair is appended to a JSONL journal when one is configured.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence, runtime_checkable

import requests


class AdapterError(Exception):
    """A model call failed after exhausting retries."""


@runtime_checkable
class TeacherAdapter(Protocol):
    def generate(
        self,
        prompt: str,
        attachments: Sequence[str] = (),
        attempt: int = 1,
        *,
        item_id: str | None = None,
    ) -> str: ...


@runtime_checkable
class ModelAdapter(Protocol):
    def answer(
        self,
        question_text: str,
        image_refs: Sequence[str] = (),
        *,
        item_id: str | None = None,
    ) -> str: ...


RAISE = "__RAISE__"  # script sentinel: simulate an adapter failure


def _script_lookup(script: Mapping[str, Any], item_id: str, attempt: int) -> str | None:
    """Resolve (item_id, attempt) in a mock script.

    Scripts map item ids either to a list of candidates (attempt 1 is index
    0) or to an object keyed by attempt number.
    """
    entry = script.get(item_id)
    if entry is None:
        return None
    if isinstance(entry, list):
        if 1 <= attempt <= len(entry):
            return entry[attempt - 1]
        return None
    if isinstance(entry, Mapping):
        if attempt in entry:
            return entry[attempt]
        return entry.get(str(attempt))
    if isinstance(entry, str):
        return entry
    raise TypeError(f"script entry for {item_id!r} must be str, list, or mapping")


@dataclass
class ScriptedTeacher:
    """Deterministic teacher driven by a (item_id, attempt) -> text script.

    The sentinel value ``__RAISE__`` simulates a network failure. A missing
    entry falls back to ``default``; with no default it is an error in the
    script and raises ``KeyError`` loudly.
    """

    script: Mapping[str, Any]
    default: str | None = None
    calls: int = 0

    @classmethod
    def from_file(cls, path: str | Path, default: str | None = None) -> "ScriptedTeacher":
        with open(path, "r", encoding="utf-8") as handle:
            return cls(script=json.load(handle), default=default)

    def generate(
        self,
        prompt: str,
        attachments: Sequence[str] = (),
        attempt: int = 1,
        *,
        item_id: str | None = None,
    ) -> str:
        self.calls += 1
        candidate = _script_lookup(self.script, item_id or "", attempt)
        if candidate is None:
            if self.default is not None:
                return self.default
            raise KeyError(f"no scripted candidate for ({item_id!r}, attempt {attempt})")
        if candidate == RAISE:
            raise AdapterError(f"scripted failure for ({item_id!r}, attempt {attempt})")
        return candidate


@dataclass
class ScriptedModel:
    """Deterministic benchmark responder keyed by item id."""

    responses: Mapping[str, str]
    default: str | None = None
    calls: int = 0

    @classmethod
    def from_file(cls, path: str | Path, default: str | None = None) -> "ScriptedModel":
        with open(path, "r", encoding="utf-8") as handle:
            return cls(responses=json.load(handle), default=default)

    def answer(
        self,
        question_text: str,
        image_refs: Sequence[str] = (),
        *,
        item_id: str | None = None,
    ) -> str:
        self.calls += 1
        response = self.responses.get(item_id or "")
        if response is None:
            if self.default is not None:
                return self.default
            raise KeyError(f"no scripted response for item {item_id!r}")
        if response == RAISE:
            raise AdapterError(f"scripted failure for item {item_id!r}")
        return response


class RateLimiter:
    """Thread-safe token bucket: at most ``rate`` acquisitions per second."""

    def __init__(self, rate: float, burst: int = 1):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = max(1, burst)
        self._tokens = float(self.capacity)
        self._updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(
                    self.capacity, self._tokens + (now - self._updated) * self.rate
                )
                self._updated = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            time.sleep(wait)


class RequestJournal:
    """Append-only JSONL log of adapter request/response pairs."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def record(self, entry: Mapping[str, Any]) -> None:
        line = json.dumps(entry, ensure_ascii=False)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line + "\n")


@dataclass
class HttpAdapterConfig:
    """Settings shared by the live teacher and model adapters."""

    base_url: str
    model: str
    auth_env: str = "EXAMFORGE_API_TOKEN"
    timeout: float = 60.0
    max_retries: int = 3
    backoff: float = 1.0
    rate_per_second: float = 2.0
    journal_path: str | None = None

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "HttpAdapterConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in data.items() if k in known}
        missing = {"base_url", "model"} - set(kwargs)
        if missing:
            raise ValueError(f"adapter config missing keys: {sorted(missing)}")
        return cls(**kwargs)


class _HttpChatClient:
    def __init__(self, config: HttpAdapterConfig):
        self.config = config
        self.limiter = RateLimiter(config.rate_per_second, burst=1)
        self.journal = RequestJournal(config.journal_path) if config.journal_path else None
        self._session = requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, messages: list[dict[str, Any]], *, item_id: str | None) -> str:
        body = {"model": self.config.model, "messages": messages}
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        last_error: Exception | None = None
        for retry in range(self.config.max_retries + 1):
            self.limiter.acquire()
            try:
                response = self._session.post(
                    url, json=body, headers=self._headers(), timeout=self.config.timeout
                )
                if response.status_code >= 500 or response.status_code == 429:
                    raise AdapterError(f"HTTP {response.status_code}: {response.text[:200]}")
                response.raise_for_status()
                payload = response.json()
                text = payload["choices"][0]["message"]["content"]
                if self.journal is not None:
                    self.journal.record(
                        {"item_id": item_id, "request": body, "response": payload}
                    )
                return text
            except (requests.RequestException, AdapterError, KeyError, ValueError) as exc:
                last_error = exc
                if retry < self.config.max_retries:
                    time.sleep(self.config.backoff * (2**retry))
        if self.journal is not None:
            self.journal.record({"item_id": item_id, "request": body, "error": str(last_error)})
        raise AdapterError(f"request failed after {self.config.max_retries + 1} tries: {last_error}")


@dataclass
class HttpTeacher:
    """Live teacher over a chat-completions endpoint."""

    config: HttpAdapterConfig
    _client: _HttpChatClient = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._client = _HttpChatClient(self.config)

    def generate(
        self,
        prompt: str,
        attachments: Sequence[str] = (),
        attempt: int = 1,
        *,
        item_id: str | None = None,
    ) -> str:
        content: Any = prompt
        if attachments:
            content = [{"type": "text", "text": prompt}] + [
                {"type": "image_ref", "path": ref} for ref in attachments
            ]
        messages = [{"role": "user", "content": content}]
        return self._client.complete(messages, item_id=item_id)


@dataclass
class HttpModel:
    """Live benchmark responder over a chat-completions endpoint."""

    config: HttpAdapterConfig
    _client: _HttpChatClient = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._client = _HttpChatClient(self.config)

    def answer(
        self,
        question_text: str,
        image_refs: Sequence[str] = (),
        *,
        item_id: str | None = None,
    ) -> str:
        content: Any = question_text
        if image_refs:
            content = [{"type": "text", "text": question_text}] + [
                {"type": "image_ref", "path": ref} for ref in image_refs
            ]
        messages = [{"role": "user", "content": content}]
        return self._client.complete(messages, item_id=item_id)
