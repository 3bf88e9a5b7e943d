"""Model transports: an HTTP chat-completions backend and a fixture-replay mock."""
from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, TypeVar

import httpx

from ..errors import MockFixtureMissing, ProtocolError, TransportError
from .prompts import ImagePart, Prompt

log = logging.getLogger(__name__)

T = TypeVar("T")

FIXTURE_PREFIX_LEN = 16


class Backend(Protocol):
    def complete(self, prompt: Prompt) -> str: ...


class ReplyParseError(ValueError):
    """A reply did not contain a decodable, valid answer; the call may be retried."""


def prompt_hash(prompt: Prompt) -> str:
    """SHA-256 over the prompt parts, length-prefixed so part boundaries matter."""
    h = hashlib.sha256()
    for part in prompt:
        if isinstance(part, ImagePart):
            mime = part.mime_type.encode("utf-8")
            h.update(b"I%d:" % len(mime) + mime + b"%d:" % len(part.data) + part.data)
        else:
            data = part.encode("utf-8")
            h.update(b"T%d:" % len(data) + data)
    return h.hexdigest()


def fixture_path(fixtures_dir: str | Path, key: str) -> Path:
    return Path(fixtures_dir) / f"{key[:FIXTURE_PREFIX_LEN]}.json"


def record_fixture(fixtures_dir: str | Path, prompt: Prompt, reply_text: str) -> Path:
    key = prompt_hash(prompt)
    path = fixture_path(fixtures_dir, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"prompt_hash": key, "reply_text": reply_text}
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


class MockBackend:
    """Replays recorded replies keyed by the prompt hash."""

    def __init__(self, fixtures_dir: str | Path) -> None:
        self.fixtures_dir = Path(fixtures_dir)

    def complete(self, prompt: Prompt) -> str:
        key = prompt_hash(prompt)
        path = fixture_path(self.fixtures_dir, key)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise MockFixtureMissing(key, str(path)) from None
        if doc.get("prompt_hash") != key:
            raise MockFixtureMissing(key, str(path))
        return doc["reply_text"]


class RecordingBackend:
    """Forwards to another backend and stores each reply as a mock fixture."""

    def __init__(self, inner: Backend, fixtures_dir: str | Path) -> None:
        self.inner = inner
        self.fixtures_dir = Path(fixtures_dir)
        self._lock = threading.Lock()

    def complete(self, prompt: Prompt) -> str:
        reply = self.inner.complete(prompt)
        with self._lock:
            record_fixture(self.fixtures_dir, prompt, reply)
        return reply


@dataclass(frozen=True)
class ModelEndpointConfig:
    base_url: str = ""
    model_name: str = ""
    # name of the environment variable holding the key, never the key itself
    api_key_env_var: str = "DIAGRAM_ALIGN_API_KEY"
    max_retries: int = 3
    timeout: float = 120.0
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")


class HTTPBackend:
    """OpenAI-compatible ``/chat/completions`` endpoint with inline images."""

    def __init__(self, config: ModelEndpointConfig, transport: httpx.BaseTransport | None = None) -> None:
        if not config.base_url or not config.model_name:
            raise ValueError("endpoint base_url and model_name must be configured")
        self.config = config
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_env_var)
        if not key:
            raise TransportError(f"environment variable {self.config.api_key_env_var} is not set")
        return {"Authorization": f"Bearer {key}"}

    def payload(self, prompt: Prompt) -> dict:
        content = []
        for part in prompt:
            if isinstance(part, ImagePart):
                b64 = base64.b64encode(part.data).decode("ascii")
                content.append({"type": "image_url", "image_url": {"url": f"data:{part.mime_type};base64,{b64}"}})
            else:
                content.append({"type": "text", "text": part})
        return {
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": content}],
        }

    def complete(self, prompt: Prompt) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        try:
            resp = self._client.post(url, json=self.payload(prompt), headers=self._headers())
        except httpx.HTTPError as exc:
            raise TransportError(f"request to {url} failed: {exc}") from exc
        if resp.status_code >= 400:
            raise TransportError(f"endpoint returned HTTP {resp.status_code}: {resp.text[:500]}")
        try:
            message = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response shape: {exc}") from exc
        if isinstance(message, list):
            message = "".join(p.get("text", "") for p in message if isinstance(p, dict))
        return message or ""

    def close(self) -> None:
        self._client.close()


class ModelClient:
    """Sends prompts through a backend, retrying failed or unparseable replies.

    Each retry resends the identical prompt after an exponential backoff
    (``backoff_base * 2**attempt`` seconds).
    """

    def __init__(
        self,
        backend: Backend,
        max_retries: int = 3,
        backoff_base: float = 2.0,
        sleep: Callable[[float], None] = time.sleep,
        diagram_type_name: str | None = None,
        diagram_type: str | None = None,
    ) -> None:
        self.backend = backend
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.sleep = sleep
        self.diagram_type_name = diagram_type_name
        self.diagram_type = diagram_type

    def call(
        self,
        prompt: Prompt,
        parse: Callable[[str], T],
        error_cls: type[ProtocolError] = ProtocolError,
        what: str = "model call",
    ) -> T:
        attempts = self.max_retries + 1
        last_error: Exception | None = None
        raw: str | None = None
        for attempt in range(attempts):
            try:
                reply = self.backend.complete(prompt)
            except MockFixtureMissing:
                raise
            except TransportError as exc:
                last_error = exc
            else:
                raw = reply
                try:
                    return parse(reply)
                except ReplyParseError as exc:
                    last_error = exc
            log.warning("%s attempt %d/%d failed: %s", what, attempt + 1, attempts, last_error)
            if attempt + 1 < attempts:
                self.sleep(self.backoff_base * 2**attempt)
        raise error_cls(f"{what} failed after {attempts} attempt(s): {last_error}", raw_reply=raw, attempts=attempts)
