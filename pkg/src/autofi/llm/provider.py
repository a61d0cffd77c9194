"""Chat-completion providers: live HTTP, deterministic fixture replay,
and the recording wrapper that turns one into the other.

All providers answer the same call: ``complete(prompt_text) ->
ProviderResponse``. Responses are keyed by a digest over the exact
prompt bytes plus the model name (SHA-256 of ``prompt \\x00 model``), so
a recording made against a live endpoint replays byte-identically as
long as prompt construction stays byte-stable.

The API key is read from an environment variable only, never from
files or flags.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from ..errors import ConfigError, FixtureMiss, TransportError

DEFAULT_API_KEY_ENV = "AUTOFI_API_KEY"


def prompt_digest(prompt_text: str, model: str) -> str:
    """Lowercase hex SHA-256 over the prompt bytes, NUL, model bytes."""
    h = hashlib.sha256()
    h.update(prompt_text.encode("utf-8"))
    h.update(b"\x00")
    h.update(model.encode("utf-8"))
    return h.hexdigest()


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-4o"
    temperature: float = 0.2
    seed: int = 42
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout_s: float = 60.0
    max_format_retries: int = 2
    parallelism: int = 1

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_format_retries < 0:
            raise ConfigError("max_format_retries must be >= 0")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")


@dataclass(frozen=True)
class ProviderResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_s: float = 0.0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")


class HttpProvider:
    """OpenAI-style chat-completion client (messages, model, temperature,
    seed). Transport problems surface immediately as TransportError; no
    transport-level retries."""

    def __init__(self, config: ProviderConfig):
        self.config = config
        self.model = config.model
        api_key = os.environ.get(config.api_key_env, "")
        if not api_key:
            raise ConfigError(
                f"live provider needs an API key in the environment variable {config.api_key_env}"
            )
        self._api_key = api_key

    def complete(self, prompt_text: str) -> ProviderResponse:
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": self.config.temperature,
            "seed": self.config.seed,
        }
        started = time.perf_counter()
        try:
            resp = requests.post(
                url,
                json=payload,
                headers={"Authorization": f"Bearer {self._api_key}"},
                timeout=self.config.timeout_s,
            )
        except requests.RequestException as exc:
            raise TransportError(f"request to {url} failed: {exc}") from exc
        latency = time.perf_counter() - started
        if resp.status_code >= 400:
            raise TransportError(f"{url} answered HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload from {url}: {exc}") from exc
        usage = body.get("usage", {}) or {}
        return ProviderResponse(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            latency_s=latency,
        )


class FixtureProvider:
    """Replays recorded responses keyed by prompt digest.

    The recording is immutable after load, so one instance is safe to
    share across concurrent requests. Later records for the same digest
    win, which lets an appended recording extend an older one.
    """

    def __init__(self, recording_path, model: str):
        self.model = model
        self.path = Path(recording_path)
        self._records: dict[str, ProviderResponse] = {}
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                self._records[obj["digest"]] = ProviderResponse(
                    text=obj["response_text"],
                    prompt_tokens=int(obj.get("prompt_tokens", 0)),
                    completion_tokens=int(obj.get("completion_tokens", 0)),
                )

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, digest: str) -> bool:
        return digest in self._records

    def complete(self, prompt_text: str) -> ProviderResponse:
        digest = prompt_digest(prompt_text, self.model)
        try:
            return self._records[digest]
        except KeyError:
            raise FixtureMiss(digest) from None


def append_record(path, digest: str, response: ProviderResponse) -> None:
    line = json.dumps(
        {
            "digest": digest,
            "response_text": response.text,
            "prompt_tokens": response.prompt_tokens,
            "completion_tokens": response.completion_tokens,
        }
    )
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")
        fh.flush()


class RecordingProvider:
    """Wraps a live provider and appends every response to a recording.

    Records are flushed per response, so an aborted run leaves a valid
    partial recording. Digests already present in the file are replayed
    instead of re-asked, which makes recording resumable.
    """

    def __init__(self, inner, recording_path):
        self.inner = inner
        self.model = inner.model
        self.path = Path(recording_path)
        self._lock = threading.Lock()
        self._known: dict[str, ProviderResponse] = {}
        if self.path.exists():
            existing = FixtureProvider(self.path, inner.model)
            self._known = dict(existing._records)

    def complete(self, prompt_text: str) -> ProviderResponse:
        digest = prompt_digest(prompt_text, self.model)
        with self._lock:
            if digest in self._known:
                return self._known[digest]
        response = self.inner.complete(prompt_text)
        with self._lock:
            self._known[digest] = response
            append_record(self.path, digest, response)
        return response


class UsageTally:
    """Pass-through wrapper accumulating request and token counts."""

    def __init__(self, inner):
        self.inner = inner
        self.model = inner.model
        self._lock = threading.Lock()
        self.requests = 0
        self.prompt_tokens = 0
        self.completion_tokens = 0

    def complete(self, prompt_text: str) -> ProviderResponse:
        response = self.inner.complete(prompt_text)
        with self._lock:
            self.requests += 1
            self.prompt_tokens += response.prompt_tokens
            self.completion_tokens += response.completion_tokens
        return response

    def snapshot(self) -> tuple[int, int, int]:
        with self._lock:
            return self.requests, self.prompt_tokens, self.completion_tokens
