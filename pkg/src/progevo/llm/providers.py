"""Completion backends: an HTTP JSON chat-completion client and a scripted mock.

A provider is anything with ``complete(prompt, *, role, template, context)``
returning the completion text. ``template`` and ``context`` are metadata
(template name, island id, step) that real backends ignore and scripted
backends use for matching.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Protocol

import httpx

from progevo.errors import (
    ConfigError,
    FatalProviderError,
    ProviderUnavailable,
    RetriableProviderError,
    ScriptExhausted,
)
from progevo.llm.templates import render

logger = logging.getLogger(__name__)

PRIMARY = "primary_model"
SECONDARY = "secondary_model"

# cheap bookkeeping calls go to the secondary model
DEFAULT_ROLES = {
    "idea_generation": PRIMARY,
    "idea_selection": PRIMARY,
    "idea_classification": SECONDARY,
    "history_summarization": SECONDARY,
    "idea_capping": SECONDARY,
}


class Provider(Protocol):
    def complete(self, prompt: str, *, role: str = PRIMARY, template: str | None = None,
                 context: Mapping[str, Any] | None = None) -> str: ...


@dataclass
class ProviderConfig:
    endpoint: str
    model_name: str
    secondary_model_name: str | None = None
    api_key_env: str | None = None
    timeout: float = 120.0
    max_retries: int = 3
    temperature: float = 0.7
    backoff_base: float = 1.0
    rate_limit_per_s: float | None = None

    def __post_init__(self):
        if not self.timeout > 0:
            raise ConfigError("provider.timeout", "must be > 0")
        if self.max_retries < 0:
            raise ConfigError("provider.max_retries", "must be >= 0")


class TokenBucket:
    """Blocking token bucket; ``rate`` tokens per second, burst ``capacity``."""

    def __init__(self, rate: float, capacity: float | None = None, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate
        self.capacity = capacity or max(1.0, rate)
        self.tokens = self.capacity
        self._clock, self._sleep = clock, sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self.tokens = min(self.capacity, self.tokens + (now - self._last) * self.rate)
                self._last = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self._sleep(wait)


class HttpProvider:
    def __init__(self, cfg: ProviderConfig, client: httpx.Client | None = None, sleep=time.sleep):
        self.cfg = cfg
        self._client = client or httpx.Client(timeout=cfg.timeout)
        self._sleep = sleep
        self._bucket = TokenBucket(cfg.rate_limit_per_s) if cfg.rate_limit_per_s else None

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.cfg.api_key_env:
            key = os.environ.get(self.cfg.api_key_env)
            if not key:
                raise FatalProviderError(f"environment variable {self.cfg.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _once(self, payload: dict) -> str:
        if self._bucket:
            self._bucket.acquire()
        try:
            resp = self._client.post(self.cfg.endpoint, json=payload, headers=self._headers())
        except httpx.TimeoutException as exc:
            raise RetriableProviderError(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise RetriableProviderError(f"transport: {exc}") from exc
        if resp.status_code in (401, 403):
            raise FatalProviderError(f"authentication failed ({resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise RetriableProviderError(f"server returned {resp.status_code}")
        if resp.status_code >= 400:
            raise FatalProviderError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
        try:
            return extract_content(resp.json())
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise RetriableProviderError(f"malformed response body: {exc}") from exc

    def complete(self, prompt, *, role=PRIMARY, template=None, context=None) -> str:
        model = self.cfg.model_name
        if role == SECONDARY and self.cfg.secondary_model_name:
            model = self.cfg.secondary_model_name
        payload = {
            "model": model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
        }
        last: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            try:
                return self._once(payload)
            except RetriableProviderError as exc:
                last = exc
                logger.warning("provider attempt %d failed: %s", attempt + 1, exc)
                if attempt < self.cfg.max_retries:
                    self._sleep(self.cfg.backoff_base * 2**attempt)
        raise ProviderUnavailable(f"gave up after {self.cfg.max_retries + 1} attempts: {last}")

    def state(self) -> dict:
        return {}

    def load_state(self, state: dict) -> None:
        pass


def extract_content(body: dict) -> str:
    """Pull the completion text out of common chat-completion response shapes."""
    if "choices" in body:
        choice = body["choices"][0]
        if "message" in choice:
            return choice["message"]["content"]
        return choice["text"]
    if "content" in body:
        content = body["content"]
        if isinstance(content, list):
            return "".join(part.get("text", "") for part in content)
        return content
    raise KeyError("no completion text in response")


@dataclass
class ScriptEntry:
    template: str | None
    reply: str
    contains: str | None = None
    repeat: bool = False

    def matches(self, template: str | None, prompt: str) -> bool:
        if self.template not in (None, "*") and self.template != template:
            return False
        return self.contains is None or self.contains in prompt


class MockProvider:
    """Deterministic scripted provider.

    Each call consumes the first unconsumed entry whose matcher accepts the
    call; ``repeat`` entries are never consumed and act as standing replies.
    """

    def __init__(self, script: list[ScriptEntry | Mapping]):
        if not script:
            raise ValueError("mock script must be non-empty")
        self.script = [s if isinstance(s, ScriptEntry) else ScriptEntry(**s) for s in script]
        self.consumed: set[int] = set()
        self.transcript: list[dict] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "MockProvider":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, prompt, *, role=PRIMARY, template=None, context=None) -> str:
        for idx, entry in enumerate(self.script):
            if idx in self.consumed or not entry.matches(template, prompt):
                continue
            if not entry.repeat:
                self.consumed.add(idx)
            self.transcript.append({"template": template, "role": role, "entry": idx})
            return entry.reply
        raise ScriptExhausted(f"no script entry matches template={template!r}")

    def state(self) -> dict:
        return {"consumed": sorted(self.consumed), "calls": len(self.transcript)}

    def load_state(self, state: dict) -> None:
        self.consumed = set(state.get("consumed", []))


class LLM:
    """Renders a template and sends it to the provider under the right role."""

    def __init__(self, provider: Provider, roles: Mapping[str, str] | None = None):
        self.provider = provider
        self.roles = dict(DEFAULT_ROLES, **(roles or {}))

    def ask(self, template: str, bindings: Mapping[str, Any], context: Mapping[str, Any] | None = None) -> str:
        prompt = render(template, bindings)
        return self.provider.complete(prompt, role=self.roles[template], template=template, context=context)
