"""Generation backends: a generic HTTP chat endpoint and a rule-driven mock.

Backend errors are split by whether a retry can help. The client retries
only errors with ``retryable = True``.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx

from amr_drugclass_pipeline.llmclient.schemas import BackendConfig, BackendKind

logger = logging.getLogger(__name__)

DEFAULT_MOCK_REPLY = "Insufficient evidence to determine resistance from the information given."


class BackendError(RuntimeError):
    retryable = False


class BackendTimeout(BackendError, TimeoutError):
    retryable = True


class RateLimited(BackendError):
    retryable = True


class BackendUnavailable(BackendError):
    """Server-side failure or an explicit overload signal."""

    retryable = True


class BackendRejected(BackendError):
    """The request itself was refused; resending it will not help."""

    def __init__(self, message: str, status_code: int | None = None) -> None:
        super().__init__(message)
        self.status_code = status_code


class RetriesExhausted(BackendError):
    def __init__(self, attempts: int, last_error: BackendError) -> None:
        super().__init__(f"Gave up after {attempts} attempts: {last_error}")
        self.attempts = attempts
        self.last_error = last_error


class Backend(Protocol):
    async def generate(self, prompt: str) -> str: ...


class HttpChatBackend:
    """POSTs the adapter-rendered request and pulls text out by JSON pointer."""

    def __init__(self, cfg: BackendConfig, client: httpx.AsyncClient) -> None:
        if not cfg.endpoint_url:
            raise ValueError("HTTP_CHAT backends need an endpoint_url")
        self.cfg = cfg
        self.client = client

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = self.cfg.api_key()
        if key:
            headers[self.cfg.adapter.auth_header] = f"{self.cfg.adapter.auth_prefix}{key}"
        return headers

    async def generate(self, prompt: str) -> str:
        body = self.cfg.adapter.render_request(
            {
                "prompt": prompt,
                "model": self.cfg.model_name,
                "temperature": self.cfg.temperature,
                "max_tokens": self.cfg.max_output_tokens,
            }
        )
        assert self.cfg.endpoint_url is not None
        try:
            response = await self.client.post(
                self.cfg.endpoint_url,
                json=body,
                headers=self._headers(),
                timeout=self.cfg.timeout_s,
            )
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"No response within {self.cfg.timeout_s}s") from exc
        except httpx.TransportError as exc:
            raise BackendUnavailable(f"Transport error: {exc}") from exc

        text = response.text
        status = response.status_code
        if status == 429:
            raise RateLimited("Rate limited (HTTP 429)")
        if status >= 500 or (status >= 400 and "overloaded" in text.lower()):
            raise BackendUnavailable(f"Backend unavailable (HTTP {status})")
        if status >= 400:
            raise BackendRejected(f"Request rejected (HTTP {status})", status)

        try:
            payload = response.json()
        except json.JSONDecodeError as exc:
            raise BackendRejected("Response body is not JSON", status) from exc
        if isinstance(payload, dict) and "overloaded" in str(payload.get("error", "")).lower():
            raise BackendUnavailable("Backend reported overload")
        try:
            return self.cfg.adapter.extract_text(payload)
        except KeyError:
            raise BackendRejected(
                f"No text at {self.cfg.adapter.response_text_pointer!r} in response", status
            ) from None


@dataclass(frozen=True)
class MockRule:
    pattern: re.Pattern[str]
    reply: str


@dataclass(frozen=True)
class MockRuleSet:
    """Ordered rules over the prompt text; the first match answers."""

    rules: tuple[MockRule, ...]
    default_reply: str = DEFAULT_MOCK_REPLY

    def reply_for(self, prompt: str) -> str:
        for rule in self.rules:
            if rule.pattern.search(prompt):
                return rule.reply
        return self.default_reply


def load_mock_rules(path: Path) -> MockRuleSet:
    """Read ``{"default_reply": ..., "rules": [{"pattern", "reply"}, ...]}``."""
    if not path.exists():
        raise FileNotFoundError(f"Mock rule table not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    try:
        rules = tuple(
            MockRule(pattern=re.compile(item["pattern"], re.IGNORECASE), reply=item["reply"])
            for item in data.get("rules", [])
        )
    except re.error as exc:
        raise ValueError(f"Bad pattern in {path}: {exc}") from exc
    ruleset = MockRuleSet(rules=rules, default_reply=data.get("default_reply", DEFAULT_MOCK_REPLY))
    logger.info("Loaded %d mock rules from %s", len(rules), path)
    return ruleset


class MockBackend:
    """Deterministic stand-in for hosted models."""

    def __init__(self, ruleset: MockRuleSet) -> None:
        self.ruleset = ruleset
        self.calls = 0

    async def generate(self, prompt: str) -> str:
        self.calls += 1
        return self.ruleset.reply_for(prompt)


def make_backend(
    cfg: BackendConfig, client: httpx.AsyncClient | None = None, rules_path: Path | None = None
) -> Backend:
    if cfg.kind is BackendKind.MOCK:
        path = cfg.mock_rules_path or rules_path
        if path is None:
            raise ValueError("MOCK backends need a mock_rules_path")
        return MockBackend(load_mock_rules(path))
    if client is None:
        raise ValueError("HTTP_CHAT backends need an httpx.AsyncClient")
    return HttpChatBackend(cfg, client)
