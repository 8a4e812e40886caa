"""Backend configuration, adapter descriptors and reply records.

An adapter descriptor is how any chat-style vendor is reached without code
changes: a JSON request template whose ``{{placeholder}}`` strings are filled
per request, plus a JSON pointer to the generated text in the response.
"""

from __future__ import annotations

import json
import os
from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

PLACEHOLDERS = ("prompt", "model", "temperature", "max_tokens")


class BackendKind(str, Enum):
    HTTP_CHAT = "HTTP_CHAT"
    MOCK = "MOCK"


def _resolve_pointer(document: Any, pointer: str) -> Any:
    """RFC 6901 JSON pointer lookup. Raises KeyError on a missing path."""
    if pointer in ("", "/"):
        return document
    node = document
    for raw in pointer.lstrip("/").split("/"):
        token = raw.replace("~1", "/").replace("~0", "~")
        if isinstance(node, list):
            try:
                node = node[int(token)]
            except (ValueError, IndexError):
                raise KeyError(pointer) from None
        elif isinstance(node, dict) and token in node:
            node = node[token]
        else:
            raise KeyError(pointer)
    return node


class AdapterDescriptor(BaseModel):
    """Request template plus response text pointer for one wire protocol."""

    model_config = ConfigDict(frozen=True)

    name: str = "openai_chat"
    request_template: dict[str, Any] = Field(
        default_factory=lambda: {
            "model": "{{model}}",
            "messages": [{"role": "user", "content": "{{prompt}}"}],
            "temperature": "{{temperature}}",
            "max_tokens": "{{max_tokens}}",
        }
    )
    response_text_pointer: str = "/choices/0/message/content"
    auth_header: str = "Authorization"
    auth_prefix: str = "Bearer "

    def render_request(self, values: dict[str, Any]) -> dict[str, Any]:
        """Fill placeholders; a string that is exactly one placeholder keeps the value's type."""

        def fill(node: Any) -> Any:
            if isinstance(node, dict):
                return {k: fill(v) for k, v in node.items()}
            if isinstance(node, list):
                return [fill(v) for v in node]
            if isinstance(node, str):
                for name in PLACEHOLDERS:
                    token = "{{" + name + "}}"
                    if node == token:
                        return values[name]
                    if token in node:
                        node = node.replace(token, str(values[name]))
            return node

        rendered: dict[str, Any] = fill(self.request_template)
        return rendered

    def extract_text(self, payload: Any) -> str:
        text = _resolve_pointer(payload, self.response_text_pointer)
        if not isinstance(text, str):
            raise KeyError(self.response_text_pointer)
        return text


def load_adapter(path: Path) -> AdapterDescriptor:
    if not path.exists():
        raise FileNotFoundError(f"Adapter descriptor not found: {path}")
    return AdapterDescriptor.model_validate_json(path.read_text(encoding="utf-8"))


class BackendFingerprint(BaseModel):
    """What identifies a backend for caching, grouping and provenance."""

    model_config = ConfigDict(frozen=True)

    kind: BackendKind
    model_name: str
    temperature: float

    def key(self) -> str:
        return f"{self.kind.value}:{self.model_name}:{self.temperature!r}"


class BackendConfig(BaseModel):
    """One generation backend. Holds the name of the API-key variable, never the key."""

    kind: BackendKind = BackendKind.MOCK
    endpoint_url: str | None = None
    model_name: str = "mock-amr"
    display_name: str | None = None
    api_key_env: str | None = None
    temperature: float = Field(default=0.0, ge=0.0)
    max_output_tokens: int = Field(default=1024, ge=1)
    timeout_s: float = Field(default=60.0, gt=0)
    max_retries: int = Field(default=3, ge=0)
    max_in_flight: int = Field(default=4, ge=1)
    backoff_base_s: float = Field(default=1.0, ge=0)
    backoff_factor: float = Field(default=2.0, ge=1.0)
    backoff_jitter: float = Field(default=0.25, ge=0, le=1)
    adapter: AdapterDescriptor = Field(default_factory=AdapterDescriptor)
    mock_rules_path: Path | None = None

    @model_validator(mode="after")
    def check_kind_requirements(self) -> BackendConfig:
        if self.kind is BackendKind.HTTP_CHAT and not self.endpoint_url:
            raise ValueError("HTTP_CHAT backends need an endpoint_url")
        return self

    @property
    def fingerprint(self) -> BackendFingerprint:
        return BackendFingerprint(
            kind=self.kind, model_name=self.model_name, temperature=self.temperature
        )

    @property
    def label(self) -> str:
        return self.display_name or self.model_name

    def api_key(self) -> str | None:
        """Read the secret from the environment at call time."""
        if not self.api_key_env:
            return None
        value = os.environ.get(self.api_key_env)
        if not value:
            raise ValueError(f"Environment variable {self.api_key_env} is not set")
        return value


def load_backend_config(path: Path) -> BackendConfig:
    """Load a backend JSON file; relative paths inside resolve against its directory."""
    if not path.exists():
        raise FileNotFoundError(f"Backend config not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(data.get("adapter"), str):
        data["adapter"] = load_adapter(path.parent / data["adapter"]).model_dump()
    if data.get("mock_rules_path"):
        rules = Path(data["mock_rules_path"])
        data["mock_rules_path"] = str(rules if rules.is_absolute() else path.parent / rules)
    return BackendConfig.model_validate(data)


class ModelReply(BaseModel):
    model_config = ConfigDict(frozen=True)

    job_id: str
    raw_text: str
    fingerprint: BackendFingerprint
    latency_ms: float
    cached: bool = False


class JobFailure(BaseModel):
    """A job that produced no reply; kept in place of the reply in batch results."""

    model_config = ConfigDict(frozen=True)

    job_id: str
    error_type: str
    message: str
    attempts: int = 1
