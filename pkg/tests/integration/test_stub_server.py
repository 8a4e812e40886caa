"""Integration tests for the HTTP chat backend against the in-process stub.

Uses httpx.ASGITransport so requests go through the real FastAPI app,
the real request/response models and the adapter's JSON pointers.
"""

from __future__ import annotations

from typing import AsyncGenerator

import pytest
import pytest_asyncio
from fastapi import FastAPI
from httpx import ASGITransport, AsyncClient

from amr_drugclass_pipeline.config import settings
from amr_drugclass_pipeline.llmclient import (
    BackendConfig,
    LlmClient,
    ModelReply,
    ResponseCache,
    create_chat_stub_app,
    load_mock_rules,
)
from amr_drugclass_pipeline.promptgen import PromptJob, TemplateKind


@pytest.fixture()
def stub_app() -> FastAPI:
    return create_chat_stub_app(load_mock_rules(settings.mock_rules_path))


@pytest_asyncio.fixture()
async def client(stub_app: FastAPI) -> AsyncGenerator[AsyncClient, None]:
    """Async HTTP client for the stub app."""
    transport = ASGITransport(app=stub_app)
    async with AsyncClient(transport=transport, base_url="http://stub") as c:
        yield c


def _job(record_id: str, prompt: str) -> PromptJob:
    return PromptJob(
        job_id=f"{record_id}:{TemplateKind.BLAST_AUGMENTED.value}",
        record_id=record_id,
        prompt=prompt,
        template_kind=TemplateKind.BLAST_AUGMENTED,
    )


# ── Raw endpoint ──


class TestStubEndpoints:
    async def test_health(self, client: AsyncClient) -> None:
        resp = await client.get("/health")
        assert resp.status_code == 200
        data = resp.json()
        assert data["status"] == "ok"
        assert data["rules"] > 0

    async def test_chat_reply_follows_rules(self, client: AsyncClient) -> None:
        resp = await client.post(
            "/v1/chat/completions",
            json={
                "model": "stub-chat",
                "messages": [{"role": "user", "content": "'MEG_1|Drugs|MLS|x|ermB'"}],
            },
        )
        assert resp.status_code == 200
        data = resp.json()
        assert data["model"] == "stub-chat"
        assert "MLS" in data["choices"][0]["message"]["content"]

    async def test_missing_user_turn(self, client: AsyncClient) -> None:
        resp = await client.post(
            "/v1/chat/completions",
            json={"model": "m", "messages": [{"role": "system", "content": "hi"}]},
        )
        assert resp.status_code == 400

    async def test_invalid_body(self, client: AsyncClient) -> None:
        resp = await client.post("/v1/chat/completions", json={"model": "m", "messages": []})
        assert resp.status_code == 422


# ── Through the client ──


class TestHttpBackendThroughStub:
    async def test_batch_round_trip(
        self,
        stub_app: FastAPI,
        http_backend_config: BackendConfig,
        response_cache: ResponseCache,
    ) -> None:
        """Replies should come back in job order with the stub's text."""
        jobs = [
            _job("MEG_1", "'MEG_101|Drugs|Tetracyclines|x|tetM'"),
            _job("MEG_2", "'MEG_102|Drugs|betalactams|x|blaTEM-1'"),
        ]
        async with LlmClient(
            http_backend_config, response_cache, transport=ASGITransport(app=stub_app)
        ) as llm:
            results = await llm.run_batch(jobs)

        assert all(isinstance(r, ModelReply) for r in results)
        assert [r.job_id for r in results] == [j.job_id for j in jobs]
        assert "Tetracyclines" in results[0].raw_text
        assert "Betalactams" in results[1].raw_text
        assert llm.network_calls == 2

    async def test_second_batch_served_from_cache(
        self,
        stub_app: FastAPI,
        http_backend_config: BackendConfig,
        response_cache: ResponseCache,
    ) -> None:
        """Repeating a job should not reach the endpoint again."""
        job = _job("MEG_1", "'MEG_101|Drugs|Tetracyclines|x|tetM'")
        async with LlmClient(
            http_backend_config, response_cache, transport=ASGITransport(app=stub_app)
        ) as llm:
            await llm.run_batch([job])
            second = await llm.run_batch([job])

        assert llm.network_calls == 1
        assert isinstance(second[0], ModelReply)
        assert second[0].cached is True
