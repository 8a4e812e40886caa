"""Cached, retrying, concurrency-bounded dispatch of prompt jobs.

Usage:
    async with LlmClient(cfg, cache) as client:
        results = await client.run_batch(jobs)

Results come back in job order. A job that fails is represented by a
JobFailure in its slot; the rest of the batch is unaffected. Jobs with the
same prompt share one backend call.
"""

from __future__ import annotations

import asyncio
import logging
import random
import time
from typing import Awaitable, Callable, Sequence

import httpx

from amr_drugclass_pipeline.llmclient.backends import (
    Backend,
    BackendError,
    RetriesExhausted,
    make_backend,
)
from amr_drugclass_pipeline.llmclient.cache import ResponseCache, cache_key
from amr_drugclass_pipeline.llmclient.schemas import (
    BackendConfig,
    BackendKind,
    JobFailure,
    ModelReply,
)
from amr_drugclass_pipeline.promptgen.templates import PromptJob

logger = logging.getLogger(__name__)

Sleep = Callable[[float], Awaitable[None]]
BatchResult = ModelReply | JobFailure


class LlmClient:
    def __init__(
        self,
        cfg: BackendConfig,
        cache: ResponseCache,
        *,
        backend: Backend | None = None,
        transport: httpx.AsyncBaseTransport | None = None,
        sleep: Sleep = asyncio.sleep,
        seed: int = 0,
        user_agent: str = "amr-drugclass-pipeline",
    ) -> None:
        self.cfg = cfg
        self.cache = cache
        self._backend = backend
        self._transport = transport
        self._http: httpx.AsyncClient | None = None
        self._sleep = sleep
        self._rng = random.Random(seed)
        self._user_agent = user_agent
        self.network_calls = 0
        self._inflight: dict[str, asyncio.Task[tuple[str, float]]] = {}

    async def __aenter__(self) -> LlmClient:
        if self._backend is None:
            if self.cfg.kind is BackendKind.HTTP_CHAT:
                self._http = httpx.AsyncClient(
                    transport=self._transport, headers={"User-Agent": self._user_agent}
                )
            self._backend = make_backend(self.cfg, self._http)
        return self

    async def __aexit__(self, *args: object) -> None:
        if self._http is not None:
            await self._http.aclose()
            self._http = None

    @property
    def backend(self) -> Backend:
        if self._backend is None:
            raise RuntimeError("Client not started. Use 'async with LlmClient(...)'.")
        return self._backend

    def backoff_delay(self, attempt: int) -> float:
        """Delay before retry number ``attempt`` (0-based), jittered."""
        base = self.cfg.backoff_base_s * self.cfg.backoff_factor**attempt
        jitter = self.cfg.backoff_jitter
        return base * (1 - jitter + 2 * jitter * self._rng.random())

    async def _call(self, prompt: str) -> str:
        attempts = self.cfg.max_retries + 1
        last: BackendError | None = None
        for attempt in range(attempts):
            if attempt:
                await self._sleep(self.backoff_delay(attempt - 1))
            self.network_calls += 1
            try:
                return await self.backend.generate(prompt)
            except BackendError as exc:
                if not exc.retryable:
                    raise
                last = exc
                logger.debug("Attempt %d/%d failed: %s", attempt + 1, attempts, exc)
        assert last is not None
        raise RetriesExhausted(attempts, last) from last

    async def complete(self, job: PromptJob) -> ModelReply:
        """Reply for one job, served from the cache when possible."""
        key = cache_key(job.prompt, self.cfg)
        fingerprint = self.cfg.fingerprint
        hit = self.cache.get(key)
        if hit is not None:
            return ModelReply(
                job_id=job.job_id,
                raw_text=hit.raw_text,
                fingerprint=fingerprint,
                latency_ms=0.0,
                cached=True,
            )
        shared = self._inflight.get(key)
        if shared is not None:
            text, _ = await asyncio.shield(shared)
            logger.debug("Job %s shares an in-flight call", job.job_id)
            return ModelReply(
                job_id=job.job_id,
                raw_text=text,
                fingerprint=fingerprint,
                latency_ms=0.0,
                cached=True,
            )
        task = asyncio.ensure_future(self._fetch(key, job.prompt))
        self._inflight[key] = task
        task.add_done_callback(lambda _: self._inflight.pop(key, None))
        text, latency_ms = await task
        return ModelReply(
            job_id=job.job_id,
            raw_text=text,
            fingerprint=fingerprint,
            latency_ms=latency_ms,
            cached=False,
        )

    async def _fetch(self, key: str, prompt: str) -> tuple[str, float]:
        started = time.perf_counter()
        text = await self._call(prompt)
        latency_ms = (time.perf_counter() - started) * 1000
        self.cache.put(key, text, self.cfg)
        return text, latency_ms

    async def run_batch(self, jobs: Sequence[PromptJob]) -> list[BatchResult]:
        """All jobs, at most ``max_in_flight`` outstanding at once."""
        gate = asyncio.Semaphore(self.cfg.max_in_flight)

        async def one(job: PromptJob) -> BatchResult:
            key = cache_key(job.prompt, self.cfg)
            try:
                if key in self.cache or key in self._inflight:
                    return await self.complete(job)
                async with gate:
                    return await self.complete(job)
            except BackendError as exc:
                logger.warning("Job %s failed: %s", job.job_id, exc)
                return JobFailure(
                    job_id=job.job_id,
                    error_type=type(exc).__name__,
                    message=str(exc),
                    attempts=getattr(exc, "attempts", 1),
                )
            except Exception as exc:
                logger.warning("Job %s failed unexpectedly: %s: %s", job.job_id, type(exc).__name__, exc)
                return JobFailure(job_id=job.job_id, error_type=type(exc).__name__, message=str(exc))

        results = await asyncio.gather(*(one(job) for job in jobs))
        failed = sum(isinstance(r, JobFailure) for r in results)
        cached = sum(isinstance(r, ModelReply) and r.cached for r in results)
        logger.info(
            "Batch done: %d jobs, %d cached, %d failed, %d backend calls",
            len(jobs),
            cached,
            failed,
            self.network_calls,
        )
        return list(results)


async def complete(job: PromptJob, cfg: BackendConfig, cache: ResponseCache) -> ModelReply:
    async with LlmClient(cfg, cache) as client:
        return await client.complete(job)


async def run_batch(
    jobs: Sequence[PromptJob], cfg: BackendConfig, cache: ResponseCache
) -> list[BatchResult]:
    if not jobs:
        raise ValueError("run_batch needs at least one job")
    async with LlmClient(cfg, cache) as client:
        return await client.run_batch(jobs)
