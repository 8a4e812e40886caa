"""In-process OpenAI-style chat endpoint backed by the mock rule table.

Lets the HTTP backend be exercised end to end without a hosted model:

    app = create_chat_stub_app(load_mock_rules(path))
    transport = httpx.ASGITransport(app=app)
"""

from __future__ import annotations

import logging

from fastapi import APIRouter, FastAPI, HTTPException
from pydantic import BaseModel, Field

from amr_drugclass_pipeline.llmclient.backends import MockRuleSet

logger = logging.getLogger(__name__)

CHAT_PATH = "/v1/chat/completions"


class ChatMessage(BaseModel):
    role: str
    content: str


class ChatCompletionRequest(BaseModel):
    model: str
    messages: list[ChatMessage] = Field(..., min_length=1)
    temperature: float = Field(default=0.0, ge=0.0)
    max_tokens: int | None = Field(default=None, ge=1)


class ChatChoice(BaseModel):
    index: int
    message: ChatMessage
    finish_reason: str = "stop"


class ChatCompletionResponse(BaseModel):
    id: str
    object: str = "chat.completion"
    model: str
    choices: list[ChatChoice]


class HealthResponse(BaseModel):
    status: str
    rules: int


def create_chat_stub_app(ruleset: MockRuleSet) -> FastAPI:
    """Build the stub app around a rule set."""
    router = APIRouter(tags=["chat"])
    served = {"count": 0}

    @router.post(CHAT_PATH, response_model=ChatCompletionResponse)
    async def chat_completions(request: ChatCompletionRequest) -> ChatCompletionResponse:
        user_turns = [m.content for m in request.messages if m.role == "user"]
        if not user_turns:
            raise HTTPException(status_code=400, detail="No user message in request")
        reply = ruleset.reply_for(user_turns[-1])
        served["count"] += 1
        logger.debug("Stub reply #%d for model %s", served["count"], request.model)
        return ChatCompletionResponse(
            id=f"stub-{served['count']}",
            model=request.model,
            choices=[ChatChoice(index=0, message=ChatMessage(role="assistant", content=reply))],
        )

    @router.get("/health", response_model=HealthResponse)
    async def health() -> HealthResponse:
        return HealthResponse(status="ok", rules=len(ruleset.rules))

    app = FastAPI(
        title="AMR chat stub",
        description="Deterministic chat-completions endpoint for pipeline tests.",
        version="0.1.0",
    )
    app.include_router(router)
    return app
