"""Generation backends, response cache and the batch client."""

from amr_drugclass_pipeline.llmclient.backends import (
    BackendError,
    BackendRejected,
    BackendTimeout,
    BackendUnavailable,
    HttpChatBackend,
    MockBackend,
    MockRule,
    MockRuleSet,
    RateLimited,
    RetriesExhausted,
    load_mock_rules,
    make_backend,
)
from amr_drugclass_pipeline.llmclient.cache import CacheNotOpen, ResponseCache, cache_key
from amr_drugclass_pipeline.llmclient.client import LlmClient, complete, run_batch
from amr_drugclass_pipeline.llmclient.schemas import (
    AdapterDescriptor,
    BackendConfig,
    BackendFingerprint,
    BackendKind,
    JobFailure,
    ModelReply,
    load_adapter,
    load_backend_config,
)
from amr_drugclass_pipeline.llmclient.stub_server import create_chat_stub_app

__all__ = [
    "AdapterDescriptor",
    "BackendConfig",
    "BackendError",
    "BackendFingerprint",
    "BackendKind",
    "BackendRejected",
    "BackendTimeout",
    "BackendUnavailable",
    "CacheNotOpen",
    "HttpChatBackend",
    "JobFailure",
    "LlmClient",
    "MockBackend",
    "MockRule",
    "MockRuleSet",
    "ModelReply",
    "RateLimited",
    "ResponseCache",
    "RetriesExhausted",
    "cache_key",
    "complete",
    "create_chat_stub_app",
    "load_adapter",
    "load_backend_config",
    "load_mock_rules",
    "make_backend",
    "run_batch",
]
