"""Model gateway: uniform access to generation endpoints with caching and rate limits."""

from .backends import HttpChatBackend, MockBackend, mock_reply_text
from .cache import ResponseCache, cache_key
from .client import ModelGateway
from .throttle import Throttle, backoff_delay
from .types import GenerationRequest, GenerationResponse, MockReply

__all__ = [
    "GenerationRequest",
    "GenerationResponse",
    "HttpChatBackend",
    "MockBackend",
    "MockReply",
    "ModelGateway",
    "ResponseCache",
    "Throttle",
    "backoff_delay",
    "cache_key",
    "mock_reply_text",
]
