"""Generation backends: the deterministic mock and an OpenAI-style HTTP chat client."""

from __future__ import annotations

import logging
import os
import time
from collections.abc import Callable
from typing import Any, Protocol

import httpx

from errors import AuthError, GatewayError, MalformedReplyError, TransportError
from sources.images import ImageResolver

from .types import GenerationRequest, GenerationResponse, MockReply

logger = logging.getLogger(__name__)

# Custom mock behaviour for tests: (request, digest) -> reply text or MockReply
Responder = Callable[[GenerationRequest, str], "str | MockReply"]


class RateLimitedError(TransportError):
    """One 429 reply; retried by the gateway."""


class Backend(Protocol):
    def complete(self, request: GenerationRequest, digest: str) -> GenerationResponse: ...


# =============================================================================
# Mock
# =============================================================================


def mock_latency_ms(digest: str) -> float:
    """Synthetic latency in [5, 55) ms derived from the digest."""
    return 5.0 + int(digest[8:12], 16) % 50


def mock_reply_text(request: GenerationRequest, digest: str) -> str:
    """Default mock output, shaped by the profile's ``mock_style`` or the request's expectation."""
    style = request.profile.mock_style or request.expect
    bucket = int(digest[:8], 16)
    if style == "score":
        return f"{1 + (bucket % 41) / 10:.1f}"
    if style == "verdict":
        return "True" if bucket % 2 else "False"
    return f"mock answer {digest[:8]}"


class MockBackend:
    """Offline backend whose output is a pure function of the request digest."""

    def __init__(self, responder: Responder | None = None):
        self.responder = responder

    def complete(self, request: GenerationRequest, digest: str) -> GenerationResponse:
        if self.responder is None:
            reply: str | MockReply = mock_reply_text(request, digest)
        else:
            reply = self.responder(request, digest)
        if isinstance(reply, str):
            reply = MockReply(text=reply, latency_ms=mock_latency_ms(digest))
        return GenerationResponse(
            text=reply.text,
            finish_reason="stop" if reply.text else "empty",
            latency_ms=reply.latency_ms,
            digest=digest,
            metadata={"backend": "mock"},
        )


# =============================================================================
# HTTP chat
# =============================================================================


class HttpChatBackend:
    """POSTs ``{base_url}/chat/completions`` with text and image content parts."""

    def __init__(
        self,
        resolver: ImageResolver,
        client: httpx.Client | None = None,
        clock: Callable[[], float] = time.perf_counter,
    ):
        self.resolver = resolver
        self.client = client or httpx.Client()
        self._clock = clock

    def build_payload(self, request: GenerationRequest) -> dict[str, Any]:
        content: list[dict[str, Any]] = []
        for seg in request.message.segments:
            if seg.kind == "image" and seg.image is not None:
                url = self.resolver.data_url(seg.image)
                content.append({"type": "image_url", "image_url": {"url": url}})
            elif seg.text:
                content.append({"type": "text", "text": seg.text})
        payload: dict[str, Any] = {
            "model": request.profile.model_name,
            "messages": [{"role": "user", "content": content}],
        }
        decoding = request.decoding.resolved()
        seed = decoding.pop("seed", None)
        payload.update(decoding)
        if seed is not None:
            payload["seed"] = seed + request.sample_index
        return payload

    def _headers(self, request: GenerationRequest) -> dict[str, str]:
        env = request.profile.auth_env
        if not env:
            return {}
        key = os.environ.get(env)
        if not key:
            raise AuthError(f"profile {request.profile.name!r}: environment variable {env} is not set")
        return {"Authorization": f"Bearer {key}"}

    @staticmethod
    def _parse(data: Any) -> tuple[str, str]:
        try:
            choice = data["choices"][0]
            content = choice["message"]["content"]
            finish = choice.get("finish_reason") or "stop"
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedReplyError(f"reply is not a chat completion: {exc!r}") from exc
        if isinstance(content, list):
            content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
        if content is None:
            content = ""
        if not isinstance(content, str):
            raise MalformedReplyError("chat completion content is not text")
        return content, finish

    def complete(self, request: GenerationRequest, digest: str) -> GenerationResponse:
        profile = request.profile
        url = profile.base_url.rstrip("/") + "/chat/completions"
        headers = self._headers(request)
        payload = self.build_payload(request)
        start = self._clock()
        try:
            response = self.client.post(url, json=payload, headers=headers, timeout=profile.timeout_seconds)
        except httpx.TransportError as exc:
            raise TransportError(f"{profile.name}: {exc}") from exc
        latency_ms = max(0.0, (self._clock() - start) * 1000.0)

        status = response.status_code
        if status in (401, 403):
            raise AuthError(f"{profile.name}: endpoint rejected credentials ({status})")
        if status == 429:
            raise RateLimitedError(f"{profile.name}: rate limited")
        if status >= 500:
            raise TransportError(f"{profile.name}: server error {status}")
        if status >= 400:
            raise GatewayError(f"{profile.name}: request rejected ({status}): {response.text[:200]}")

        try:
            data = response.json()
        except ValueError as exc:
            raise MalformedReplyError(f"{profile.name}: reply is not JSON") from exc
        text, finish = self._parse(data)
        if not text and finish == "stop":
            raise MalformedReplyError(f"{profile.name}: empty completion")
        return GenerationResponse(
            text=text,
            finish_reason=finish,
            latency_ms=latency_ms,
            digest=digest,
            metadata={"backend": "http", "model": data.get("model", profile.model_name)},
        )
