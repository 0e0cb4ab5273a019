"""Thread-safe model gateway: cache, throttle, retry, call log."""

from __future__ import annotations

import logging
import random
import threading
import time
from collections.abc import Callable

import httpx

from errors import (
    AuthError,
    GatewayError,
    InputValidationError,
    MalformedReplyError,
    RateLimitExhaustedError,
    TransportError,
)
from pipeline_config import EndpointProfile, RetryPolicy
from runstore.jsonl import JsonlLog
from sources.images import ImageResolver

from .backends import Backend, HttpChatBackend, MockBackend, RateLimitedError, Responder
from .cache import ResponseCache, cache_key
from .throttle import Throttle, backoff_delay
from .types import GenerationRequest, GenerationResponse

logger = logging.getLogger(__name__)


class ModelGateway:
    """Uniform entry point for every generation endpoint.

    Cached responses are returned without touching a backend or the
    throttle. ``backend_calls`` counts requests that reached a backend.
    """

    def __init__(
        self,
        cache: ResponseCache | None = None,
        resolver: ImageResolver | None = None,
        call_log: JsonlLog | None = None,
        retry: RetryPolicy | None = None,
        http_client: httpx.Client | None = None,
        mock_responder: Responder | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.cache = cache
        self.resolver = resolver or ImageResolver(fetch_remote=False)
        self.call_log = call_log
        self.retry = retry or RetryPolicy()
        self._http_client = http_client
        self._mock = MockBackend(mock_responder)
        self._http: HttpChatBackend | None = None
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._throttles: dict[str, Throttle] = {}
        self._lock = threading.Lock()
        self.backend_calls = 0

    # -------------------------------------------------------------------------

    def _backend(self, profile: EndpointProfile) -> Backend:
        if profile.backend == "mock":
            return self._mock
        with self._lock:
            if self._http is None:
                self._http = HttpChatBackend(self.resolver, client=self._http_client)
            return self._http

    def throttle(self, profile: EndpointProfile) -> Throttle:
        with self._lock:
            throttle = self._throttles.get(profile.name)
            if throttle is None:
                throttle = Throttle(
                    profile.rate_limit.requests_per_second,
                    profile.rate_limit.max_in_flight,
                    sleep=self._sleep,
                )
                self._throttles[profile.name] = throttle
            return throttle

    def _record(self, request: GenerationRequest, digest: str, cached: bool, latency_ms: float, status: str) -> None:
        if self.call_log is None:
            return
        self.call_log.append({
            "digest": digest,
            "profile": request.profile.name,
            "sample_index": request.sample_index,
            "cached": cached,
            "latency_ms": latency_ms,
            "status": status,
        })

    def _call_with_retries(self, request: GenerationRequest, digest: str) -> GenerationResponse:
        backend = self._backend(request.profile)
        throttle = self.throttle(request.profile)
        attempts = self.retry.max_retries + 1
        last: TransportError | None = None
        for attempt in range(attempts):
            try:
                with throttle.slot():
                    with self._lock:
                        self.backend_calls += 1
                    return backend.complete(request, digest)
            except (AuthError, MalformedReplyError):
                raise
            except TransportError as exc:
                last = exc
                if attempt + 1 < attempts:
                    delay = backoff_delay(
                        attempt,
                        self.retry.backoff_base_seconds,
                        self.retry.backoff_cap_seconds,
                        self._rng,
                    )
                    logger.debug("%s: %s; retry %d in %.2fs", request.profile.name, exc, attempt + 1, delay)
                    self._sleep(delay)
        if isinstance(last, RateLimitedError):
            raise RateLimitExhaustedError(
                f"{request.profile.name}: still rate limited after {attempts} attempts"
            ) from last
        raise TransportError(f"{request.profile.name}: failed after {attempts} attempts: {last}") from last

    # -------------------------------------------------------------------------

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        """Return the completion for ``request``, from cache when possible.

        Raises:
            InputValidationError: Empty message.
            AuthError: Missing or rejected credentials.
            RateLimitExhaustedError: 429 after every retry.
            TransportError: Unreachable endpoint after every retry.
            MalformedReplyError: Reply is not a chat completion.
            IngestionError: An image segment cannot be read.
        """
        if request.message.is_empty():
            raise InputValidationError(f"empty message for profile {request.profile.name!r}")
        digest = cache_key(request, self.resolver)

        if self.cache is not None:
            hit = self.cache.get(digest)
            if hit is not None:
                self._record(request, digest, True, hit.latency_ms, "ok")
                return hit

        try:
            response = self._call_with_retries(request, digest)
        except GatewayError as exc:
            self._record(request, digest, False, 0.0, type(exc).__name__)
            raise
        self._record(request, digest, False, response.latency_ms, "ok")
        if self.cache is not None:
            self.cache.put(digest, response)
        return response

    def close(self) -> None:
        if self._http is not None and self._http_client is None:
            self._http.client.close()
