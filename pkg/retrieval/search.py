"""Search clients: caching, rate limits and retries around a provider."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import threading
import time
from collections.abc import Callable
from pathlib import Path

from pydantic import BaseModel, ValidationError

from boundary.types import ImageRef, QueryRecord
from config import RetrievalPolicy
from errors import InputValidationError, QuotaError, SearchError
from gateway.throttle import Throttle, backoff_delay
from pipeline_config import RetryPolicy, SearchProviderConfig
from sources.images import ImageResolver

from .context import pick_retrieval_query
from .providers import SearchProvider, SearchThrottled, SearchUnavailable
from .types import IssuedQuery, ProviderResult, RetrievedContext

logger = logging.getLogger(__name__)


class _CacheEntry(BaseModel):
    stored_at: float
    result: ProviderResult


class SearchCache:
    """Search results keyed by (provider, issued query), with timestamps.

    Entries older than ``max_age_seconds`` count as misses; None keeps
    them forever.
    """

    def __init__(self, root: Path, max_age_seconds: float | None = None, clock: Callable[[], float] = time.time):
        self.root = Path(root)
        self.max_age_seconds = max_age_seconds
        self._clock = clock

    def path_for(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> ProviderResult | None:
        path = self.path_for(key)
        try:
            entry = _CacheEntry.model_validate_json(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except ValidationError:
            logger.warning("Ignoring corrupt search cache record %s", path)
            return None
        if self.max_age_seconds is not None and self._clock() - entry.stored_at > self.max_age_seconds:
            logger.debug("Search cache entry %s expired", key[:12])
            return None
        return entry.result

    def put(self, key: str, result: ProviderResult) -> None:
        path = self.path_for(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
        tmp.write_text(_CacheEntry(stored_at=self._clock(), result=result).model_dump_json(), encoding="utf-8")
        os.replace(tmp, path)


class SearchClient:
    """One provider with its own rate limit, retry policy and cache."""

    def __init__(
        self,
        provider: SearchProvider,
        cfg: SearchProviderConfig,
        resolver: ImageResolver | None = None,
        cache: SearchCache | None = None,
        retry: RetryPolicy | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.provider = provider
        self.top_k = cfg.top_k
        self.resolver = resolver or ImageResolver(fetch_remote=False)
        self.cache = cache
        self.retry = retry or RetryPolicy()
        self.throttle = Throttle(cfg.rate_limit.requests_per_second, cfg.rate_limit.max_in_flight, sleep=sleep)
        self._sleep = sleep
        self._rng = rng or random.Random()
        self.provider_calls = 0
        self._calls_lock = threading.Lock()
        # Mock and fixture results never answer for a live provider of the same name
        self._scope = [cfg.kind, cfg.base_url.rstrip("/") if cfg.kind == "http" else ""]

    @property
    def name(self) -> str:
        return self.provider.name

    def _key(self, kind: str, value: str) -> str:
        payload = json.dumps(
            [self.provider.name, *self._scope, kind, value, self.top_k], separators=(",", ":"), ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _call(self, fn: Callable[[], ProviderResult]) -> ProviderResult:
        attempts = self.retry.max_retries + 1
        last: SearchError | None = None
        for attempt in range(attempts):
            try:
                with self.throttle.slot():
                    with self._calls_lock:
                        self.provider_calls += 1
                    return fn()
            except (SearchThrottled, SearchUnavailable) as exc:
                last = exc
                if attempt + 1 < attempts:
                    self._sleep(backoff_delay(
                        attempt, self.retry.backoff_base_seconds, self.retry.backoff_cap_seconds, self._rng,
                    ))
        if isinstance(last, SearchThrottled):
            raise QuotaError(f"{self.name}: quota exhausted after {attempts} attempts") from last
        raise SearchError(f"{self.name}: failed after {attempts} attempts: {last}") from last

    def _run(self, issued: IssuedQuery, key: str, fn: Callable[[], ProviderResult], query_id: str) -> RetrievedContext:
        cached = self.cache.get(key) if self.cache is not None else None
        result = cached if cached is not None else self._call(fn)
        if cached is None and self.cache is not None:
            self.cache.put(key, result)
        return RetrievedContext(
            query_id=query_id,
            provider=self.name,
            issued=issued,
            snippets=result.snippets[: self.top_k],
            images=result.images[: self.top_k],
            duration_ms=result.duration_ms,
            cached=cached is not None,
        )

    def search_text(self, text: str, query_id: str = "") -> RetrievedContext:
        """Top-k snippets for a text query, in provider rank order.

        Raises:
            InputValidationError: Empty query text.
            QuotaError: Provider kept answering 429.
            SearchError: Any other provider failure.
        """
        if not (text or "").strip():
            raise InputValidationError("search query text is empty")
        issued = IssuedQuery(kind="text", text=text)
        return self._run(
            issued, self._key("text", text), lambda: self.provider.search_text(text, self.top_k), query_id,
        )

    def search_image(self, image: ImageRef, query_id: str = "") -> RetrievedContext:
        """Top-k visually matched pages for an image.

        Raises:
            IngestionError: The image cannot be read.
            QuotaError, SearchError: Provider failures.
        """
        data = self.resolver.load_bytes(image)
        if data is not None:
            self.resolver.media_type(image, data)
        image_hash = self.resolver.content_hash(image)
        issued = IssuedQuery(kind="image", image=image)
        return self._run(
            issued,
            self._key("image", image_hash),
            lambda: self.provider.search_image(image, image_hash, self.top_k),
            query_id,
        )


class Retriever:
    """Picks the issued query per policy and routes it to the text or image client."""

    def __init__(
        self,
        text_client: SearchClient | None,
        image_client: SearchClient | None,
        policy: RetrievalPolicy = RetrievalPolicy.GOLD_IF_PRESENT,
    ):
        self.text_client = text_client
        self.image_client = image_client
        self.policy = policy

    def retrieve(self, query: QueryRecord) -> RetrievedContext:
        issued = pick_retrieval_query(query, self.policy)
        if issued.kind == "text":
            if self.text_client is None:
                raise SearchError("no text search provider configured")
            return self.text_client.search_text(issued.text or "", query_id=query.id)
        if self.image_client is None:
            raise SearchError("no image search provider configured")
        return self.image_client.search_image(issued.image, query_id=query.id)
