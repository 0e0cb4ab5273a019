"""Search providers: HTTP (SerpAPI-style), canned fixtures and a deterministic mock.

Every provider exposes ``search_text`` and ``search_image`` returning a
``ProviderResult``; swapping providers changes only the contents.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from collections.abc import Callable
from pathlib import Path
from typing import Any, Protocol

import httpx

from boundary.types import ImageRef
from errors import ConfigurationError, SearchError
from pipeline_config import SearchProviderConfig

from .types import ProviderResult, Snippet

logger = logging.getLogger(__name__)


class SearchThrottled(SearchError):
    """One 429 from a provider; retried by the search client."""


class SearchUnavailable(SearchError):
    """Network failure or 5xx from a provider; retried by the search client."""


class SearchProvider(Protocol):
    name: str

    def search_text(self, text: str, top_k: int) -> ProviderResult: ...

    def search_image(self, image: ImageRef, image_hash: str, top_k: int) -> ProviderResult: ...


def _digest(*parts: str) -> str:
    return hashlib.sha256("\0".join(parts).encode("utf-8")).hexdigest()


def synthetic_duration_ms(digest: str) -> float:
    """Deterministic provider latency in [20, 120) ms."""
    return 20.0 + int(digest[:6], 16) % 100


# =============================================================================
# Mock
# =============================================================================


class MockSearchProvider:
    """Synthetic top-k results derived from the issued query."""

    def __init__(self, name: str = "mock"):
        self.name = name

    def _results(self, key: str, label: str, top_k: int) -> ProviderResult:
        digest = _digest(self.name, key)
        snippets = [
            Snippet(
                title=f"Result {rank + 1} for {label}",
                text=f"mock snippet {digest[:8]}-{rank + 1}",
                url=f"https://search.invalid/{digest[:12]}/{rank + 1}",
            )
            for rank in range(top_k)
        ]
        return ProviderResult(snippets=snippets, duration_ms=synthetic_duration_ms(digest))

    def search_text(self, text: str, top_k: int) -> ProviderResult:
        return self._results("text:" + text, text[:40], top_k)

    def search_image(self, image: ImageRef, image_hash: str, top_k: int) -> ProviderResult:
        return self._results("image:" + image_hash, "image", top_k)


# =============================================================================
# Fixture
# =============================================================================


class FixtureSearchProvider:
    """Canned results from ``<fixture_dir>/results.json``.

    ::

        {"text":  {"<query text>": [{"title": ..., "text": ..., "url": ...}, ...]},
         "image": {"<image sha256 or uri>": [{..., "image": "<uri>"}, ...]}}

    Unknown queries return zero results.
    """

    def __init__(self, name: str, fixture_dir: Path):
        self.name = name
        path = Path(fixture_dir) / "results.json"
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read search fixture {path}: {exc}") from exc
        self._text: dict[str, list[dict[str, Any]]] = data.get("text", {})
        self._image: dict[str, list[dict[str, Any]]] = data.get("image", {})

    @staticmethod
    def _to_result(entries: list[dict[str, Any]], top_k: int, digest: str) -> ProviderResult:
        entries = entries[:top_k]
        snippets = [
            Snippet(title=e.get("title", ""), text=e.get("text", e.get("snippet", "")), url=e.get("url", e.get("link", "")))
            for e in entries
        ]
        images = [ImageRef(uri=e["image"]) for e in entries if e.get("image")]
        return ProviderResult(snippets=snippets, images=images, duration_ms=synthetic_duration_ms(digest))

    def search_text(self, text: str, top_k: int) -> ProviderResult:
        return self._to_result(self._text.get(text, []), top_k, _digest(self.name, "text", text))

    def search_image(self, image: ImageRef, image_hash: str, top_k: int) -> ProviderResult:
        entries = self._image.get(image_hash)
        if entries is None and image.uri:
            entries = self._image.get(image.uri)
        return self._to_result(entries or [], top_k, _digest(self.name, "image", image_hash))


# =============================================================================
# HTTP
# =============================================================================


class HttpSearchProvider:
    """SerpAPI-style JSON search over HTTP.

    Text search sends ``q``; image search sends the public image URL as
    ``url`` (visual search engines cannot fetch local or inline images).
    """

    def __init__(
        self,
        cfg: SearchProviderConfig,
        client: httpx.Client | None = None,
        clock: Callable[[], float] = time.perf_counter,
    ):
        self.name = cfg.name
        self.cfg = cfg
        self.client = client or httpx.Client()
        self._clock = clock

    def _key(self) -> dict[str, str]:
        if not self.cfg.auth_env:
            return {}
        key = os.environ.get(self.cfg.auth_env)
        if not key:
            raise SearchError(f"provider {self.name!r}: environment variable {self.cfg.auth_env} is not set")
        return {"api_key": key}

    def _get(self, params: dict[str, Any]) -> tuple[dict[str, Any], float]:
        start = self._clock()
        try:
            response = self.client.get(
                self.cfg.base_url,
                params={**self.cfg.params, **params, **self._key()},
                timeout=self.cfg.timeout_seconds,
            )
        except httpx.TransportError as exc:
            raise SearchUnavailable(f"{self.name}: {exc}") from exc
        duration_ms = max(0.0, (self._clock() - start) * 1000.0)
        if response.status_code == 429:
            raise SearchThrottled(f"{self.name}: rate limited")
        if response.status_code >= 500:
            raise SearchUnavailable(f"{self.name}: server error {response.status_code}")
        if response.status_code >= 400:
            raise SearchError(f"{self.name}: request rejected ({response.status_code})")
        try:
            return response.json(), duration_ms
        except ValueError as exc:
            raise SearchError(f"{self.name}: reply is not JSON") from exc

    def search_text(self, text: str, top_k: int) -> ProviderResult:
        data, duration_ms = self._get({"q": text, "num": top_k})
        snippets = [
            Snippet(title=item.get("title", ""), text=item.get("snippet", ""), url=item.get("link", ""))
            for item in (data.get("organic_results") or [])[:top_k]
        ]
        return ProviderResult(snippets=snippets, duration_ms=duration_ms)

    def search_image(self, image: ImageRef, image_hash: str, top_k: int) -> ProviderResult:
        if image.inline or not (image.uri or "").startswith(("http://", "https://")):
            raise SearchError(f"{self.name}: image search needs a public image URL, got {image.describe()}")
        data, duration_ms = self._get({"url": image.uri})
        matches = (data.get("visual_matches") or [])[:top_k]
        snippets = [
            Snippet(title=m.get("title", ""), text=m.get("snippet", m.get("source", "")), url=m.get("link", ""))
            for m in matches
        ]
        images = [ImageRef(uri=m["thumbnail"]) for m in matches if m.get("thumbnail")]
        return ProviderResult(snippets=snippets, images=images, duration_ms=duration_ms)


def build_provider(cfg: SearchProviderConfig, client: httpx.Client | None = None) -> SearchProvider:
    if cfg.kind == "mock":
        return MockSearchProvider(cfg.name)
    if cfg.kind == "fixture":
        return FixtureSearchProvider(cfg.name, cfg.fixture_dir)
    return HttpSearchProvider(cfg, client=client)
