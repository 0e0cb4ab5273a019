"""Content-addressed response cache and the request digest it is keyed by."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from pathlib import Path

from pydantic import ValidationError

from errors import CacheConflictError
from sources.images import ImageResolver

from .types import GenerationRequest, GenerationResponse

logger = logging.getLogger(__name__)


def canonical_request(request: GenerationRequest, resolver: ImageResolver) -> dict:
    """Canonical form of a request: backend, model, message with image hashes, decoding, index.

    The profile name and credentials are not part of it, so two profiles
    serving the same model from the same place share cache entries. Mock
    replies never answer an http request, and two http servers never
    answer for each other.
    """
    segments = []
    for seg in request.message.segments:
        if seg.kind == "image" and seg.image is not None:
            segments.append({"image": resolver.content_hash(seg.image)})
        else:
            segments.append({"text": seg.text or ""})
    profile = request.profile
    return {
        "backend": profile.backend,
        "base_url": profile.base_url.rstrip("/") if profile.backend == "http" else "",
        "model": profile.model_name,
        "message": segments,
        "decoding": request.decoding.resolved(),
        "sample_index": request.sample_index,
    }


def cache_key(request: GenerationRequest, resolver: ImageResolver | None = None) -> str:
    """SHA-256 digest identifying a generation request.

    Raises:
        IngestionError: If an image segment cannot be read.
    """
    resolver = resolver or ImageResolver(fetch_remote=False)
    payload = json.dumps(
        canonical_request(request, resolver),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Digest-named JSON records under ``<root>/<digest[:2]>/<digest>.json``.

    Writing identical content twice is a no-op; writing different content
    under an existing digest raises ``CacheConflictError``.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def path_for(self, digest: str) -> Path:
        return self.root / digest[:2] / f"{digest}.json"

    def get(self, digest: str) -> GenerationResponse | None:
        path = self.path_for(digest)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        try:
            stored = GenerationResponse.model_validate_json(raw)
        except ValidationError:
            logger.warning("Ignoring corrupt cache record %s", path)
            return None
        return stored.model_copy(update={"cached": True, "digest": digest})

    @staticmethod
    def _content(response: GenerationResponse) -> tuple:
        return (response.text, response.finish_reason)

    def put(self, digest: str, response: GenerationResponse) -> None:
        record = response.model_copy(update={"cached": False, "digest": digest})
        path = self.path_for(digest)
        with self._lock:
            existing = self.get(digest)
            if existing is not None:
                if self._content(existing) != self._content(record):
                    raise CacheConflictError(
                        f"cache digest {digest} already holds a different response"
                    )
                return
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
            tmp.write_text(record.model_dump_json(), encoding="utf-8")
            os.replace(tmp, path)

    def __contains__(self, digest: str) -> bool:
        return self.path_for(digest).exists()
