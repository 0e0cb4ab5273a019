"""Resolve image refs to bytes, content hashes and media types."""

from __future__ import annotations

import base64
import binascii
import hashlib
import io
import logging
import threading
from pathlib import Path
from urllib.parse import unquote, urlparse

import httpx
from PIL import Image, UnidentifiedImageError

from boundary.types import ImageRef
from config import GATEWAY_TIMEOUT_SECONDS
from errors import IngestionError

from .cache import ImageCache

logger = logging.getLogger(__name__)

REMOTE_SCHEMES = ("http", "https")


def _is_remote(uri: str) -> bool:
    return urlparse(uri).scheme in REMOTE_SCHEMES


class ImageResolver:
    """Turns ``ImageRef`` values into bytes for hashing and upload.

    Local paths (plain or ``file://``) resolve against ``base_dir``. Remote
    URLs are downloaded into ``cache`` when ``fetch_remote`` is set;
    otherwise they stay links and are hashed by their URL text, which
    keeps offline mock runs reproducible without network access.
    """

    def __init__(
        self,
        base_dir: Path | None = None,
        cache: ImageCache | None = None,
        fetch_remote: bool = True,
        client: httpx.Client | None = None,
    ):
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        self.cache = cache
        self.fetch_remote = fetch_remote
        self._client = client
        self._hashes: dict[ImageRef, str] = {}
        self._lock = threading.Lock()

    # -------------------------------------------------------------------------

    def _local_path(self, uri: str) -> Path:
        parsed = urlparse(uri)
        raw = unquote(parsed.path) if parsed.scheme == "file" else uri
        path = Path(raw)
        return path if path.is_absolute() else self.base_dir / path

    def _download(self, url: str) -> bytes:
        cache_path = self.cache.get_cache_path(url) if self.cache else None
        if cache_path is not None:
            cached = self.cache.load_from_cache(cache_path)
            if cached is not None:
                return cached
        client = self._client or httpx.Client(timeout=GATEWAY_TIMEOUT_SECONDS, follow_redirects=True)
        try:
            response = client.get(url)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise IngestionError(f"cannot download image {url}: {exc}") from exc
        finally:
            if self._client is None:
                client.close()
        data = response.content
        if cache_path is not None:
            self.cache.cache_image(data, cache_path)
        logger.debug("Downloaded %s (%d bytes)", url, len(data))
        return data

    def load_bytes(self, ref: ImageRef) -> bytes | None:
        """Return image bytes, or None for a remote link left unfetched.

        Raises:
            IngestionError: If the ref cannot be read or decoded.
        """
        if ref.inline:
            try:
                return base64.b64decode(ref.data or "", validate=True)
            except (binascii.Error, ValueError) as exc:
                raise IngestionError(f"inline image is not valid base64: {exc}") from exc
        uri = ref.uri or ""
        if _is_remote(uri):
            return self._download(uri) if self.fetch_remote else None
        path = self._local_path(uri)
        try:
            return path.read_bytes()
        except OSError as exc:
            raise IngestionError(f"cannot read image {uri}: {exc}") from exc

    def content_hash(self, ref: ImageRef) -> str:
        """SHA-256 of the image content (or of the URL for unfetched links)."""
        with self._lock:
            known = self._hashes.get(ref)
        if known is not None:
            return known
        data = self.load_bytes(ref)
        if data is None:
            digest = "url:" + hashlib.sha256((ref.uri or "").encode("utf-8")).hexdigest()
        else:
            digest = hashlib.sha256(data).hexdigest()
        with self._lock:
            self._hashes[ref] = digest
        return digest

    def media_type(self, ref: ImageRef, data: bytes) -> str:
        """Sniff the media type with Pillow; inline refs trust their declared type."""
        if ref.inline and ref.media_type:
            return ref.media_type
        try:
            with Image.open(io.BytesIO(data)) as img:
                fmt = img.format
                img.verify()
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            raise IngestionError(f"unreadable image {ref.describe()}: {exc}") from exc
        return Image.MIME.get(fmt or "", "application/octet-stream")

    def data_url(self, ref: ImageRef) -> str:
        """Image as an http(s) URL or a base64 data URL, for chat payloads."""
        data = self.load_bytes(ref)
        if data is None:
            return ref.uri or ""
        encoded = base64.b64encode(data).decode("ascii")
        return f"data:{self.media_type(ref, data)};base64,{encoded}"
