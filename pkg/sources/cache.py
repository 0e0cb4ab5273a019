"""
Download cache for remote query images.

Remote image URLs are fetched once and stored under ``<run-dir>/cache/images``.
"""

from __future__ import annotations

import hashlib
import os
import threading
from pathlib import Path

EXTENSION_BY_MEDIA_TYPE = {
    "image/jpeg": ".jpg",
    "image/png": ".png",
    "image/webp": ".webp",
    "image/gif": ".gif",
    "image/bmp": ".bmp",
    "image/tiff": ".tiff",
}


class ImageCache:
    """Content store for downloaded images, keyed by URL hash."""

    def __init__(self, cache_dir: Path):
        self.cache_dir = Path(cache_dir)

    def get_cache_path(self, url: str) -> Path:
        """Return the cache file path for a URL (extension taken from the URL)."""
        url_hash = hashlib.md5(url.encode()).hexdigest()[:12]
        suffix = Path(url.split("?", 1)[0]).suffix.lower()
        if suffix not in EXTENSION_BY_MEDIA_TYPE.values() and suffix != ".jpeg":
            suffix = ".img"
        return self.cache_dir / f"{url_hash}{suffix}"

    def cache_image(self, image_data: bytes, cache_path: Path) -> None:
        """Write image bytes atomically."""
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        tmp = cache_path.with_name(f".{cache_path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
        tmp.write_bytes(image_data)
        os.replace(tmp, cache_path)

    def load_from_cache(self, cache_path: Path) -> bytes | None:
        if cache_path.exists():
            return cache_path.read_bytes()
        return None
