"""
Query sources.

Loading query files and resolving the image refs they contain.
"""

from .cache import ImageCache
from .images import ImageResolver
from .queries import index_queries, load_queries

__all__ = [
    "ImageCache",
    "ImageResolver",
    "index_queries",
    "load_queries",
]
