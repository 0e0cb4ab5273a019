"""Text and image search clients and retrieved-context assembly."""

from .context import NO_RESULTS_MARKER, assemble_context, pick_retrieval_query
from .providers import FixtureSearchProvider, HttpSearchProvider, MockSearchProvider, build_provider
from .search import Retriever, SearchCache, SearchClient
from .types import IssuedQuery, ProviderResult, RetrievedContext, Snippet

__all__ = [
    "FixtureSearchProvider",
    "HttpSearchProvider",
    "IssuedQuery",
    "MockSearchProvider",
    "NO_RESULTS_MARKER",
    "ProviderResult",
    "RetrievedContext",
    "Retriever",
    "SearchCache",
    "SearchClient",
    "Snippet",
    "assemble_context",
    "build_provider",
    "pick_retrieval_query",
]
