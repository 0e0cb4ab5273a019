"""Choosing what to search for, and turning results into a prompt segment."""

from __future__ import annotations

from boundary.types import QueryRecord
from config import CONTEXT_CHAR_BUDGET, RetrievalPolicy
from errors import InputValidationError

from .types import IssuedQuery, RetrievedContext

CONTEXT_HEADER = "Search results:\n"
NO_RESULTS_MARKER = "No relevant search results were found."


def pick_retrieval_query(query: QueryRecord, policy: RetrievalPolicy = RetrievalPolicy.GOLD_IF_PRESENT) -> IssuedQuery:
    """Decide what is sent to the search provider.

    An annotated gold query always wins and is used verbatim for text
    search. Otherwise ``text`` searches the question, ``image`` the first
    image, and the default searches the first image, falling back to the
    question for text-only items.

    Raises:
        InputValidationError: The policy needs an image or text the query lacks.
    """
    policy = RetrievalPolicy(policy)
    if query.gold_query and query.gold_query.strip():
        return IssuedQuery(kind="text", text=query.gold_query)
    if policy == RetrievalPolicy.TEXT:
        if not query.text.strip():
            raise InputValidationError(f"query {query.id!r} has no text for text search")
        return IssuedQuery(kind="text", text=query.text)
    if query.images:
        return IssuedQuery(kind="image", image=query.images[0])
    if policy == RetrievalPolicy.IMAGE:
        raise InputValidationError(f"query {query.id!r} has no image for image search")
    return IssuedQuery(kind="text", text=query.text)


def format_snippet(rank: int, title: str, text: str, url: str) -> str:
    lines = [f"[{rank}] {title}".rstrip()]
    if text:
        lines.append(text)
    if url:
        lines.append(f"(source: {url})")
    return "\n".join(lines) + "\n"


def assemble_context(ctx: RetrievedContext, budget: int = CONTEXT_CHAR_BUDGET) -> str:
    """Numbered snippets in rank order under a fixed header.

    Whole snippets only: the first snippet that would overflow ``budget``
    ends the context. With no snippet fitting, a no-results marker is
    returned instead. The result never exceeds ``budget`` characters.

    Raises:
        InputValidationError: ``budget`` is not positive.
    """
    if budget <= 0:
        raise InputValidationError(f"context budget must be positive, got {budget}")
    parts = [CONTEXT_HEADER]
    used = len(CONTEXT_HEADER)
    kept = 0
    for rank, snippet in enumerate(ctx.snippets, start=1):
        block = format_snippet(rank, snippet.title, snippet.text, snippet.url)
        if used + len(block) > budget:
            break
        parts.append(block)
        used += len(block)
        kept += 1
    if kept == 0:
        return (CONTEXT_HEADER + NO_RESULTS_MARKER)[:budget]
    return "".join(parts)
