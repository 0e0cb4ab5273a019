"""Exception hierarchy shared by all pipeline stages.

Validation-style errors also subclass ``ValueError`` so callers that only
care about bad input can keep catching that.
"""

from __future__ import annotations


class KnowledgeBoundaryError(Exception):
    """Base class for every error raised on purpose by this package."""


class InputValidationError(KnowledgeBoundaryError, ValueError):
    """A precondition on caller-supplied data does not hold."""


class ScoreRangeError(InputValidationError):
    """A score or threshold lies outside the scale it is used with."""


class ConfigurationError(KnowledgeBoundaryError, ValueError):
    """Run configuration, profile, or template is inconsistent."""


class IntegrityError(KnowledgeBoundaryError):
    """Records that must line up (labels vs queries, ids) do not."""


class IngestionError(KnowledgeBoundaryError):
    """An input file or image reference cannot be read."""


class ParseFailure(KnowledgeBoundaryError):
    """Model output or input row does not have the expected shape."""


# =============================================================================
# Gateway
# =============================================================================


class GatewayError(KnowledgeBoundaryError):
    """A generation endpoint call failed."""


class TransportError(GatewayError):
    """Network-level or 5xx failure; retried with backoff."""


class AuthError(GatewayError):
    """Credentials missing or rejected; never retried."""


class RateLimitExhaustedError(GatewayError):
    """Endpoint kept answering 429 after all retries."""


class MalformedReplyError(GatewayError):
    """Endpoint replied with something that is not a chat completion."""


class CacheConflictError(GatewayError):
    """Two different payloads were written under one cache digest."""


# =============================================================================
# Retrieval
# =============================================================================


class SearchError(KnowledgeBoundaryError):
    """A search provider call failed."""


class QuotaError(SearchError):
    """Search provider kept answering 429 after all retries."""


# =============================================================================
# Run store
# =============================================================================


class ResumeError(KnowledgeBoundaryError):
    """A run directory cannot be continued with the current configuration."""


class RunLockedError(KnowledgeBoundaryError):
    """Another coordinator process holds the run directory lock."""
