"""R-fold sampling of the target VLLM."""

from __future__ import annotations

import logging

from boundary.prompts import RenderedMessage, TemplateLibrary, render_prompt
from boundary.types import QueryRecord
from config import DEFAULT_PARALLELISM, TemplateVariant
from errors import InputValidationError
from gateway.client import ModelGateway
from gateway.types import GenerationRequest
from pipeline_config import EndpointProfile
from runstore.fanout import run_units

from .types import Sample, SampleSet

logger = logging.getLogger(__name__)


def sampling_message(query: QueryRecord, profile: EndpointProfile, templates: TemplateLibrary) -> RenderedMessage:
    """Plain answer prompt used for every draw."""
    return render_prompt(templates.get(TemplateVariant.ANSWER, profile.dialect), query, {})


def draw_sample(
    gateway: ModelGateway,
    profile: EndpointProfile,
    message: RenderedMessage,
    index: int,
) -> Sample:
    response = gateway.generate(GenerationRequest(profile=profile, message=message, sample_index=index))
    return Sample(index=index, text=response.text, latency_ms=response.latency_ms)


def sample_query(
    query: QueryRecord,
    profile: EndpointProfile,
    R: int,
    gateway: ModelGateway,
    templates: TemplateLibrary,
    parallelism: int = DEFAULT_PARALLELISM,
    done: dict[int, Sample] | None = None,
) -> SampleSet:
    """Draw R answers for one query with bounded parallel fan-out.

    ``done`` holds samples recovered from a checkpoint; only the missing
    indices are drawn. Failed draws leave the set incomplete with ``error``.

    Raises:
        InputValidationError: R < 1 or the query has no content.
    """
    if R < 1:
        raise InputValidationError(f"R must be at least 1, got {R}")
    message = sampling_message(query, profile, templates)
    samples = dict(done or {})
    missing = [i for i in range(R) if i not in samples]
    errors: list[str] = []

    run_units(
        missing,
        lambda i: draw_sample(gateway, profile, message, i),
        on_done=lambda i, sample: samples.__setitem__(i, sample),
        on_error=lambda i, exc: errors.append(f"sample {i}: {exc}"),
        parallelism=parallelism,
        desc=f"Sampling {query.id}",
    )

    if errors:
        logger.warning("Query %s: %d of %d samples failed", query.id, len(errors), R)
    return SampleSet(
        query_id=query.id,
        source=query.source,
        requested_R=R,
        samples=[samples[i] for i in sorted(samples)],
        error="; ".join(sorted(errors)) or None,
    )
