"""Judge scoring of sampled answers and mean aggregation."""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Iterable

from boundary.prompts import TemplateLibrary, render_prompt
from boundary.types import QueryRecord, ScoreScale
from config import JUDGE_PARSE_RETRIES, MIN_VALID_SCORES, TemplateVariant
from errors import InputValidationError
from gateway.client import ModelGateway
from gateway.types import GenerationRequest
from pipeline_config import EndpointProfile

from .types import JudgedQuery, JudgeScore

logger = logging.getLogger(__name__)

NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")


def parse_score(text: str, scale: ScoreScale) -> float | None:
    """First decimal number in ``text`` clamped onto the scale, or None."""
    match = NUMBER_RE.search(text or "")
    if match is None:
        return None
    return scale.clamp(float(match.group()))


def judge_sample(
    query: QueryRecord,
    sample_text: str,
    judge: EndpointProfile,
    scale: ScoreScale,
    gateway: ModelGateway,
    templates: TemplateLibrary,
    index: int = 0,
    retries: int = JUDGE_PARSE_RETRIES,
) -> JudgeScore:
    """Score one prediction against the gold answer.

    Each retry is a separate request (the attempt number is its sample
    index), so retries are cached and resumable like any other call.

    Raises:
        InputValidationError: The query has no gold answer.
        GatewayError: The judge endpoint failed after transport retries.
    """
    if not query.gold_answer.strip():
        raise InputValidationError(f"query {query.id!r} has no gold answer to judge against")
    template = templates.get(TemplateVariant.JUDGE, judge.dialect)
    message = render_prompt(template, query, {"prediction": sample_text, "gold": query.gold_answer})

    raw = ""
    for attempt in range(retries + 1):
        response = gateway.generate(
            GenerationRequest(profile=judge, message=message, sample_index=attempt, expect="score")
        )
        raw = response.text
        score = parse_score(raw, scale)
        if score is not None:
            return JudgeScore(index=index, score=score, raw=raw, attempts=attempt + 1)
        logger.debug("Query %s sample %d: unparsable judge reply %r", query.id, index, raw[:80])
    logger.warning("Query %s sample %d: judge reply unparsable after %d attempts", query.id, index, retries + 1)
    return JudgeScore(index=index, score=None, raw=raw, attempts=retries + 1)


def aggregate(scores: Iterable[float | None], min_valid: int = MIN_VALID_SCORES) -> float:
    """Arithmetic mean of the valid scores.

    Raises:
        InputValidationError: Fewer than ``min_valid`` valid scores.
    """
    valid = [s for s in scores if s is not None]
    if len(valid) < max(1, min_valid):
        raise InputValidationError(f"{len(valid)} valid scores, need at least {max(1, min_valid)}")
    return math.fsum(valid) / len(valid)


def judged_query(
    query: QueryRecord,
    scores: list[JudgeScore],
    min_valid: int = MIN_VALID_SCORES,
) -> JudgedQuery:
    """Fold per-sample judge scores into a ``JudgedQuery``.

    Raises:
        InputValidationError: Too few valid scores; the caller drops the query.
    """
    ordered = sorted(scores, key=lambda s: s.index)
    mean = aggregate((s.score for s in ordered), min_valid)
    valid = sum(1 for s in ordered if s.valid)
    return JudgedQuery(
        query_id=query.id,
        source=query.source,
        scores=ordered,
        valid_count=valid,
        invalid_count=len(ordered) - valid,
        mean_score=mean,
    )
