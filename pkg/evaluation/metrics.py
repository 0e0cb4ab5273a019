"""Answer metrics: judge score on 0..100, token accuracy, search ratio."""

from __future__ import annotations

import re
import string
from collections import Counter
from collections.abc import Iterable

from boundary.prompts import TemplateLibrary
from boundary.types import QueryRecord, ScoreScale
from config import JUDGE_PARSE_RETRIES
from errors import InputValidationError
from gate.types import GateDecision
from gateway.client import ModelGateway
from pipeline_config import EndpointProfile
from sampling.judge import judge_sample

_PUNCT_RE = re.compile("[" + re.escape(string.punctuation) + "]")
_SPACE_RE = re.compile(r"\s+")


def normalize_answer(text: str) -> str:
    """Lowercase, drop ASCII punctuation, collapse whitespace. Articles are kept."""
    text = _PUNCT_RE.sub("", (text or "").lower())
    return _SPACE_RE.sub(" ", text).strip()


def answer_tokens(text: str) -> list[str]:
    return normalize_answer(text).split()


def token_accuracy(prediction: str, gold: str) -> float:
    """Share of prediction tokens found in the gold answer, as a percentage.

    Tokens are matched as multisets; an empty prediction scores 0.
    """
    pred = answer_tokens(prediction)
    if not pred:
        return 0.0
    common = Counter(pred) & Counter(answer_tokens(gold))
    return 100.0 * sum(common.values()) / len(pred)


def rescale_score(score: float, scale: ScoreScale) -> float:
    """Map a judge score on [s_w, s_c] linearly onto [0, 100]."""
    score = scale.check(score, "judge score")
    return (score - scale.s_w) / (scale.s_c - scale.s_w) * 100.0


def llm_metric(
    prediction: str,
    query: QueryRecord,
    judge: EndpointProfile,
    scale: ScoreScale,
    gateway: ModelGateway,
    templates: TemplateLibrary,
    retries: int = JUDGE_PARSE_RETRIES,
) -> float | None:
    """Judge one prediction against the query's gold answer; None if the reply never parsed.

    Raises:
        InputValidationError: The query has no gold answer.
        GatewayError: The judge endpoint failed.
    """
    result = judge_sample(query, prediction, judge, scale, gateway, templates, index=0, retries=retries)
    if result.score is None:
        return None
    return rescale_score(result.score, scale)


def search_ratio(decisions: Iterable[GateDecision | bool]) -> float:
    """Percentage of queries routed to retrieval.

    Raises:
        InputValidationError: No decisions.
    """
    flags = [d if isinstance(d, bool) else d.retrieve for d in decisions]
    if not flags:
        raise InputValidationError("search ratio of an empty decision set")
    return 100.0 * sum(flags) / len(flags)
