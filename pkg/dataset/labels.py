"""Hard and soft boundary labels from judged queries."""

from __future__ import annotations

import logging
from collections.abc import Iterable

from boundary.scale import DEFAULT_SCALE, flip_score, hard_label
from boundary.types import BoundaryLabel, ScoreScale
from sampling.types import JudgedQuery

logger = logging.getLogger(__name__)


def build_labels(
    judged: Iterable[JudgedQuery],
    epsilon: float,
    scale: ScoreScale = DEFAULT_SCALE,
) -> list[BoundaryLabel]:
    """One label per judged query, sorted by query id.

    ``hard`` is True (search needed) when the mean score is below
    ``epsilon``; ``soft`` is the flipped mean score.

    Raises:
        ScoreRangeError: ``epsilon`` or a mean score lies outside the scale.
    """
    epsilon = scale.check(epsilon, "epsilon")
    labels = [
        BoundaryLabel(
            query_id=jq.query_id,
            source=jq.source,
            mean_score=jq.mean_score,
            hard=hard_label(jq.mean_score, epsilon, scale),
            soft=flip_score(jq.mean_score, scale),
            epsilon_used=epsilon,
            origin="judged",
        )
        for jq in judged
    ]
    labels.sort(key=lambda label: label.query_id)
    outside = sum(1 for label in labels if label.hard)
    logger.info("Built %d labels at epsilon=%s (%d need search)", len(labels), epsilon, outside)
    return labels
