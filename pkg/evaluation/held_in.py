"""Boundary-model accuracy on queries it was trained on."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from typing import Literal

from pydantic import BaseModel

from boundary.types import BoundaryLabel, QueryRecord
from config import DEFAULT_PARALLELISM, HELD_IN_SOFT_TOLERANCE
from errors import InputValidationError, IntegrityError, ParseFailure
from gate.gatekeeper import Gatekeeper
from runstore.fanout import run_units

logger = logging.getLogger(__name__)

HeldInVariant = Literal["hard", "soft"]

Prediction = bool | float | None


class HeldInResult(BaseModel):
    variant: HeldInVariant
    n: int
    correct: int
    unparsable: int
    accuracy: float
    tolerance: float | None = None


def _matches(pred: Prediction, label: bool | float, variant: HeldInVariant, tolerance: float) -> bool:
    if pred is None:
        return False
    if variant == "hard":
        return bool(pred) == bool(label)
    return abs(float(pred) - float(label)) <= tolerance + 1e-9


def held_in_accuracy(
    predictions: Mapping[str, Prediction],
    labels: Mapping[str, bool | float],
    variant: HeldInVariant = "hard",
    tolerance: float = HELD_IN_SOFT_TOLERANCE,
) -> HeldInResult:
    """Percentage of predictions matching their labels.

    Hard predictions must equal the label; soft predictions count when
    within ``tolerance``. A None prediction (unparsable output) is wrong.

    Raises:
        IntegrityError: Prediction and label ids differ.
        InputValidationError: Empty sets.
    """
    if predictions.keys() != labels.keys():
        missing = sorted(labels.keys() - predictions.keys())[:5]
        extra = sorted(predictions.keys() - labels.keys())[:5]
        raise IntegrityError(f"predictions and labels are misaligned (missing {missing}, extra {extra})")
    if not labels:
        raise InputValidationError("no labels to compare against")
    correct = sum(1 for qid, label in labels.items() if _matches(predictions[qid], label, variant, tolerance))
    return HeldInResult(
        variant=variant,
        n=len(labels),
        correct=correct,
        unparsable=sum(1 for p in predictions.values() if p is None),
        accuracy=100.0 * correct / len(labels),
        tolerance=tolerance if variant == "soft" else None,
    )


def label_targets(labels: Sequence[BoundaryLabel], variant: HeldInVariant) -> dict[str, bool | float]:
    """Training targets per query: search-needed flag or flipped soft score.

    Raises:
        InputValidationError: Soft targets requested for labels without a soft score.
    """
    targets: dict[str, bool | float] = {}
    for label in labels:
        if variant == "hard":
            targets[label.query_id] = label.hard
        elif label.soft is None:
            raise InputValidationError(f"label {label.query_id} has no soft score")
        else:
            targets[label.query_id] = label.soft
    return targets


def predict_held_in(
    queries: Mapping[str, QueryRecord],
    ids: Sequence[str],
    gatekeeper: Gatekeeper,
    variant: HeldInVariant,
    parallelism: int = DEFAULT_PARALLELISM,
) -> dict[str, Prediction]:
    """Boundary-model predictions for ``ids``; unparsable output becomes None.

    Raises:
        IntegrityError: An id is not among ``queries``.
    """
    unknown = sorted(set(ids) - queries.keys())
    if unknown:
        raise IntegrityError(f"labels for unknown queries: {', '.join(unknown[:5])}")
    predict = gatekeeper.predict_hard if variant == "hard" else gatekeeper.predict_soft
    preds: dict[str, Prediction] = {}

    def work(qid: str) -> Prediction:
        try:
            return predict(queries[qid])
        except ParseFailure as exc:
            logger.warning("Held-in %s: %s", variant, exc)
            return None

    def done(qid: str, pred: Prediction) -> None:
        preds[qid] = pred

    def error(qid: str, exc: Exception) -> None:
        preds[qid] = None

    failures = run_units(sorted(ids), work, done, error, parallelism, f"Held-in ({variant})")
    if failures:
        logger.warning("Held-in %s: %d boundary calls failed; counted as wrong", variant, failures)
    return preds
