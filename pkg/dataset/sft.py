"""SFT export: one training record per label, plus a provenance manifest."""

from __future__ import annotations

import json
import logging
import random
from collections import Counter
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field

from boundary.prompts import TemplateLibrary, render_prompt
from boundary.scale import DEFAULT_SCALE
from boundary.types import BoundaryLabel, ImageRef, QueryRecord, ScoreScale
from config import DEFAULT_DIALECT, TOOL_VERSION, TRAINER_HYPERPARAMETERS, TemplateVariant
from errors import InputValidationError, IntegrityError
from runstore.jsonl import write_jsonl, write_text_atomic

logger = logging.getLogger(__name__)

SftVariant = Literal["hard", "soft"]


class SftRecord(BaseModel):
    variant: SftVariant
    prompt: str
    images: list[ImageRef] = Field(default_factory=list)
    target: str
    meta: dict[str, Any] = Field(default_factory=dict)


class SftExport(BaseModel):
    path: Path
    manifest_path: Path
    count: int
    class_counts: dict[str, int] = Field(default_factory=dict)


def hard_target(hard: bool) -> str:
    """``"true"`` for queries outside the boundary (search needed)."""
    return "true" if hard else "false"


def soft_target(soft: float) -> str:
    """Soft score with exactly one decimal, half-up (4.18 -> "4.2", 5 -> "5.0")."""
    return str(Decimal(repr(float(soft))).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def balance_labels(labels: list[BoundaryLabel], seed: int = 0) -> list[BoundaryLabel]:
    """Downsample the majority hard class to the minority size, reproducibly."""
    positives = [label for label in labels if label.hard]
    negatives = [label for label in labels if not label.hard]
    keep = min(len(positives), len(negatives))
    rng = random.Random(seed)
    if len(positives) > keep:
        positives = rng.sample(positives, keep)
    if len(negatives) > keep:
        negatives = rng.sample(negatives, keep)
    return sorted(positives + negatives, key=lambda label: label.query_id)


def export_sft(
    labels: list[BoundaryLabel],
    queries: dict[str, QueryRecord],
    variant: SftVariant,
    out: Path,
    templates: TemplateLibrary,
    scale: ScoreScale = DEFAULT_SCALE,
    dialect: str = DEFAULT_DIALECT,
    balance: bool = False,
    seed: int = 0,
) -> SftExport:
    """Write ``out`` (JSONL) and ``<out stem>.manifest.json``.

    Records are sorted by query id, so identical inputs give identical bytes.

    Raises:
        IntegrityError: A label refers to a query that is not in ``queries``.
        InputValidationError: Soft export of labels without a soft score,
            or balancing requested for the soft variant.
    """
    out = Path(out)
    template = templates.get(TemplateVariant(variant), dialect)
    missing = sorted({label.query_id for label in labels} - set(queries))
    if missing:
        raise IntegrityError(f"{len(missing)} labels have no query record, e.g. {missing[:3]}")
    if balance and variant != "hard":
        raise InputValidationError("class balancing applies to the hard variant only")

    selected = sorted(labels, key=lambda label: label.query_id)
    if balance:
        selected = balance_labels(selected, seed)

    records = []
    for label in selected:
        query = queries[label.query_id]
        if variant == "hard":
            target = hard_target(label.hard)
        else:
            if label.soft is None:
                raise InputValidationError(f"label {label.query_id} has no soft score to export")
            target = soft_target(label.soft)
        prompt = render_prompt(template, query).as_text(template.dialect.image_token)
        records.append(SftRecord(
            variant=variant,
            prompt=prompt,
            images=list(query.images),
            target=target,
            meta={
                "query_id": query.id,
                "source": query.source or label.source,
                "epsilon": label.epsilon_used,
                "origin": label.origin,
                "scale": [scale.s_w, scale.s_c],
            },
        ))

    count = write_jsonl(out, records)
    class_counts = dict(sorted(Counter(r.target for r in records).items())) if variant == "hard" else {}
    epsilons = sorted({label.epsilon_used for label in selected if label.epsilon_used is not None})
    manifest = {
        "variant": variant,
        "count": count,
        "epsilon": epsilons[0] if len(epsilons) == 1 else epsilons,
        "scale": {"s_w": scale.s_w, "s_c": scale.s_c},
        "template_digest": template.digest,
        "dialect": template.dialect.name,
        "balanced": balance,
        "seed": seed if balance else None,
        "class_counts": class_counts,
        "sources": dict(sorted(Counter(r.meta["source"] for r in records).items())),
        "trainer_hyperparameters": TRAINER_HYPERPARAMETERS,
        "tool_version": TOOL_VERSION,
    }
    manifest_path = out.with_name(f"{out.stem}.manifest.json")
    write_text_atomic(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info("Exported %d %s SFT records to %s", count, variant, out)
    return SftExport(path=out, manifest_path=manifest_path, count=count, class_counts=class_counts)
