"""SKB threshold sweep over cached gate scores and cached none/all answers.

Each query's boundary model runs once; every threshold just re-applies
the indicator and mixes the per-query no-RAG and all-RAG metrics.
"""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Iterable, Sequence

from pydantic import BaseModel

from boundary.types import ScoreScale
from config import SWEEP_GRID
from errors import InputValidationError, IntegrityError
from gate.gatekeeper import check_skb_epsilon
from gate.types import GateDecision

from .scoring import AnswerScore, summarize_scores

logger = logging.getLogger(__name__)


class SweepRow(BaseModel):
    epsilon: float
    search_ratio: float
    llm_score: float
    token_acc: float
    n: int


def parse_grid(spec: str | Sequence[float] = SWEEP_GRID) -> list[float]:
    """Thresholds from ``"start:stop:step"`` (stop inclusive), a comma list, or a tuple.

    Raises:
        InputValidationError: Malformed grid or a non-positive step.
    """
    if isinstance(spec, str):
        try:
            if ":" in spec:
                start, stop, step = (float(p) for p in spec.split(":"))
            else:
                return sorted({float(p) for p in spec.split(",") if p.strip()})
        except ValueError as exc:
            raise InputValidationError(f"bad epsilon grid {spec!r}: {exc}") from exc
    elif len(spec) == 3:
        start, stop, step = (float(p) for p in spec)
    else:
        raise InputValidationError(f"bad epsilon grid {spec!r}")
    if step <= 0 or stop < start:
        raise InputValidationError(f"bad epsilon grid {spec!r}: need step > 0 and stop >= start")
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def retrieves_at(decision: GateDecision, epsilon: float) -> bool:
    """Indicator re-applied at another threshold; parse fallbacks always retrieve."""
    if decision.fallback_used:
        return True
    if isinstance(decision.verdict, bool) or not isinstance(decision.verdict, (int, float)):
        raise IntegrityError(f"decision {decision.query_id} carries no soft score")
    return decision.verdict >= epsilon


def epsilon_sweep(
    decisions: Iterable[GateDecision],
    none_scores: Iterable[AnswerScore],
    all_scores: Iterable[AnswerScore],
    grid: Sequence[float],
    scale: ScoreScale,
) -> list[SweepRow]:
    """One row per threshold: search ratio and mixed no-RAG/all-RAG metrics.

    Only queries present in all three inputs count. At ``epsilon = s_w``
    every query retrieves and the row equals the all-RAG aggregate; above
    the top of the scale the row equals the no-RAG aggregate.

    Raises:
        InputValidationError: Empty grid or no overlapping queries.
        ScoreRangeError: A threshold outside the allowed range.
        IntegrityError: A decision without a soft score.
    """
    if not grid:
        raise InputValidationError("empty epsilon grid")
    gate = {d.query_id: d for d in decisions}
    plain = {s.query_id: s for s in none_scores}
    rag = {s.query_id: s for s in all_scores}
    ids = sorted(gate.keys() & plain.keys() & rag.keys())
    if not ids:
        raise InputValidationError("no query has a gate score and both no-RAG and all-RAG answers")
    skipped = len(gate.keys() | plain.keys() | rag.keys()) - len(ids)
    if skipped:
        logger.warning("Sweep ignores %d queries missing a gate score or an answer", skipped)

    rows = []
    for eps in grid:
        check_skb_epsilon(eps, scale)
        mixed = []
        for qid in ids:
            chosen = rag[qid] if retrieves_at(gate[qid], eps) else plain[qid]
            mixed.append(chosen.model_copy(update={"retrieved": chosen is rag[qid]}))
        summary = summarize_scores(mixed)
        rows.append(SweepRow(
            epsilon=eps,
            search_ratio=summary.search_ratio,
            llm_score=summary.llm_score,
            token_acc=summary.token_acc,
            n=summary.n,
        ))
    return rows


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epsilon", "ratio", "llm", "token_acc"])
    for r in rows:
        writer.writerow([f"{r.epsilon:g}", f"{r.search_ratio:.2f}", f"{r.llm_score:.4f}", f"{r.token_acc:.4f}"])
    return buf.getvalue()


def format_sweep_table(rows: Iterable[SweepRow]) -> str:
    header = f"{'epsilon':>8}  {'ratio %':>8}  {'LLM':>8}  {'Acc.':>8}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r.epsilon:>8g}  {r.search_ratio:>8.2f}  {r.llm_score:>8.2f}  {r.token_acc:>8.2f}")
    return "\n".join(lines) + "\n"
