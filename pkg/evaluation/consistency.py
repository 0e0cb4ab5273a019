"""Agreement between two judges scoring the same answers."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from collections.abc import Iterable

from pydantic import BaseModel

from errors import InputValidationError

from .scoring import AnswerScore


class ModeAgreement(BaseModel):
    dataset: str
    mode: str
    n: int
    mean_a: float
    mean_b: float
    gap: float


class ConsistencyReport(BaseModel):
    judge_a: str
    judge_b: str
    rows: list[ModeAgreement]
    max_gap: float


def judge_consistency(
    scores_a: Iterable[AnswerScore],
    scores_b: Iterable[AnswerScore],
) -> ConsistencyReport:
    """Per (dataset, mode) mean LLM scores under both judges and the largest absolute gap.

    Only rows both judges evaluated enter the means.

    Raises:
        InputValidationError: No row evaluated by both judges, or mixed judge names.
    """
    a = {(s.dataset, s.mode, s.query_id): s for s in scores_a}
    b = {(s.dataset, s.mode, s.query_id): s for s in scores_b}
    names_a = {s.judge for s in a.values()}
    names_b = {s.judge for s in b.values()}
    if len(names_a) > 1 or len(names_b) > 1:
        raise InputValidationError("each score set must come from a single judge")

    groups: dict[tuple[str, str], list[tuple[float, float]]] = defaultdict(list)
    for key in sorted(a.keys() & b.keys()):
        sa, sb = a[key].llm_score, b[key].llm_score
        if sa is None or sb is None:
            continue
        groups[key[:2]].append((sa, sb))
    if not groups:
        raise InputValidationError("no answer was scored by both judges")

    rows = []
    for (dataset, mode), pairs in sorted(groups.items()):
        mean_a = math.fsum(p[0] for p in pairs) / len(pairs)
        mean_b = math.fsum(p[1] for p in pairs) / len(pairs)
        rows.append(ModeAgreement(
            dataset=dataset, mode=mode, n=len(pairs), mean_a=mean_a, mean_b=mean_b, gap=abs(mean_a - mean_b),
        ))
    return ConsistencyReport(
        judge_a=next(iter(names_a)),
        judge_b=next(iter(names_b)),
        rows=rows,
        max_gap=max(r.gap for r in rows),
    )


def consistency_csv(report: ConsistencyReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "mode", "n", report.judge_a, report.judge_b, "gap"])
    for r in report.rows:
        writer.writerow([r.dataset, r.mode, r.n, f"{r.mean_a:.4f}", f"{r.mean_b:.4f}", f"{r.gap:.4f}"])
    return buf.getvalue()
