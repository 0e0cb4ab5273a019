"""Per-row scoring of answer files: judge score and token accuracy."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path

from pydantic import BaseModel, Field

from answering.types import AnswerRecord
from boundary.prompts import TemplateLibrary
from boundary.types import QueryRecord, ScoreScale
from config import DEFAULT_PARALLELISM, JUDGE_PARSE_RETRIES
from errors import IntegrityError
from gateway.client import ModelGateway
from pipeline_config import EndpointProfile
from runstore.checkpoint import unit_key
from runstore.fanout import run_units
from runstore.jsonl import read_jsonl, write_jsonl
from runstore.manifest import ids_digest, utc_now
from runstore.resume import plan_resume
from runstore.store import RunStore

from .metrics import llm_metric, token_accuracy

logger = logging.getLogger(__name__)


class AnswerScore(BaseModel):
    """Metrics for one answer row. ``llm_score`` is None when the judge never produced a score."""

    query_id: str
    dataset: str = ""
    mode: str
    judge: str
    retrieved: bool
    llm_score: float | None = Field(default=None, ge=0.0, le=100.0)
    token_acc: float = Field(ge=0.0, le=100.0)

    @property
    def evaluated(self) -> bool:
        return self.llm_score is not None


class ScoringRun(BaseModel):
    scores: list[AnswerScore] = Field(default_factory=list)
    failed: list[str] = Field(default_factory=list)


class MetricSummary(BaseModel):
    """Aggregate of a set of scored rows; means are over evaluated rows only."""

    n: int
    evaluated: int
    llm_score: float
    token_acc: float
    search_ratio: float


def summarize_scores(scores: Sequence[AnswerScore]) -> MetricSummary:
    judged = [s.llm_score for s in scores if s.llm_score is not None]
    n = len(scores)
    return MetricSummary(
        n=n,
        evaluated=len(judged),
        llm_score=math.fsum(judged) / len(judged) if judged else 0.0,
        token_acc=math.fsum(s.token_acc for s in scores) / n if n else 0.0,
        search_ratio=100.0 * sum(1 for s in scores if s.retrieved) / n if n else 0.0,
    )


def scores_path(store: RunStore) -> Path:
    return store.eval_dir / "scores.jsonl"


def load_scores(store: RunStore) -> list[AnswerScore]:
    return read_jsonl(scores_path(store), AnswerScore)


def score_answers(
    answers: Sequence[AnswerRecord],
    queries: dict[str, QueryRecord],
    judge: EndpointProfile,
    scale: ScoreScale,
    gateway: ModelGateway,
    templates: TemplateLibrary,
    store: RunStore,
    config_hash: str,
    parallelism: int = DEFAULT_PARALLELISM,
    resume: bool = False,
    retries: int = JUDGE_PARSE_RETRIES,
    stage: str = "score",
    out: Path | None = None,
) -> ScoringRun:
    """Judge and token-score every answer row, checkpointed per (dataset, mode, query).

    With ``out`` the scores are merged into that JSONL file: rows for the
    same (dataset, mode, judge) are replaced, other rows are kept.

    Raises:
        IntegrityError: An answer refers to an unknown query.
    """
    unknown = sorted({a.query_id for a in answers} - queries.keys())
    if unknown:
        raise IntegrityError(f"answers for unknown queries: {', '.join(unknown[:5])}")
    by_key = {unit_key(a.dataset, a.mode, a.query_id): a for a in answers}
    params = {
        "judge": judge.name,
        "retries": retries,
        "answers": ids_digest(f"{k}:{a.answer_text}" for k, a in by_key.items()),
    }
    stage = f"{stage}-{judge.name}"
    ckpt = store.checkpoint(stage)
    plan = plan_resume(ckpt, store.header(stage, config_hash, params), sorted(by_key), resume)
    scores = {key: AnswerScore.model_validate(payload) for key, payload in plan.done.items()}
    failed: list[str] = []

    def work(key: str) -> AnswerScore:
        a = by_key[key]
        query = queries[a.query_id]
        return AnswerScore(
            query_id=a.query_id,
            dataset=a.dataset,
            mode=a.mode,
            judge=judge.name,
            retrieved=a.retrieved,
            llm_score=llm_metric(a.answer_text, query, judge, scale, gateway, templates, retries),
            token_acc=token_accuracy(a.answer_text, query.gold_answer),
        )

    def done(key: str, score: AnswerScore) -> None:
        scores[key] = score
        ckpt.record(key, score.model_dump(mode="json"))

    def error(key: str, exc: Exception) -> None:
        dataset, mode, qid = json.loads(key)
        failed.append(key)
        store.log_error(stage, qid, exc, dataset=dataset, mode=mode, judge=judge.name)

    started = utc_now()
    failures = run_units(plan.scheduled, work, done, error, parallelism, f"Scoring ({judge.name})")
    ordered = [scores[k] for k in sorted(scores)]
    unevaluated = sum(1 for s in ordered if not s.evaluated)
    if unevaluated:
        logger.warning("%d answers left unevaluated: judge reply never parsed", unevaluated)

    outputs: list[Path] = []
    if out is not None:
        replaced = {(s.dataset, s.mode, s.judge) for s in ordered}
        existing = read_jsonl(out, AnswerScore) if out.exists() else []
        kept = [s for s in existing if (s.dataset, s.mode, s.judge) not in replaced]
        merged = sorted([*kept, *ordered], key=lambda s: (s.dataset, s.mode, s.judge, s.query_id))
        write_jsonl(out, merged)
        outputs.append(out)
    store.record_stage(
        stage,
        "partial" if failures else "complete",
        config_hash,
        params,
        started,
        outputs=outputs,
        template_hashes=templates.digests(judge.dialect),
        profile_names=[judge.name],
    )
    return ScoringRun(scores=ordered, failed=sorted(failed))
