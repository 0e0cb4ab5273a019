"""Dataset building: sample every query R times, judge every sample, aggregate.

Both phases are checkpointed per (query, sample index), so an interrupted
build resumes where it stopped. Outputs are sorted by query id and are
byte-identical whatever the parallelism.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import defaultdict
from pathlib import Path

from pydantic import BaseModel, Field

from boundary.types import QueryRecord
from config import DEFAULT_PARALLELISM
from errors import InputValidationError
from gateway.client import ModelGateway
from pipeline_config import PipelineConfig
from runstore.checkpoint import unit_key
from runstore.fanout import run_units
from runstore.jsonl import read_jsonl, write_jsonl
from runstore.manifest import utc_now
from runstore.resume import plan_resume
from runstore.store import RunStore
from sources.queries import index_queries

from .judge import judge_sample, judged_query
from .sampler import draw_sample, sampling_message
from .stats import SourceStats, dataset_stats, write_stats
from .types import DroppedQuery, JudgedQuery, JudgeScore, Sample, SampleSet

logger = logging.getLogger(__name__)

STAGE = "build-dataset"


class DatasetBuild(BaseModel):
    sample_sets: list[SampleSet] = Field(default_factory=list)
    judged: list[JudgedQuery] = Field(default_factory=list)
    dropped: list[DroppedQuery] = Field(default_factory=list)
    stats: list[SourceStats] = Field(default_factory=list)
    failures: int = 0
    skipped: bool = False


def queries_digest(queries: list[QueryRecord]) -> str:
    h = hashlib.sha256()
    for q in sorted(queries, key=lambda q: q.id):
        h.update(q.model_dump_json().encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def _split(key: str) -> tuple[str, int]:
    qid, index = json.loads(key)
    return qid, int(index)


def dataset_paths(store: RunStore) -> dict[str, Path]:
    d = store.dataset_dir
    return {
        "samples": d / "samples.jsonl",
        "judged": d / "judged.jsonl",
        "dropped": d / "dropped.jsonl",
        "stats_csv": d / "stats.csv",
        "stats_txt": d / "stats.txt",
    }


def load_dataset(store: RunStore) -> DatasetBuild:
    paths = dataset_paths(store)
    judged = read_jsonl(paths["judged"], JudgedQuery)
    return DatasetBuild(
        sample_sets=read_jsonl(paths["samples"], SampleSet),
        judged=judged,
        dropped=read_jsonl(paths["dropped"], DroppedQuery),
        stats=dataset_stats(judged) if judged else [],
        skipped=True,
    )


def build_dataset(
    queries: list[QueryRecord],
    cfg: PipelineConfig,
    gateway: ModelGateway,
    store: RunStore,
    R: int | None = None,
    parallelism: int = DEFAULT_PARALLELISM,
    resume: bool = False,
    inputs: dict[str, Path] | None = None,
) -> DatasetBuild:
    """Sample, judge and aggregate a query corpus into ``<run-dir>/dataset``.

    Queries whose samples could not all be drawn, or whose judge replies
    never parsed, are written to ``dropped.jsonl`` with the reason.

    Raises:
        InputValidationError: R < 1.
        ResumeError: ``resume`` with checkpoints from another configuration.
    """
    R = R or cfg.sample_count
    if R < 1:
        raise InputValidationError(f"R must be at least 1, got {R}")
    sampler = cfg.profile("sampler")
    judge = cfg.profile("judge")
    templates = cfg.templates
    config_hash = cfg.config_hash()
    index = index_queries(queries)
    qdigest = queries_digest(queries)
    params = {
        "R": R,
        "queries": qdigest,
        "sampler": sampler.name,
        "judge": judge.name,
        "judge_parse_retries": cfg.judge_parse_retries,
        "min_valid_scores": cfg.min_valid_scores,
    }

    done_entry = store.completed(STAGE, config_hash, params, inputs or {})
    if done_entry is not None:
        logger.info("Dataset already built with this configuration (run %s); nothing to do", done_entry.run_id)
        return load_dataset(store)

    started = utc_now()
    ordered = sorted(queries, key=lambda q: q.id)

    # ---------------------------------------------------------------- sampling
    ckpt = store.checkpoint("sample")
    units = [unit_key(q.id, i) for q in ordered for i in range(R)]
    plan = plan_resume(ckpt, store.header("sample", config_hash, params), units, resume)

    samples: dict[str, dict[int, Sample]] = defaultdict(dict)
    sample_errors: dict[str, list[str]] = defaultdict(list)
    for key, payload in plan.done.items():
        qid, i = _split(key)
        samples[qid][i] = Sample.model_validate(payload)

    def draw(key: str) -> Sample:
        qid, i = _split(key)
        message = sampling_message(index[qid], sampler, templates)
        return draw_sample(gateway, sampler, message, i)

    def drawn(key: str, sample: Sample) -> None:
        qid, _ = _split(key)
        samples[qid][sample.index] = sample
        ckpt.record(key, sample.model_dump(mode="json"))

    def draw_failed(key: str, exc: Exception) -> None:
        qid, i = _split(key)
        sample_errors[qid].append(f"sample {i}: {type(exc).__name__}: {exc}")
        store.log_error("sample", qid, exc, index=i)

    failures = run_units(plan.scheduled, draw, drawn, draw_failed, parallelism, "Sampling")

    sample_sets = [
        SampleSet(
            query_id=q.id,
            source=q.source,
            requested_R=R,
            samples=[samples[q.id][i] for i in sorted(samples[q.id])],
            error="; ".join(sorted(sample_errors[q.id])) or None,
        )
        for q in ordered
    ]
    dropped = [
        DroppedQuery(query_id=s.query_id, source=s.source, stage="sample", reason=s.error or "incomplete samples")
        for s in sample_sets
        if not s.complete
    ]
    complete = [s for s in sample_sets if s.complete]

    # ---------------------------------------------------------------- judging
    jckpt = store.checkpoint("judge")
    texts = {(s.query_id, x.index): x.text for s in complete for x in s.samples}
    units = [unit_key(s.query_id, x.index) for s in complete for x in s.samples]
    jplan = plan_resume(jckpt, store.header("judge", config_hash, params), units, resume)

    scores: dict[str, list[JudgeScore]] = defaultdict(list)
    judge_errors: dict[str, list[str]] = defaultdict(list)
    for key, payload in jplan.done.items():
        qid, _ = _split(key)
        scores[qid].append(JudgeScore.model_validate(payload))

    def score(key: str) -> JudgeScore:
        qid, i = _split(key)
        return judge_sample(
            index[qid], texts[(qid, i)], judge, cfg.scale, gateway, templates,
            index=i, retries=cfg.judge_parse_retries,
        )

    def scored(key: str, result: JudgeScore) -> None:
        qid, _ = _split(key)
        scores[qid].append(result)
        jckpt.record(key, result.model_dump(mode="json"))

    def score_failed(key: str, exc: Exception) -> None:
        qid, i = _split(key)
        judge_errors[qid].append(f"judge {i}: {type(exc).__name__}: {exc}")
        store.log_error("judge", qid, exc, index=i)

    failures += run_units(jplan.scheduled, score, scored, score_failed, parallelism, "Judging")

    # ---------------------------------------------------------------- aggregate
    judged: list[JudgedQuery] = []
    for s in complete:
        query = index[s.query_id]
        if judge_errors[s.query_id]:
            reason = "; ".join(sorted(judge_errors[s.query_id]))
            dropped.append(DroppedQuery(query_id=query.id, source=query.source, stage="judge", reason=reason))
            continue
        try:
            judged.append(judged_query(query, scores[query.id], cfg.min_valid_scores))
        except InputValidationError as exc:
            logger.warning("Dropping query %s: %s", query.id, exc)
            dropped.append(DroppedQuery(query_id=query.id, source=query.source, stage="aggregate", reason=str(exc)))

    dropped.sort(key=lambda d: d.query_id)
    stats = dataset_stats(judged) if judged else []

    paths = dataset_paths(store)
    write_jsonl(paths["samples"], sample_sets)
    write_jsonl(paths["judged"], judged)
    write_jsonl(paths["dropped"], dropped)
    write_stats(stats, paths["stats_csv"], paths["stats_txt"])

    store.record_stage(
        STAGE,
        "partial" if failures else "complete",
        config_hash,
        params,
        started,
        inputs=inputs,
        outputs=list(paths.values()),
        template_hashes=templates.digests(judge.dialect),
        profile_names=[sampler.name, judge.name],
    )
    logger.info(
        "Built dataset: %d judged, %d dropped, %d failed units",
        len(judged), len(dropped), failures,
    )
    return DatasetBuild(sample_sets=sample_sets, judged=judged, dropped=dropped, stats=stats, failures=failures)
