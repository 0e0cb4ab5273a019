"""Batch answering of a dataset under several modes, with timing summaries."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

from pydantic import BaseModel, Field

from boundary.types import QueryRecord
from config import DEFAULT_PARALLELISM
from errors import InputValidationError
from gate.gatekeeper import check_skb_epsilon
from runstore.checkpoint import unit_key
from runstore.fanout import run_units
from runstore.jsonl import read_jsonl, write_jsonl, write_text_atomic
from runstore.manifest import ids_digest, utc_now
from runstore.resume import plan_resume
from runstore.store import RunStore
from sources.queries import index_queries

from .orchestrator import AnswerOrchestrator
from .types import AnswerMode, AnswerRecord, ModeTiming

logger = logging.getLogger(__name__)


class BenchmarkRun(BaseModel):
    dataset: str
    records: dict[str, list[AnswerRecord]] = Field(default_factory=dict)
    failed: dict[str, list[str]] = Field(default_factory=dict)
    timing: list[ModeTiming] = Field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(len(ids) for ids in self.failed.values())


def answers_path(store: RunStore, dataset: str, mode: AnswerMode) -> Path:
    return store.answers_dir(dataset) / f"{mode}.jsonl"


def load_answers(store: RunStore, dataset: str, mode: AnswerMode) -> list[AnswerRecord]:
    return read_jsonl(answers_path(store, dataset, mode), AnswerRecord)


def summarize_timing(mode: AnswerMode, records: Sequence[AnswerRecord], failures: int = 0) -> ModeTiming:
    """Totals and means over successful rows; prebuild excludes answer generation."""
    n = len(records)
    total_prebuild = math.fsum(r.prebuild_ms for r in records)
    total_answer = math.fsum(r.answer_ms for r in records)
    return ModeTiming(
        mode=mode,
        n=n,
        retrieved=sum(1 for r in records if r.retrieved),
        total_prebuild_ms=total_prebuild,
        mean_prebuild_ms=total_prebuild / n if n else 0.0,
        total_answer_ms=total_answer,
        mean_answer_ms=total_answer / n if n else 0.0,
        failures=failures,
    )


def timing_csv(rows: Iterable[ModeTiming]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([
        "mode", "n", "retrieved", "total_prebuild_ms", "mean_prebuild_ms",
        "total_answer_ms", "mean_answer_ms", "failures",
    ])
    for r in rows:
        writer.writerow([
            r.mode, r.n, r.retrieved, f"{r.total_prebuild_ms:.3f}", f"{r.mean_prebuild_ms:.3f}",
            f"{r.total_answer_ms:.3f}", f"{r.mean_answer_ms:.3f}", r.failures,
        ])
    return buf.getvalue()


def read_timing_csv(path: Path) -> list[ModeTiming]:
    if not path.exists():
        return []
    with path.open(encoding="utf-8", newline="") as f:
        return [ModeTiming.model_validate(row) for row in csv.DictReader(f)]


def merge_timing(existing: Iterable[ModeTiming], fresh: Iterable[ModeTiming]) -> list[ModeTiming]:
    """Rows of an earlier run, with re-run modes replaced in place and new modes appended."""
    merged = {row.mode: row for row in existing}
    merged.update((row.mode, row) for row in fresh)
    return list(merged.values())


def _answer_mode(
    queries: list[QueryRecord],
    dataset: str,
    mode: AnswerMode,
    orchestrator: AnswerOrchestrator,
    store: RunStore,
    config_hash: str,
    epsilon: float | None,
    parallelism: int,
    resume: bool,
) -> tuple[list[AnswerRecord], list[str]]:
    stage = f"answer-{dataset}-{mode}"
    params = {
        "dataset": dataset,
        "mode": mode,
        "epsilon": epsilon,
        "answerer": orchestrator.answer_profile.name,
        "boundary": _boundary_name(orchestrator, mode),
        "queries": ids_digest(q.id for q in queries),
    }
    index = index_queries(queries)
    ckpt = store.checkpoint(stage)
    plan = plan_resume(ckpt, store.header(stage, config_hash, params), [unit_key(q.id) for q in queries], resume)
    records = {key: AnswerRecord.model_validate(payload) for key, payload in plan.done.items()}
    failed: list[str] = []

    def work(key: str) -> AnswerRecord:
        (qid,) = json.loads(key)
        return orchestrator.answer(index[qid], mode, epsilon, dataset)

    def done(key: str, record: AnswerRecord) -> None:
        records[key] = record
        ckpt.record(key, record.model_dump(mode="json"))

    def error(key: str, exc: Exception) -> None:
        (qid,) = json.loads(key)
        failed.append(qid)
        store.log_error(stage, qid, exc, mode=mode, dataset=dataset)

    started = utc_now()
    failures = run_units(plan.scheduled, work, done, error, parallelism, f"Answering ({mode})")
    ordered = sorted(records.values(), key=lambda r: r.query_id)
    path = answers_path(store, dataset, mode)
    write_jsonl(path, ordered)
    store.record_stage(
        stage,
        "partial" if failures else "complete",
        config_hash,
        params,
        started,
        outputs=[path],
        template_hashes=orchestrator.templates.digests(orchestrator.answer_profile.dialect),
        profile_names=[p for p in (orchestrator.answer_profile.name, params["boundary"]) if p],
    )
    return ordered, sorted(failed)


def _boundary_name(orchestrator: AnswerOrchestrator, mode: AnswerMode) -> str | None:
    gk = orchestrator.gatekeeper
    profile = {"hkb": gk.hard_profile, "skb": gk.soft_profile, "prompt": gk.sampled_profile}.get(mode)
    return profile.name if profile is not None else None


def run_benchmark(
    queries: list[QueryRecord],
    dataset: str,
    modes: Sequence[AnswerMode],
    orchestrator: AnswerOrchestrator,
    store: RunStore,
    config_hash: str,
    epsilon: float | None = None,
    parallelism: int = DEFAULT_PARALLELISM,
    resume: bool = False,
) -> BenchmarkRun:
    """Answer every query under every mode.

    Writes ``answers/<dataset>/<mode>.jsonl`` (sorted by query id) and
    ``answers/<dataset>/timing.csv`` (rows of modes not run this time are
    kept). Failed rows are left out of the
    answer files and logged to ``errors.jsonl``. Each mode is its own
    checkpointed stage.

    Raises:
        InputValidationError: No queries or no modes.
        ScoreRangeError: skb epsilon outside the allowed range.
    """
    if not queries:
        raise InputValidationError(f"dataset {dataset!r} has no queries")
    if not modes:
        raise InputValidationError("no answer modes requested")
    gk = orchestrator.gatekeeper
    skb_epsilon = check_skb_epsilon(gk.default_epsilon if epsilon is None else epsilon, gk.scale)

    run = BenchmarkRun(dataset=dataset)
    for mode in dict.fromkeys(modes):
        records, failed = _answer_mode(
            queries, dataset, mode, orchestrator, store, config_hash,
            skb_epsilon if mode == "skb" else None, parallelism, resume,
        )
        run.records[mode] = records
        run.failed[mode] = failed
        run.timing.append(summarize_timing(mode, records, len(failed)))
        logger.info(
            "Answered %s/%s: %d rows, %d retrieved, %d failed",
            dataset, mode, len(records), run.timing[-1].retrieved, len(failed),
        )

    timing_path = store.answers_dir(dataset) / "timing.csv"
    write_text_atomic(timing_path, timing_csv(merge_timing(read_timing_csv(timing_path), run.timing)))
    return run
