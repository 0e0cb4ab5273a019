"""Batch gating of a query set into ``gate/<variant>.jsonl``."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from pydantic import BaseModel, Field

from boundary.types import QueryRecord
from config import DEFAULT_PARALLELISM
from runstore.checkpoint import unit_key
from runstore.fanout import run_units
from runstore.jsonl import write_jsonl
from runstore.manifest import ids_digest, utc_now
from runstore.resume import plan_resume
from runstore.store import RunStore

from .gatekeeper import Gatekeeper, check_skb_epsilon
from .types import GateDecision, GateVariant

logger = logging.getLogger(__name__)


class GateRun(BaseModel):
    decisions: list[GateDecision] = Field(default_factory=list)
    failed: list[str] = Field(default_factory=list)
    path: Path | None = None


def run_gate(
    queries: list[QueryRecord],
    variant: GateVariant,
    gatekeeper: Gatekeeper,
    store: RunStore,
    config_hash: str,
    epsilon: float | None = None,
    parallelism: int = DEFAULT_PARALLELISM,
    resume: bool = False,
) -> GateRun:
    """Decide every query and write the decisions sorted by query id.

    Queries whose boundary call fails are listed in ``failed`` and in
    ``errors.jsonl``; the rest of the run continues.
    """
    if variant == "skb":
        epsilon = check_skb_epsilon(gatekeeper.default_epsilon if epsilon is None else epsilon, gatekeeper.scale)
    else:
        epsilon = None
    stage = f"gate-{variant}"
    params = {"variant": variant, "epsilon": epsilon, "queries": ids_digest(q.id for q in queries)}
    index = {q.id: q for q in queries}
    ckpt = store.checkpoint(stage)
    plan = plan_resume(ckpt, store.header(stage, config_hash, params), [unit_key(q.id) for q in queries], resume)

    decisions = {key: GateDecision.model_validate(payload) for key, payload in plan.done.items()}
    failed: list[str] = []

    def work(key: str) -> GateDecision:
        (qid,) = json.loads(key)
        return gatekeeper.decide(index[qid], variant, epsilon)

    def done(key: str, decision: GateDecision) -> None:
        decisions[key] = decision
        ckpt.record(key, decision.model_dump(mode="json"))

    def error(key: str, exc: Exception) -> None:
        (qid,) = json.loads(key)
        failed.append(qid)
        store.log_error(stage, qid, exc)

    started = utc_now()
    failures = run_units(plan.scheduled, work, done, error, parallelism, f"Gating ({variant})")
    ordered = sorted(decisions.values(), key=lambda d: d.query_id)
    path = store.gate_dir / f"{variant}.jsonl"
    write_jsonl(path, ordered)
    store.record_stage(
        stage,
        "partial" if failures else "complete",
        config_hash,
        params,
        started,
        outputs=[path],
        template_hashes=gatekeeper.templates.digests(),
    )
    retrieve = sum(1 for d in ordered if d.retrieve)
    logger.info("Gate %s: %d/%d retrieve, %d failed", variant, retrieve, len(ordered), failures)
    return GateRun(decisions=ordered, failed=sorted(failed), path=path)
