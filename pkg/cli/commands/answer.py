"""Answer command: run the benchmark modes over one dataset."""

from __future__ import annotations

import argparse
import logging

from answering.benchmark import run_benchmark, timing_csv
from answering.orchestrator import AnswerOrchestrator

from .runtime import Runtime, exit_code, open_runtime

logger = logging.getLogger(__name__)


def orchestrator_for(rt: Runtime, boundary_profile: str | None, answer_profile: str | None) -> AnswerOrchestrator:
    """Boundary and answering profiles are chosen independently (surrogate boundary)."""
    cfg = rt.cfg
    return AnswerOrchestrator(
        rt.gateway,
        cfg.templates,
        cfg.profile(answer_profile or "answerer"),
        rt.gatekeeper(boundary_profile),
        rt.retriever(),
        context_budget=cfg.context_char_budget,
        prompt_budget=cfg.prompt_char_budget,
    )


def cmd_answer(args: argparse.Namespace) -> int:
    """Write answers/<dataset>/<mode>.jsonl and timing.csv."""
    with open_runtime(args) as rt:
        run = run_benchmark(
            rt.queries(),
            rt.dataset_name(),
            args.modes,
            orchestrator_for(rt, args.boundary_profile, args.answer_profile),
            rt.store,
            rt.config_hash,
            epsilon=args.epsilon,
            parallelism=args.parallelism,
            resume=args.resume,
        )
        print(timing_csv(run.timing), end="")
        return exit_code(run.failures)
