"""Evaluation commands: eval, sweep, consistency, held-in."""

from __future__ import annotations

import argparse
import json
import logging
from collections import defaultdict

from answering.benchmark import answers_path, load_answers, run_benchmark
from answering.types import AnswerRecord
from boundary.types import BoundaryLabel
from errors import ConfigurationError, InputValidationError
from evaluation.consistency import consistency_csv, judge_consistency
from evaluation.held_in import held_in_accuracy, label_targets, predict_held_in
from evaluation.report import emit_report, format_report_table, write_report
from evaluation.scoring import score_answers, scores_path
from evaluation.sweep import epsilon_sweep, format_sweep_table, parse_grid, sweep_csv
from gate.stage import run_gate
from gate.types import GATE_VARIANTS
from runstore.jsonl import read_jsonl, write_text_atomic
from runstore.manifest import utc_now
from sources.queries import index_queries

from .answer import orchestrator_for
from .runtime import EXIT_OK, Runtime, exit_code, open_runtime

logger = logging.getLogger(__name__)


def _datasets(rt: Runtime, requested: list[str] | None) -> list[str]:
    if requested:
        return requested
    root = rt.store.root / "answers"
    found = sorted(p.name for p in root.iterdir() if p.is_dir()) if root.exists() else []
    if not found:
        raise InputValidationError(f"no answer files under {root}; run `answer` first")
    return found


def _load_mode_answers(rt: Runtime, dataset: str) -> dict[str, list[AnswerRecord]]:
    return {
        mode: load_answers(rt.store, dataset, mode)
        for mode in GATE_VARIANTS
        if answers_path(rt.store, dataset, mode).exists()
    }


def _answer_failures(rt: Runtime, dataset: str, answered: dict[str, list[AnswerRecord]]) -> dict[tuple[str, str], int]:
    """Rows whose answer failed and that no later run answered."""
    done = {mode: {r.query_id for r in records} for mode, records in answered.items()}
    failed: dict[tuple[str, str], set[str]] = defaultdict(set)
    for entry in rt.store.errors.entries():
        mode = entry.get("mode")
        if entry.get("dataset") != dataset or mode not in done:
            continue
        if not str(entry.get("stage", "")).startswith("answer-"):
            continue
        if entry["query_id"] not in done[mode]:
            failed[(dataset, mode)].add(entry["query_id"])
    return {key: len(ids) for key, ids in failed.items()}


def _count_scoring_failures(keys: list[str], failures: dict[tuple[str, str], int]) -> None:
    for key in keys:
        dataset, mode, _ = json.loads(key)
        failures[(dataset, mode)] = failures.get((dataset, mode), 0) + 1


def cmd_eval(args: argparse.Namespace) -> int:
    """Score answer files with the judge and write eval/report.{csv,txt}."""
    with open_runtime(args) as rt:
        cfg = rt.cfg
        queries = index_queries(rt.queries())
        judge = cfg.profile(args.judge_profile or "judge")
        answers: list[AnswerRecord] = []
        failures: dict[tuple[str, str], int] = {}
        for dataset in _datasets(rt, args.dataset):
            by_mode = _load_mode_answers(rt, dataset)
            for records in by_mode.values():
                answers.extend(records)
            failures.update(_answer_failures(rt, dataset, by_mode))

        scored = score_answers(
            answers, queries, judge, cfg.scale, rt.gateway, cfg.templates, rt.store, rt.config_hash,
            parallelism=args.parallelism, resume=args.resume, retries=cfg.judge_parse_retries,
            out=scores_path(rt.store),
        )
        _count_scoring_failures(scored.failed, failures)

        report = emit_report(scored.scores, failures, manifest_refs=[rt.store.run_id])
        write_report(report, rt.store.eval_dir / "report.csv", rt.store.eval_dir / "report.txt")
        print(format_report_table(report), end="")
        return exit_code(sum(failures.values()))


def cmd_sweep(args: argparse.Namespace) -> int:
    """Gate once with SKB, answer none/all once, then re-threshold across the grid."""
    with open_runtime(args) as rt:
        cfg = rt.cfg
        grid = parse_grid(args.grid)
        queries = rt.queries()
        dataset = rt.dataset_name()
        started = utc_now()

        orchestrator = orchestrator_for(rt, args.boundary_profile, None)
        gate = run_gate(
            queries, "skb", orchestrator.gatekeeper, rt.store, rt.config_hash,
            parallelism=args.parallelism, resume=args.resume,
        )
        bench = run_benchmark(
            queries, dataset, ["none", "all"], orchestrator, rt.store, rt.config_hash,
            parallelism=args.parallelism, resume=args.resume,
        )
        answers = bench.records["none"] + bench.records["all"]
        scored = score_answers(
            answers, index_queries(queries), cfg.profile("judge"), cfg.scale, rt.gateway, cfg.templates,
            rt.store, rt.config_hash, parallelism=args.parallelism, resume=args.resume,
            retries=cfg.judge_parse_retries, out=scores_path(rt.store),
        )
        by_mode = defaultdict(list)
        for s in scored.scores:
            by_mode[s.mode].append(s)
        rows = epsilon_sweep(gate.decisions, by_mode["none"], by_mode["all"], grid, cfg.scale)

        path = rt.store.eval_dir / "sweep.csv"
        write_text_atomic(path, sweep_csv(rows))
        failures = len(gate.failed) + bench.failures + len(scored.failed)
        rt.store.record_stage(
            "sweep",
            "partial" if failures else "complete",
            rt.config_hash,
            {"dataset": dataset, "grid": grid},
            started,
            outputs=[path],
        )
        print(format_sweep_table(rows), end="")
        return exit_code(failures)


def cmd_consistency(args: argparse.Namespace) -> int:
    """Score one dataset's answers with two judges and report per-mode means and the max gap."""
    with open_runtime(args) as rt:
        cfg = rt.cfg
        name_b = args.judge_b or cfg.roles.consistency_judge
        if not name_b:
            raise ConfigurationError("no second judge: pass --judge-b or set roles.consistency_judge")
        judge_a = cfg.profile(args.judge_a or "judge")
        judge_b = cfg.profile(name_b)
        queries = index_queries(rt.queries())
        dataset = rt.dataset_name()
        answers = [r for records in _load_mode_answers(rt, dataset).values() for r in records]
        if not answers:
            raise InputValidationError(f"no answers for dataset {dataset!r}; run `answer` first")

        runs = [
            score_answers(
                answers, queries, judge, cfg.scale, rt.gateway, cfg.templates, rt.store, rt.config_hash,
                parallelism=args.parallelism, resume=args.resume, retries=cfg.judge_parse_retries,
                stage="consistency",
            )
            for judge in (judge_a, judge_b)
        ]
        report = judge_consistency(runs[0].scores, runs[1].scores)
        write_text_atomic(rt.store.eval_dir / "consistency.csv", consistency_csv(report))
        print(consistency_csv(report), end="")
        print(f"max gap: {report.max_gap:.2f}")
        return exit_code(sum(len(r.failed) for r in runs))


def cmd_held_in(args: argparse.Namespace) -> int:
    """Accuracy of the boundary model against the labels it was trained on."""
    with open_runtime(args) as rt:
        labels_path = args.labels or rt.store.labels_path
        targets = label_targets(read_jsonl(labels_path, BoundaryLabel), args.variant)
        gatekeeper = rt.gatekeeper(args.boundary_profile)
        started = utc_now()
        preds = predict_held_in(
            index_queries(rt.queries()), sorted(targets), gatekeeper, args.variant, args.parallelism,
        )
        result = held_in_accuracy(preds, targets, args.variant, args.tolerance)
        path = rt.store.eval_dir / "held_in.json"
        write_text_atomic(path, result.model_dump_json(indent=2) + "\n")
        profile = gatekeeper.hard_profile if args.variant == "hard" else gatekeeper.soft_profile
        rt.store.record_stage(
            f"held-in-{args.variant}",
            "complete",
            rt.config_hash,
            {"variant": args.variant, "tolerance": args.tolerance, "profile": profile.name},
            started,
            inputs={"labels": labels_path},
            outputs=[path],
            profile_names=[profile.name],
        )
        print(f"{args.variant} held-in accuracy: {result.accuracy:.2f} ({result.correct}/{result.n})")
    return EXIT_OK
