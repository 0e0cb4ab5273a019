"""Dataset commands: build-dataset, stats, label, export-sft."""

from __future__ import annotations

import argparse
import logging

from boundary.types import BoundaryLabel
from dataset.human import import_human_labels, labels_from_queries
from dataset.labels import build_labels
from dataset.sft import export_sft
from errors import InputValidationError
from runstore.jsonl import read_jsonl, write_jsonl
from runstore.manifest import utc_now
from sampling.pipeline import build_dataset, dataset_paths
from sampling.stats import dataset_stats, format_stats_table
from sampling.types import JudgedQuery
from sources.queries import index_queries

from .runtime import EXIT_OK, EXIT_USAGE, exit_code, open_runtime

logger = logging.getLogger(__name__)


def cmd_build_dataset(args: argparse.Namespace) -> int:
    """Sample, judge and summarise a query file into <run-dir>/dataset."""
    with open_runtime(args) as rt:
        build = build_dataset(
            rt.queries(),
            rt.cfg,
            rt.gateway,
            rt.store,
            R=args.R,
            parallelism=args.parallelism,
            resume=args.resume,
            inputs={"queries": args.queries},
        )
        if build.stats:
            print(format_stats_table(build.stats), end="")
        logger.info(
            "%d judged, %d dropped; outputs in %s",
            len(build.judged), len(build.dropped), rt.store.dataset_dir,
        )
        return exit_code(build.failures)


def cmd_stats(args: argparse.Namespace) -> int:
    """Print per-group statistics of the judged dataset."""
    with open_runtime(args) as rt:
        judged = read_jsonl(dataset_paths(rt.store)["judged"], JudgedQuery)
        print(format_stats_table(dataset_stats(judged, args.group_by)), end="")
    return EXIT_OK


def cmd_label(args: argparse.Namespace) -> int:
    """Write hard/soft labels from judged scores, or import human labels."""
    if args.from_queries and not args.queries:
        logger.error("--from-queries needs --queries")
        return EXIT_USAGE
    with open_runtime(args) as rt:
        out = args.out or rt.store.labels_path
        started = utc_now()
        queries = rt.queries() if args.queries else None
        if args.human:
            known = [q.id for q in queries] if queries is not None else None
            labels = import_human_labels(args.human, known)
            params = {"human": rt.store.relative(args.human)}
            inputs = {"human": args.human}
        elif args.from_queries:
            labels = labels_from_queries(queries)
            if not labels:
                raise InputValidationError(f"no record in {args.queries} carries a human_label")
            params = {"human": "query-records"}
            inputs = {"queries": args.queries}
        else:
            if queries is not None and any(q.human_label is not None for q in queries):
                logger.info("Query records carry human labels; pass --from-queries to use them")
            epsilon = rt.cfg.label_epsilon if args.epsilon is None else args.epsilon
            judged_path = dataset_paths(rt.store)["judged"]
            labels = build_labels(read_jsonl(judged_path, JudgedQuery), epsilon, rt.cfg.scale)
            params = {"epsilon": epsilon}
            inputs = {"judged": judged_path}
        write_jsonl(out, labels)
        rt.store.record_stage("label", "complete", rt.config_hash, params, started, inputs=inputs, outputs=[out])
        need = sum(1 for label in labels if label.hard)
        logger.info("Wrote %d labels (%d need search) to %s", len(labels), need, out)
    return EXIT_OK


def cmd_export_sft(args: argparse.Namespace) -> int:
    """Export SFT records for one boundary-model variant."""
    with open_runtime(args) as rt:
        labels_path = args.labels or rt.store.labels_path
        labels = read_jsonl(labels_path, BoundaryLabel)
        role = "boundary_hard" if args.variant == "hard" else "boundary_soft"
        dialect = args.dialect or rt.cfg.profile(role).dialect
        out = args.out or rt.store.sft_dir / f"{args.variant}.jsonl"
        started = utc_now()
        export = export_sft(
            labels,
            index_queries(rt.queries()),
            args.variant,
            out,
            rt.cfg.templates,
            scale=rt.cfg.scale,
            dialect=dialect,
            balance=args.balance,
            seed=args.seed,
        )
        rt.store.record_stage(
            f"export-sft-{args.variant}",
            "complete",
            rt.config_hash,
            {"variant": args.variant, "dialect": dialect, "balance": args.balance, "seed": args.seed},
            started,
            inputs={"labels": labels_path, "queries": args.queries},
            outputs=[export.path, export.manifest_path],
            template_hashes=rt.cfg.templates.digests(dialect),
        )
    return EXIT_OK
