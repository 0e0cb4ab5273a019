"""Dataset command CLI parsing: build-dataset, stats, label, export-sft."""

from __future__ import annotations

import argparse
from pathlib import Path

from .common import _lazy_cmd, add_queries_arg, run_options

COMMANDS = "cli.commands.dataset"


def add_dataset_subparsers(subparsers: argparse._SubParsersAction) -> None:
    common = run_options()

    # ---- build-dataset ----
    build = subparsers.add_parser(
        "build-dataset",
        parents=[common],
        help="Sample every query R times, judge the samples, write per-source stats",
    )
    add_queries_arg(build)
    build.add_argument(
        "-R", "--samples",
        dest="R",
        type=int,
        default=None,
        help="Samples per query (default: sample_count from the config)",
    )
    build.set_defaults(_cmd=_lazy_cmd(COMMANDS, "cmd_build_dataset"))

    # ---- stats ----
    stats = subparsers.add_parser(
        "stats",
        parents=[common],
        help="Print count and mean ± std of judged scores per source",
    )
    stats.add_argument(
        "--group-by",
        default="source",
        help="Field to group judged queries by (default: %(default)s)",
    )
    stats.set_defaults(_cmd=_lazy_cmd(COMMANDS, "cmd_stats"))

    # ---- label ----
    label = subparsers.add_parser(
        "label",
        parents=[common],
        help="Turn judged queries (or human annotations) into boundary labels",
    )
    label.add_argument(
        "--epsilon",
        type=float,
        default=None,
        help="Mean-score threshold below which a query needs search (default: label_epsilon)",
    )
    human = label.add_mutually_exclusive_group()
    human.add_argument(
        "--human",
        type=Path,
        default=None,
        help="Import human search-needed labels from CSV or JSONL instead",
    )
    human.add_argument(
        "--from-queries",
        action="store_true",
        help="Use the human_label field of the --queries records instead (ignores --epsilon)",
    )
    add_queries_arg(label, required=False)
    label.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Label file (default: <run-dir>/labels/labels.jsonl)",
    )
    label.set_defaults(_cmd=_lazy_cmd(COMMANDS, "cmd_label"))

    # ---- export-sft ----
    export = subparsers.add_parser(
        "export-sft",
        parents=[common],
        help="Write instruction-tuning records for the hard or soft boundary model",
    )
    add_queries_arg(export)
    export.add_argument(
        "--variant",
        choices=["hard", "soft"],
        default="hard",
        help="Target format (default: %(default)s)",
    )
    export.add_argument(
        "--labels",
        type=Path,
        default=None,
        help="Label file (default: <run-dir>/labels/labels.jsonl)",
    )
    export.add_argument(
        "--dialect",
        default=None,
        help="Template dialect for the prompts (default: the boundary profile's dialect)",
    )
    export.add_argument(
        "--balance",
        action="store_true",
        help="Downsample the majority class (hard variant only)",
    )
    export.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Seed for --balance (default: %(default)s)",
    )
    export.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Output JSONL (default: <run-dir>/sft/<variant>.jsonl)",
    )
    export.set_defaults(_cmd=_lazy_cmd(COMMANDS, "cmd_export_sft"))
