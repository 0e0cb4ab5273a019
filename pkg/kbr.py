#!/usr/bin/env python3
"""
Unified CLI for the knowledge-boundary retrieval toolkit.

Usage:
    kbr build-dataset --queries q.jsonl -R 30    # Sample + judge + per-source stats
    kbr stats                                    # Print mean ± std per source
    kbr label --epsilon 4.0                      # Hard/soft labels from judged scores
    kbr label --human labels.csv                 # Import human search-needed labels
    kbr export-sft --queries q.jsonl --variant soft
    kbr gate --queries q.jsonl --variant skb     # Retrieval decisions per query
    kbr answer --queries q.jsonl --modes none,all,hkb,skb
    kbr eval --queries q.jsonl                   # Judge + token accuracy report
    kbr sweep --queries q.jsonl --grid 1.0:5.0:0.5
    kbr consistency --queries q.jsonl --judge-b other-judge
    kbr held-in --queries q.jsonl --variant hard

Every command accepts --config, --run-dir, --parallelism, --resume and --mock.
Exit codes: 0 success, 1 usage, 2 some rows failed, 3 fatal error.
"""

import logging
import sys

from cli.common import UsageParser
from cli.dataset import add_dataset_subparsers
from cli.evaluate import add_evaluate_subparsers
from cli.gate import add_gate_subparsers
from cli.commands.runtime import EXIT_FATAL, EXIT_USAGE
from errors import KnowledgeBoundaryError
from logging_utils import add_logging_args, configure_logging

logger = logging.getLogger("kbr")


def build_parser() -> UsageParser:
    parser = UsageParser(
        prog="kbr",
        description="Knowledge-boundary gated retrieval for vision-language models",
    )
    add_logging_args(parser)
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    add_dataset_subparsers(subparsers)
    add_gate_subparsers(subparsers)
    add_evaluate_subparsers(subparsers)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.verbose, args.quiet)

    cmd = getattr(args, "_cmd", None)
    if args.command is None or cmd is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return cmd(args)
    except KnowledgeBoundaryError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
