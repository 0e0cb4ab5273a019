"""Gate and answer command CLI parsing."""

from __future__ import annotations

import argparse

from gate.types import GATE_VARIANTS

from .common import _lazy_cmd, add_boundary_profile_arg, add_queries_arg, run_options


def _modes(value: str) -> list[str]:
    modes = [m.strip() for m in value.split(",") if m.strip()]
    unknown = [m for m in modes if m not in GATE_VARIANTS]
    if unknown or not modes:
        raise argparse.ArgumentTypeError(f"modes must be a comma list of {', '.join(GATE_VARIANTS)}")
    return modes


def add_gate_subparsers(subparsers: argparse._SubParsersAction) -> None:
    common = run_options()

    # ---- gate ----
    gate = subparsers.add_parser(
        "gate",
        parents=[common],
        help="Decide per query whether to retrieve",
    )
    add_queries_arg(gate)
    gate.add_argument(
        "--variant",
        choices=GATE_VARIANTS,
        default="skb",
        help="Gate variant (default: %(default)s)",
    )
    gate.add_argument(
        "--epsilon",
        type=float,
        default=None,
        help="SKB threshold; retrieve when the score is at least this (default: skb_epsilon)",
    )
    add_boundary_profile_arg(gate)
    gate.set_defaults(_cmd=_lazy_cmd("cli.commands.gate", "cmd_gate"))

    # ---- answer ----
    answer = subparsers.add_parser(
        "answer",
        parents=[common],
        help="Answer a dataset under one or more run modes",
    )
    add_queries_arg(answer)
    answer.add_argument(
        "--dataset",
        default=None,
        help="Dataset name for the answer files (default: query file stem)",
    )
    answer.add_argument(
        "--modes",
        type=_modes,
        default=list(GATE_VARIANTS),
        help="Comma list of modes (default: all five)",
    )
    answer.add_argument(
        "--epsilon",
        type=float,
        default=None,
        help="SKB threshold (default: skb_epsilon)",
    )
    add_boundary_profile_arg(answer)
    answer.add_argument(
        "--answer-profile",
        default=None,
        help="Profile that generates answers (default: the answerer role)",
    )
    answer.set_defaults(_cmd=_lazy_cmd("cli.commands.answer", "cmd_answer"))
