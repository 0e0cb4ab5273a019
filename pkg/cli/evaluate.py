"""Evaluation command CLI parsing: eval, sweep, consistency, held-in."""

from __future__ import annotations

import argparse
from pathlib import Path

from config import HELD_IN_SOFT_TOLERANCE, SWEEP_GRID

from .common import _lazy_cmd, add_boundary_profile_arg, add_queries_arg, run_options

COMMANDS = "cli.commands.evaluate"


def _grid_default() -> str:
    return ":".join(f"{v:g}" for v in SWEEP_GRID)


def add_evaluate_subparsers(subparsers: argparse._SubParsersAction) -> None:
    common = run_options()

    # ---- eval ----
    ev = subparsers.add_parser(
        "eval",
        parents=[common],
        help="Score answer files and write the report",
    )
    add_queries_arg(ev)
    ev.add_argument(
        "--dataset",
        action="append",
        default=None,
        help="Dataset to score (repeatable; default: every dataset under answers/)",
    )
    ev.add_argument(
        "--judge-profile",
        default=None,
        help="Judge profile (default: the judge role)",
    )
    ev.set_defaults(_cmd=_lazy_cmd(COMMANDS, "cmd_eval"))

    # ---- sweep ----
    sweep = subparsers.add_parser(
        "sweep",
        parents=[common],
        help="Sweep the SKB threshold over cached gate scores and answers",
    )
    add_queries_arg(sweep)
    sweep.add_argument(
        "--dataset",
        default=None,
        help="Dataset name (default: query file stem)",
    )
    sweep.add_argument(
        "--grid",
        default=_grid_default(),
        help="Thresholds as start:stop:step or a comma list (default: %(default)s)",
    )
    add_boundary_profile_arg(sweep)
    sweep.set_defaults(_cmd=_lazy_cmd(COMMANDS, "cmd_sweep"))

    # ---- consistency ----
    consistency = subparsers.add_parser(
        "consistency",
        parents=[common],
        help="Score the same answers with two judges and report the gap",
    )
    add_queries_arg(consistency)
    consistency.add_argument(
        "--dataset",
        default=None,
        help="Dataset name (default: query file stem)",
    )
    consistency.add_argument("--judge-a", default=None, help="First judge (default: the judge role)")
    consistency.add_argument(
        "--judge-b",
        default=None,
        help="Second judge (default: the consistency_judge role)",
    )
    consistency.set_defaults(_cmd=_lazy_cmd(COMMANDS, "cmd_consistency"))

    # ---- held-in ----
    held_in = subparsers.add_parser(
        "held-in",
        parents=[common],
        help="Accuracy of a boundary model against its own training labels",
    )
    add_queries_arg(held_in)
    held_in.add_argument(
        "--labels",
        type=Path,
        default=None,
        help="Label file (default: <run-dir>/labels/labels.jsonl)",
    )
    held_in.add_argument(
        "--variant",
        choices=["hard", "soft"],
        default="hard",
        help="Boundary model variant (default: %(default)s)",
    )
    held_in.add_argument(
        "--tolerance",
        type=float,
        default=HELD_IN_SOFT_TOLERANCE,
        help="Soft predictions within this distance count as correct (default: %(default)s)",
    )
    add_boundary_profile_arg(held_in)
    held_in.set_defaults(_cmd=_lazy_cmd(COMMANDS, "cmd_held_in"))
