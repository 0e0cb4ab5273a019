"""Parser helpers shared by every subcommand."""

from __future__ import annotations

import argparse
import importlib
import sys
from pathlib import Path

from config import DEFAULT_PARALLELISM

DEFAULT_RUN_DIR = Path("runs") / "default"


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _lazy_cmd(module_path: str, func_name: str):
    """Return a function that lazily imports and calls a command function."""
    def _wrapper(args: argparse.Namespace) -> int:
        mod = importlib.import_module(module_path)
        return getattr(mod, func_name)(args)
    return _wrapper


def run_options() -> argparse.ArgumentParser:
    """Options accepted by every subcommand."""
    parser = UsageParser(add_help=False)
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="Run configuration YAML (default: configs/default.yaml)",
    )
    parser.add_argument(
        "--run-dir",
        type=Path,
        default=DEFAULT_RUN_DIR,
        help="Directory holding every artifact of the run (default: %(default)s)",
    )
    parser.add_argument(
        "--parallelism", "-j",
        type=int,
        default=DEFAULT_PARALLELISM,
        help="Concurrent requests per stage (default: %(default)s)",
    )
    parser.add_argument(
        "--resume",
        action="store_true",
        help="Continue from existing checkpoints instead of starting the stage over",
    )
    parser.add_argument(
        "--mock",
        action="store_true",
        help="Use the deterministic offline backends and search providers",
    )
    return parser


def add_queries_arg(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument(
        "--queries",
        type=Path,
        required=required,
        help="Query file (JSONL, one record per line)",
    )
    parser.add_argument(
        "--source",
        help="Dataset tag for records that carry none",
    )


def add_boundary_profile_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--boundary-profile",
        help="Profile for the boundary model (default: the boundary_hard/boundary_soft roles)",
    )
