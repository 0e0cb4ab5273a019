"""Gate command: route every query to retrieval or not."""

from __future__ import annotations

import argparse
import logging

from evaluation.metrics import search_ratio
from gate.stage import run_gate

from .runtime import exit_code, open_runtime

logger = logging.getLogger(__name__)


def cmd_gate(args: argparse.Namespace) -> int:
    """Write <run-dir>/gate/<variant>.jsonl; the SKB threshold used is echoed in the manifest."""
    with open_runtime(args) as rt:
        result = run_gate(
            rt.queries(),
            args.variant,
            rt.gatekeeper(args.boundary_profile),
            rt.store,
            rt.config_hash,
            epsilon=args.epsilon,
            parallelism=args.parallelism,
            resume=args.resume,
        )
        if result.decisions:
            print(f"{args.variant}: search ratio {search_ratio(result.decisions):.2f}% "
                  f"over {len(result.decisions)} queries")
        return exit_code(len(result.failed))
