"""Gatekeeper: boundary-model verdicts and the retrieval indicator."""

from .gatekeeper import Gatekeeper, check_skb_epsilon, parse_soft_score, parse_verdict
from .stage import GateRun, run_gate
from .types import GATE_VARIANTS, GateDecision, GateVariant

__all__ = [
    "GATE_VARIANTS",
    "GateDecision",
    "GateRun",
    "GateVariant",
    "Gatekeeper",
    "check_skb_epsilon",
    "parse_soft_score",
    "parse_verdict",
    "run_gate",
]
