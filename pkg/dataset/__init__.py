"""Boundary labels, SFT export and human label import."""

from .human import import_human_labels, labels_from_queries, parse_bool
from .labels import build_labels
from .sft import SftExport, SftRecord, balance_labels, export_sft, hard_target, soft_target

__all__ = [
    "SftExport",
    "SftRecord",
    "balance_labels",
    "build_labels",
    "export_sft",
    "hard_target",
    "import_human_labels",
    "labels_from_queries",
    "parse_bool",
    "soft_target",
]
