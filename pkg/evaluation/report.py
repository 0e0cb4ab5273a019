"""Benchmark report: per dataset, LLM and token-accuracy rows across run modes."""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from collections.abc import Iterable, Mapping
from pathlib import Path

from pydantic import BaseModel, Field, model_validator

from gate.types import GATE_VARIANTS
from runstore.jsonl import write_text_atomic

from .scoring import AnswerScore, summarize_scores

logger = logging.getLogger(__name__)

MODE_TITLES = {
    "none": "No RAG",
    "all": "All RAG",
    "prompt": "Prompt-based",
    "hkb": "HKB",
    "skb": "SKB",
}


class ReportCell(BaseModel):
    dataset: str
    mode: str
    llm_score: float = Field(ge=0.0, le=100.0)
    token_acc: float = Field(ge=0.0, le=100.0)
    search_ratio: float = Field(ge=0.0, le=100.0)
    n: int
    evaluated: int
    failures: int = 0

    @model_validator(mode="after")
    def _check_degenerate_modes(self) -> ReportCell:
        if self.n and self.mode == "none" and self.search_ratio != 0.0:
            raise ValueError(f"{self.dataset}: No RAG rows cannot retrieve")
        if self.n and self.mode == "all" and self.search_ratio != 100.0:
            raise ValueError(f"{self.dataset}: All RAG rows must all retrieve")
        return self


class EvalReport(BaseModel):
    cells: list[ReportCell] = Field(default_factory=list)
    manifest_refs: list[str] = Field(default_factory=list)

    @property
    def datasets(self) -> list[str]:
        return sorted({c.dataset for c in self.cells})

    def cell(self, dataset: str, mode: str) -> ReportCell | None:
        return next((c for c in self.cells if c.dataset == dataset and c.mode == mode), None)


def emit_report(
    scores: Iterable[AnswerScore],
    failures: Mapping[tuple[str, str], int] | None = None,
    manifest_refs: Iterable[str] = (),
) -> EvalReport:
    """Aggregate scored rows per (dataset, mode).

    Failed rows never reach the scores; ``failures`` only reports them.
    """
    failures = failures or {}
    groups: dict[tuple[str, str], list[AnswerScore]] = defaultdict(list)
    for s in scores:
        groups[(s.dataset, s.mode)].append(s)
    order = {m: i for i, m in enumerate(GATE_VARIANTS)}
    cells = []
    for dataset, mode in sorted(groups, key=lambda k: (k[0], order.get(k[1], len(order)), k[1])):
        summary = summarize_scores(sorted(groups[(dataset, mode)], key=lambda s: s.query_id))
        cells.append(ReportCell(
            dataset=dataset,
            mode=mode,
            llm_score=summary.llm_score,
            token_acc=summary.token_acc,
            search_ratio=summary.search_ratio,
            n=summary.n,
            evaluated=summary.evaluated,
            failures=failures.get((dataset, mode), 0),
        ))
    return EvalReport(cells=cells, manifest_refs=sorted(set(manifest_refs)))


def report_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "mode", "llm", "token_acc", "search_ratio", "n", "evaluated", "failures"])
    for c in report.cells:
        writer.writerow([
            c.dataset, c.mode, f"{c.llm_score:.4f}", f"{c.token_acc:.4f}", f"{c.search_ratio:.2f}",
            c.n, c.evaluated, c.failures,
        ])
    return buf.getvalue()


def format_report_table(report: EvalReport) -> str:
    """One aligned table per dataset: rows LLM and Acc., each mode followed by its search %."""
    blocks = []
    for dataset in report.datasets:
        cells = [c for c in report.cells if c.dataset == dataset]
        header = [f"{dataset:<8}"]
        for c in cells:
            header += [f"{MODE_TITLES.get(c.mode, c.mode):>12}", f"{'%':>7}"]
        lines = ["  ".join(header)]
        lines.append("-" * len(lines[0]))
        for label, attr in (("LLM", "llm_score"), ("Acc.", "token_acc")):
            parts = [f"{label:<8}"]
            for c in cells:
                parts += [f"{getattr(c, attr):>12.2f}", f"{c.search_ratio:>7.2f}"]
            lines.append("  ".join(parts))
        failed = [f"{c.mode}={c.failures}" for c in cells if c.failures]
        if failed:
            lines.append(f"failed rows: {', '.join(failed)}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def write_report(report: EvalReport, csv_path: Path, table_path: Path) -> None:
    write_text_atomic(csv_path, report_csv(report))
    write_text_atomic(table_path, format_report_table(report))
    logger.info("Wrote report for %d datasets to %s", len(report.datasets), csv_path.parent)
