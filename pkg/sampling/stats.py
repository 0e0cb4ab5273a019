"""Per-source statistics over judged queries (count, mean of means, std)."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from collections.abc import Iterable
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from errors import InputValidationError
from runstore.jsonl import write_text_atomic

from .types import JudgedQuery


class SourceStats(BaseModel):
    source: str
    count: int
    mean: float
    std: float


def dataset_stats(judged: Iterable[JudgedQuery], group_by: str = "source") -> list[SourceStats]:
    """One row per group, sorted by group name. Standard deviation is population (ddof=0).

    Raises:
        InputValidationError: Empty collection or unknown grouping field.
    """
    groups: dict[str, list[float]] = defaultdict(list)
    for jq in judged:
        if group_by not in JudgedQuery.model_fields:
            raise InputValidationError(f"cannot group judged queries by {group_by!r}")
        groups[str(getattr(jq, group_by))].append(jq.mean_score)
    if not groups:
        raise InputValidationError("no judged queries to summarise")
    rows = []
    for name in sorted(groups):
        values = np.asarray(groups[name], dtype=float)
        rows.append(SourceStats(
            source=name,
            count=int(values.size),
            mean=float(values.mean()),
            std=float(values.std(ddof=0)),
        ))
    return rows


def stats_csv(rows: list[SourceStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["source", "count", "mean", "std"])
    for r in rows:
        writer.writerow([r.source, r.count, f"{r.mean:.6f}", f"{r.std:.6f}"])
    return buf.getvalue()


def format_stats_table(rows: list[SourceStats]) -> str:
    """Aligned text table: source, count, mean ± std."""
    header = f"{'Source':<16} {'Count':>8}   {'Avg. Score ± std.':<18}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r.source:<16} {r.count:>8}   {r.mean:.2f} ± {r.std:.2f}")
    return "\n".join(lines) + "\n"


def write_stats(rows: list[SourceStats], csv_path: Path, table_path: Path) -> None:
    write_text_atomic(csv_path, stats_csv(rows))
    write_text_atomic(table_path, format_stats_table(rows))
