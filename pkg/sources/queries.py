"""
Query file ingestion.

Query files are line-delimited JSON, one ``QueryRecord`` per line. Common
dataset spellings (``question``, ``answer``, ``image``) are accepted.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from pydantic import ValidationError

from boundary.types import QueryRecord
from errors import IngestionError, IntegrityError

logger = logging.getLogger(__name__)


def load_queries(path: Path | str, source: str | None = None) -> list[QueryRecord]:
    """Load and validate a query file.

    Args:
        path: JSONL file.
        source: Dataset tag applied to records that carry none.

    Raises:
        IngestionError: Unreadable file, bad JSON or invalid record (with line number).
        IntegrityError: Duplicate query ids.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestionError(f"cannot read query file {path}: {exc}") from exc

    records: list[QueryRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            if source and not raw.get("source"):
                raw["source"] = source
            record = QueryRecord.model_validate(raw)
        except (json.JSONDecodeError, ValidationError, AttributeError) as exc:
            raise IngestionError(f"{path}:{lineno}: invalid query record: {exc}") from exc
        if record.id in seen:
            raise IntegrityError(f"{path}:{lineno}: duplicate query id {record.id!r}")
        seen.add(record.id)
        records.append(record)

    logger.info("Loaded %d queries from %s", len(records), path)
    return records


def index_queries(queries: list[QueryRecord]) -> dict[str, QueryRecord]:
    """Map query id to record; ids must be unique."""
    index: dict[str, QueryRecord] = {}
    for q in queries:
        if q.id in index:
            raise IntegrityError(f"duplicate query id {q.id!r}")
        index[q.id] = q
    return index
