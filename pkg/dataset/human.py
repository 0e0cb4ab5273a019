"""Import of human "search needed" annotations as hard labels."""

from __future__ import annotations

import csv
import json
import logging
from collections.abc import Iterable
from pathlib import Path

from boundary.types import BoundaryLabel, QueryRecord
from errors import IngestionError, IntegrityError, ParseFailure

logger = logging.getLogger(__name__)

TRUE_VALUES = {"true", "1", "yes", "y", "t"}
FALSE_VALUES = {"false", "0", "no", "n", "f"}

ID_FIELDS = ("query_id", "id")
LABEL_FIELDS = ("label", "search_needed", "human_label")


def parse_bool(value: object) -> bool:
    """Strict boolean parse for annotation values.

    Raises:
        ParseFailure: Anything other than true/false/1/0/yes/no.
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, int) and value in (0, 1):
        return bool(value)
    text = str(value).strip().lower()
    if text in TRUE_VALUES:
        return True
    if text in FALSE_VALUES:
        return False
    raise ParseFailure(f"not a boolean annotation: {value!r}")


def _pick(row: dict, names: tuple[str, ...], what: str, where: str) -> object:
    for name in names:
        if name in row and row[name] not in (None, ""):
            return row[name]
    raise ParseFailure(f"{where}: missing {what} (expected one of {', '.join(names)})")


def _read_rows(path: Path) -> list[tuple[str, dict]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read label file {path}: {exc}") from exc
    if path.suffix.lower() in (".jsonl", ".json"):
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseFailure(f"{path}:{lineno}: {exc}") from exc
            if not isinstance(row, dict):
                raise ParseFailure(f"{path}:{lineno}: expected an object")
            rows.append((f"{path}:{lineno}", row))
        return rows
    reader = csv.DictReader(text.splitlines())
    return [(f"{path}:{n}", row) for n, row in enumerate(reader, start=2)]


def import_human_labels(path: Path | str, known_ids: Iterable[str] | None = None) -> list[BoundaryLabel]:
    """Read (query_id, boolean) rows from CSV or JSONL into hard-only labels.

    Equal duplicate rows collapse into one label.

    Raises:
        ParseFailure: A row lacks fields or has a non-boolean value.
        IntegrityError: Unknown query id, or conflicting duplicates.
    """
    path = Path(path)
    known = set(known_ids) if known_ids is not None else None
    values: dict[str, bool] = {}
    for where, row in _read_rows(path):
        qid = str(_pick(row, ID_FIELDS, "query id", where)).strip()
        value = parse_bool(_pick(row, LABEL_FIELDS, "label", where))
        if known is not None and qid not in known:
            raise IntegrityError(f"{where}: unknown query id {qid!r}")
        if qid in values and values[qid] != value:
            raise IntegrityError(f"{where}: conflicting labels for query {qid!r}")
        values[qid] = value
    labels = [BoundaryLabel(query_id=qid, hard=values[qid], origin="human") for qid in sorted(values)]
    logger.info("Imported %d human labels from %s", len(labels), path)
    return labels


def labels_from_queries(queries: Iterable[QueryRecord]) -> list[BoundaryLabel]:
    """Hard labels from the ``human_label`` field carried on query records."""
    labels = [
        BoundaryLabel(query_id=q.id, source=q.source, hard=q.human_label, origin="human")
        for q in queries
        if q.human_label is not None
    ]
    return sorted(labels, key=lambda label: label.query_id)
