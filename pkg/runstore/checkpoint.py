"""Append-only unit checkpoints for resumable stages.

File layout (``checkpoints/<stage>.jsonl``)::

    {"header": {"stage": ..., "config_hash": ..., "params_hash": ...}}
    {"key": "[\"q1\", 0]", "digest": "<sha256 of payload>", "payload": {...}}
    ...

Lines that fail to parse or whose digest does not match their payload
are moved to ``quarantine.jsonl`` and the unit is scheduled again.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from .jsonl import JsonlLog, write_text_atomic
from .manifest import utc_now

logger = logging.getLogger(__name__)


class CheckpointHeader(BaseModel):
    stage: str
    config_hash: str
    params_hash: str


def unit_key(*parts: Any) -> str:
    """Stable key for a (query, stage-unit, index) tuple."""
    return json.dumps(list(parts), separators=(",", ":"), ensure_ascii=False)


def payload_digest(payload: Any) -> str:
    data = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(data.encode("utf-8")).hexdigest()


class CheckpointStore:
    """One stage's checkpoint file plus the shared quarantine log."""

    def __init__(self, path: Path, quarantine: JsonlLog):
        self.path = Path(path)
        self.quarantine = quarantine
        self._lock = threading.Lock()

    def read(self) -> tuple[CheckpointHeader | None, dict[str, Any], int]:
        """Return (header, completed payloads by key, number of quarantined lines)."""
        if not self.path.exists():
            return None, {}, 0
        header: CheckpointHeader | None = None
        done: dict[str, Any] = {}
        bad = 0
        with self.path.open(encoding="utf-8") as f:
            lines = f.read().split("\n")
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                if lineno == 1 and "header" in entry:
                    header = CheckpointHeader.model_validate(entry["header"])
                    continue
                key, digest, payload = entry["key"], entry["digest"], entry["payload"]
                if payload_digest(payload) != digest:
                    raise ValueError("digest mismatch")
            except (ValueError, KeyError, TypeError) as exc:
                bad += 1
                self.quarantine.append({
                    "checkpoint": self.path.name,
                    "line": lineno,
                    "error": str(exc),
                    "content": line[:500],
                    "at": utc_now(),
                })
                continue
            done[key] = payload
        if bad:
            logger.warning("Quarantined %d corrupt checkpoint lines from %s", bad, self.path)
        return header, done, bad

    def reset(self, header: CheckpointHeader) -> None:
        write_text_atomic(self.path, json.dumps({"header": header.model_dump()}) + "\n")

    def compact(self, header: CheckpointHeader, done: dict[str, Any]) -> None:
        """Rewrite the file with only valid entries (drops quarantined lines)."""
        lines = [json.dumps({"header": header.model_dump()})]
        for key in sorted(done):
            lines.append(json.dumps({"key": key, "digest": payload_digest(done[key]), "payload": done[key]}))
        write_text_atomic(self.path, "\n".join(lines) + "\n")

    def record(self, key: str, payload: Any) -> None:
        line = json.dumps({"key": key, "digest": payload_digest(payload), "payload": payload}, ensure_ascii=False)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()

    def clear(self) -> None:
        self.path.unlink(missing_ok=True)
