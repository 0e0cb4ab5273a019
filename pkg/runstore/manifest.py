"""Append-only run manifest (``manifest.jsonl``)."""

from __future__ import annotations

import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, ValidationError

from config import TOOL_VERSION

logger = logging.getLogger(__name__)

StageStatus = Literal["complete", "partial", "failed"]


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def params_digest(params: dict[str, Any]) -> str:
    payload = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunManifest(BaseModel):
    """One stage execution. Holds profile names only, never credentials."""

    run_id: str
    stage: str
    status: StageStatus
    config_hash: str
    params: dict[str, Any] = Field(default_factory=dict)
    template_hashes: dict[str, str] = Field(default_factory=dict)
    profile_names: list[str] = Field(default_factory=list)
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    started_at: str
    finished_at: str
    tool_version: str = TOOL_VERSION

    @property
    def params_hash(self) -> str:
        return params_digest(self.params)


class ManifestLog:
    def __init__(self, path: Path):
        self.path = Path(path)

    def append(self, entry: RunManifest) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as f:
            f.write(entry.model_dump_json() + "\n")

    def entries(self) -> list[RunManifest]:
        if not self.path.exists():
            return []
        result = []
        with self.path.open(encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    result.append(RunManifest.model_validate_json(line))
                except ValidationError:
                    logger.warning("Skipping unreadable manifest line %d in %s", lineno, self.path)
        return result

    def latest(self, stage: str) -> RunManifest | None:
        matches = [e for e in self.entries() if e.stage == stage]
        return matches[-1] if matches else None


def ids_digest(ids) -> str:
    """Order-independent digest of a set of query ids."""
    return hashlib.sha256("\n".join(sorted(ids)).encode("utf-8")).hexdigest()
