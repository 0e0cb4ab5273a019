"""Run directory layout and stage bookkeeping."""

from __future__ import annotations

import hashlib
import logging
from datetime import datetime
from pathlib import Path
from typing import Any

from .checkpoint import CheckpointHeader, CheckpointStore
from .jsonl import JsonlLog
from .lock import RunLock
from .manifest import ManifestLog, RunManifest, StageStatus, file_digest, params_digest, utc_now

logger = logging.getLogger(__name__)


def generate_run_id() -> str:
    """Short id derived from the creation timestamp."""
    return hashlib.sha256(datetime.now().isoformat().encode()).hexdigest()[:8]


class RunStore:
    """Everything a run writes lives under one directory.

    ::

        run.lock  manifest.jsonl  calls.jsonl  errors.jsonl
        checkpoints/<stage>.jsonl  checkpoints/quarantine.jsonl
        cache/{responses,search,images}/
        dataset/  labels/  sft/  gate/  answers/<dataset>/  eval/
    """

    def __init__(self, run_dir: Path):
        self.root = Path(run_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest = ManifestLog(self.root / "manifest.jsonl")
        self.calls = JsonlLog(self.root / "calls.jsonl")
        self.errors = JsonlLog(self.root / "errors.jsonl")
        self.quarantine = JsonlLog(self.checkpoints_dir / "quarantine.jsonl")
        entries = self.manifest.entries()
        self.run_id = entries[0].run_id if entries else generate_run_id()

    # -------------------------------------------------------------------------
    # Layout
    # -------------------------------------------------------------------------

    @property
    def checkpoints_dir(self) -> Path:
        return self.root / "checkpoints"

    @property
    def responses_dir(self) -> Path:
        return self.root / "cache" / "responses"

    @property
    def search_dir(self) -> Path:
        return self.root / "cache" / "search"

    @property
    def images_dir(self) -> Path:
        return self.root / "cache" / "images"

    @property
    def dataset_dir(self) -> Path:
        return self.root / "dataset"

    @property
    def labels_path(self) -> Path:
        return self.root / "labels" / "labels.jsonl"

    @property
    def sft_dir(self) -> Path:
        return self.root / "sft"

    @property
    def gate_dir(self) -> Path:
        return self.root / "gate"

    @property
    def eval_dir(self) -> Path:
        return self.root / "eval"

    def answers_dir(self, dataset: str) -> Path:
        return self.root / "answers" / dataset

    def lock(self) -> RunLock:
        return RunLock(self.root / "run.lock")

    def checkpoint(self, stage: str) -> CheckpointStore:
        self.checkpoints_dir.mkdir(parents=True, exist_ok=True)
        safe = stage.replace("/", "__")
        return CheckpointStore(self.checkpoints_dir / f"{safe}.jsonl", self.quarantine)

    def relative(self, path: Path) -> str:
        try:
            return str(Path(path).resolve().relative_to(self.root.resolve()))
        except ValueError:
            return str(path)

    # -------------------------------------------------------------------------
    # Stage bookkeeping
    # -------------------------------------------------------------------------

    @staticmethod
    def header(stage: str, config_hash: str, params: dict[str, Any]) -> CheckpointHeader:
        return CheckpointHeader(stage=stage, config_hash=config_hash, params_hash=params_digest(params))

    def _digests(self, paths: dict[str, Path]) -> dict[str, str]:
        return {name: file_digest(p) for name, p in sorted(paths.items()) if Path(p).exists()}

    def completed(
        self,
        stage: str,
        config_hash: str,
        params: dict[str, Any],
        inputs: dict[str, Path],
    ) -> RunManifest | None:
        """Latest complete entry for this exact stage invocation, if its outputs are intact."""
        entry = self.manifest.latest(stage)
        if entry is None or entry.status != "complete":
            return None
        if entry.config_hash != config_hash or entry.params_hash != params_digest(params):
            return None
        if entry.inputs != self._digests(inputs):
            return None
        for rel, digest in entry.outputs.items():
            path = self.root / rel
            if not path.exists() or file_digest(path) != digest:
                return None
        return entry

    def record_stage(
        self,
        stage: str,
        status: StageStatus,
        config_hash: str,
        params: dict[str, Any],
        started_at: str,
        inputs: dict[str, Path] | None = None,
        outputs: list[Path] | None = None,
        template_hashes: dict[str, str] | None = None,
        profile_names: list[str] | None = None,
    ) -> RunManifest:
        entry = RunManifest(
            run_id=self.run_id,
            stage=stage,
            status=status,
            config_hash=config_hash,
            params=params,
            template_hashes=template_hashes or {},
            profile_names=sorted(set(profile_names or [])),
            inputs=self._digests(inputs or {}),
            outputs={self.relative(p): file_digest(p) for p in (outputs or []) if Path(p).exists()},
            started_at=started_at,
            finished_at=utc_now(),
        )
        self.manifest.append(entry)
        logger.info("Stage %s %s (run %s)", stage, status, self.run_id)
        return entry

    def log_error(self, stage: str, query_id: str, exc: BaseException, **extra: Any) -> None:
        self.errors.append({
            "stage": stage,
            "query_id": query_id,
            "error_type": type(exc).__name__,
            "message": str(exc),
            **extra,
        })
