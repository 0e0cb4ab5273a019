"""Run store: manifests, checkpoints, logs and caches under one run directory."""

from .checkpoint import CheckpointHeader, CheckpointStore, unit_key
from .jsonl import JsonlLog, read_jsonl, write_jsonl, write_text_atomic
from .lock import RunLock
from .manifest import ManifestLog, RunManifest, file_digest, utc_now
from .resume import ResumePlan, plan_resume
from .store import RunStore, generate_run_id

__all__ = [
    "CheckpointHeader",
    "CheckpointStore",
    "JsonlLog",
    "ManifestLog",
    "ResumePlan",
    "RunLock",
    "RunManifest",
    "RunStore",
    "file_digest",
    "generate_run_id",
    "plan_resume",
    "read_jsonl",
    "unit_key",
    "utc_now",
    "write_jsonl",
    "write_text_atomic",
]
