"""Continuation planning: which units of a stage still need work."""

from __future__ import annotations

import logging
from collections.abc import Iterable
from typing import Any

from pydantic import BaseModel, Field

from errors import ResumeError

from .checkpoint import CheckpointHeader, CheckpointStore

logger = logging.getLogger(__name__)


class ResumePlan(BaseModel):
    stage: str
    done: dict[str, Any] = Field(default_factory=dict)
    scheduled: list[str] = Field(default_factory=list)
    quarantined: int = 0

    @property
    def is_complete(self) -> bool:
        return not self.scheduled


def plan_resume(
    store: CheckpointStore,
    header: CheckpointHeader,
    units: Iterable[str],
    resume: bool,
) -> ResumePlan:
    """Open a stage checkpoint and list the units that still need work.

    With ``resume`` the existing checkpoint is kept when its header
    matches; a header from a different config or parameters raises
    ``ResumeError``. Without ``resume`` the checkpoint is started fresh.
    Corrupt lines are quarantined and their units rescheduled.
    """
    units = list(units)
    if not resume:
        store.reset(header)
        return ResumePlan(stage=header.stage, scheduled=units)

    existing, done, bad = store.read()
    if existing is None and not done:
        store.reset(header)
        return ResumePlan(stage=header.stage, scheduled=units, quarantined=bad)
    if existing != header:
        raise ResumeError(
            f"checkpoint for stage {header.stage!r} was written with a different "
            f"configuration; use a new run directory or drop --resume"
        )

    wanted = set(units)
    done = {k: v for k, v in done.items() if k in wanted}
    store.compact(header, done)
    scheduled = [u for u in units if u not in done]
    logger.info(
        "Resuming %s: %d done, %d scheduled, %d quarantined",
        header.stage, len(done), len(scheduled), bad,
    )
    return ResumePlan(stage=header.stage, done=done, scheduled=scheduled, quarantined=bad)
