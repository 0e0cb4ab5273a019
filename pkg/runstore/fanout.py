"""Bounded parallel execution of independent units with a progress bar."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import TypeVar

from tqdm import tqdm

from errors import KnowledgeBoundaryError

logger = logging.getLogger(__name__)

U = TypeVar("U")
R = TypeVar("R")


def run_units(
    units: Sequence[U],
    work: Callable[[U], R],
    on_done: Callable[[U, R], None],
    on_error: Callable[[U, Exception], None],
    parallelism: int,
    desc: str,
) -> int:
    """Run ``work`` on every unit; returns the number of failed units.

    ``on_done``/``on_error`` run on the calling thread, so they may write
    checkpoints without extra locking. Pipeline errors become failed
    units; anything else is logged with a traceback and also counted.
    """
    if not units:
        return 0
    failures = 0
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        futures = {pool.submit(work, unit): unit for unit in units}
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc, disable=None):
            unit = futures[future]
            try:
                result = future.result()
            except KnowledgeBoundaryError as exc:
                failures += 1
                logger.debug("%s: unit %r failed: %s", desc, unit, exc)
                on_error(unit, exc)
                continue
            except Exception as exc:
                failures += 1
                logger.exception("%s: unexpected failure on unit %r", desc, unit)
                on_error(unit, exc)
                continue
            on_done(unit, result)
    return failures
