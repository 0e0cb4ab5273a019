"""Per-endpoint rate limiting and retry backoff."""

from __future__ import annotations

import random
import threading
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager


class Throttle:
    """Minimum spacing between request starts plus a bounded in-flight window.

    ``peak_in_flight`` records the largest concurrent count seen, so tests
    can assert the window was honoured.
    """

    def __init__(
        self,
        requests_per_second: float,
        max_in_flight: int,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if requests_per_second <= 0 or max_in_flight <= 0:
            raise ValueError("rate limit and in-flight window must be positive")
        self.min_interval = 1.0 / requests_per_second
        self.max_in_flight = max_in_flight
        self._clock = clock
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._lock = threading.Lock()
        self._next_start = 0.0
        self.in_flight = 0
        self.peak_in_flight = 0

    def _wait_turn(self) -> None:
        with self._lock:
            now = self._clock()
            start = max(now, self._next_start)
            self._next_start = start + self.min_interval
        delay = start - now
        if delay > 0:
            self._sleep(delay)

    @contextmanager
    def slot(self) -> Iterator[None]:
        """Hold one in-flight slot for the duration of a request."""
        self._slots.acquire()
        try:
            self._wait_turn()
            with self._lock:
                self.in_flight += 1
                self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
            try:
                yield
            finally:
                with self._lock:
                    self.in_flight -= 1
        finally:
            self._slots.release()


def backoff_delay(
    attempt: int,
    base: float,
    cap: float,
    rng: random.Random | None = None,
) -> float:
    """Exponential backoff ``min(cap, base * 2**attempt)`` with jitter in [0.5, 1.0]."""
    t = min(cap, base * (2 ** attempt))
    return t * (0.5 + (rng or random).random() * 0.5)
