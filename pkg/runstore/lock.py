"""Single-coordinator lock file for a run directory."""

from __future__ import annotations

import errno
import logging
import os
from pathlib import Path

from errors import RunLockedError

logger = logging.getLogger(__name__)


def _pid_alive(pid: int) -> bool:
    if pid <= 0:
        return False
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


class RunLock:
    """Exclusive ``run.lock`` holding the coordinator pid.

    A lock left behind by a dead process is taken over with a warning.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self.held = False

    def _read_pid(self) -> int | None:
        try:
            return int(self.path.read_text().strip() or "0")
        except (OSError, ValueError):
            return None

    def acquire(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        for _ in range(2):
            try:
                fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY, 0o644)
            except OSError as exc:
                if exc.errno != errno.EEXIST:
                    raise
                pid = self._read_pid()
                if pid is not None and pid != os.getpid() and _pid_alive(pid):
                    raise RunLockedError(f"{self.path.parent} is in use by process {pid}") from None
                logger.warning("Removing stale run lock %s (pid %s)", self.path, pid)
                self.path.unlink(missing_ok=True)
                continue
            with os.fdopen(fd, "w") as f:
                f.write(str(os.getpid()))
            self.held = True
            return
        raise RunLockedError(f"could not acquire {self.path}")

    def release(self) -> None:
        if self.held:
            self.path.unlink(missing_ok=True)
            self.held = False

    def __enter__(self) -> RunLock:
        self.acquire()
        return self

    def __exit__(self, *exc) -> None:
        self.release()
