"""Injectable time source.

Every component that needs time (budget windows, staleness, due times) takes
a Clock so the whole system can run against either wall time or a simulated
clock that only moves when something sleeps.
"""

from __future__ import annotations

import threading
import time
from typing import Protocol


class Clock(Protocol):
    def now(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class RealClock:
    """Wall clock. sleep() is interruptible through an optional stop event."""

    def __init__(self, stop_event: threading.Event | None = None):
        self._stop = stop_event

    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        if seconds <= 0:
            return
        if self._stop is not None:
            self._stop.wait(timeout=seconds)
        else:
            time.sleep(seconds)


class SimulatedClock:
    """Deterministic clock: time advances only via sleep()/advance_to().

    Advancement is serialized by a lock so concurrent users cannot interleave
    partial advances.
    """

    def __init__(self, start: float = 0.0):
        self._now = float(start)
        self._lock = threading.Lock()

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("cannot sleep a negative duration")
        with self._lock:
            self._now += seconds

    def advance_to(self, t: float) -> None:
        with self._lock:
            if t < self._now:
                raise ValueError(f"cannot move simulated clock backwards ({t} < {self._now})")
            self._now = t
