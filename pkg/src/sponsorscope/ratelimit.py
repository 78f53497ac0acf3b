"""Request-budget accounting over a pool of API credentials.

Each credential carries an hourly budget (default 5000). Consumption is
tracked as a sliding-window log of grants, which makes the safety property
hold by construction: the cost granted to one credential inside ANY one-hour
window never exceeds its budget, not just inside fixed accounting windows.

``remaining`` and ``reset_at`` are views derived from the log so the pool can
mirror the remote limiter's headers (and be overridden by them in live mode).
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

from .clock import Clock

WINDOW_SECONDS = 3600.0
DEFAULT_BUDGET_PER_HOUR = 5000


class UnsatisfiableCostError(Exception):
    """The request cost exceeds every credential's full hourly budget."""


@dataclass(frozen=True, slots=True)
class Credential:
    """Point-in-time view of one credential's budget state."""

    token_id: str
    budget_per_hour: int
    remaining: int
    reset_at: float | None  # None when the budget is untouched


@dataclass(frozen=True, slots=True)
class Grant:
    token_id: str
    cost: int
    granted_at: float
    waited: float  # total time spent queued before the grant


def select_credential(pool: list[Credential], now: float) -> Credential:
    """Pick the credential with the most remaining budget.

    Ties break toward the lowest token_id; a fully exhausted pool yields the
    credential whose budget frees up first.
    """
    if not pool:
        raise ValueError("credential pool is empty")
    usable = [c for c in pool if c.remaining > 0]
    if usable:
        return min(usable, key=lambda c: (-c.remaining, c.token_id))
    return min(pool, key=lambda c: (c.reset_at if c.reset_at is not None else now, c.token_id))


class _TokenState:
    __slots__ = ("token_id", "budget", "grants", "used")

    def __init__(self, token_id: str, budget: int):
        self.token_id = token_id
        self.budget = budget
        self.grants: deque[tuple[float, int]] = deque()  # (granted_at, cost)
        self.used = 0

    def expire(self, now: float) -> None:
        horizon = now - WINDOW_SECONDS
        while self.grants and self.grants[0][0] <= horizon:
            _, cost = self.grants.popleft()
            self.used -= cost

    def remaining(self, now: float) -> int:
        self.expire(now)
        return self.budget - self.used

    def reset_at(self, now: float) -> float | None:
        self.expire(now)
        if not self.grants:
            return None
        return self.grants[0][0] + WINDOW_SECONDS

    def affordable_at(self, cost: int, now: float) -> float:
        """Earliest time this credential can pay ``cost`` (may be ``now``)."""
        self.expire(now)
        if self.budget - self.used >= cost:
            return now
        freed_needed = cost - (self.budget - self.used)
        freed = 0
        for granted_at, c in self.grants:
            freed += c
            if freed >= freed_needed:
                return granted_at + WINDOW_SECONDS
        return now + WINDOW_SECONDS  # unreachable for cost <= budget

    def record(self, now: float, cost: int) -> None:
        self.grants.append((now, cost))
        self.used += cost


class CredentialPool:
    """Thread-safe grant accounting across a configured set of tokens."""

    def __init__(self, token_ids: list[str], budget_per_hour: int = DEFAULT_BUDGET_PER_HOUR):
        if not token_ids:
            raise ValueError("credential pool is empty")
        if len(set(token_ids)) != len(token_ids):
            raise ValueError("duplicate token ids in pool")
        self._states = {tid: _TokenState(tid, budget_per_hour) for tid in sorted(token_ids)}
        self._lock = threading.Lock()
        self.budget_per_hour = budget_per_hour

    def snapshot(self, now: float) -> list[Credential]:
        with self._lock:
            return [
                Credential(s.token_id, s.budget, s.remaining(now), s.reset_at(now))
                for s in self._states.values()
            ]

    def try_acquire(self, cost: int, now: float) -> Grant | float:
        """Atomically grant ``cost`` against the best credential.

        Returns a Grant, or the wait duration (seconds) until some credential
        can next afford the request.
        """
        if cost < 1:
            raise ValueError("cost must be >= 1")
        with self._lock:
            if cost > max(s.budget for s in self._states.values()):
                raise UnsatisfiableCostError(
                    f"cost {cost} exceeds every credential budget"
                )
            views = [
                Credential(s.token_id, s.budget, s.remaining(now), s.reset_at(now))
                for s in self._states.values()
            ]
            affordable = [v for v in views if v.remaining >= cost]
            if affordable:
                chosen = select_credential(affordable, now)
                self._states[chosen.token_id].record(now, cost)
                return Grant(chosen.token_id, cost, now, 0.0)
            earliest = min(s.affordable_at(cost, now) for s in self._states.values())
            return max(earliest - now, 0.0)

    def preconsume(self, token_id: str, cost: int, now: float) -> None:
        """Account budget already spent elsewhere (tests, recovered state)."""
        with self._lock:
            self._states[token_id].record(now, cost)


def acquire_request_slot(
    pool: CredentialPool,
    cost: int,
    clock: Clock,
    on_wait=None,
) -> Grant:
    """Block (on the supplied clock) until the pool can pay ``cost``.

    Raises UnsatisfiableCostError when no credential could ever pay.
    """
    waited = 0.0
    while True:
        got = pool.try_acquire(cost, clock.now())
        if isinstance(got, Grant):
            if waited:
                got = Grant(got.token_id, got.cost, got.granted_at, waited)
            return got
        if on_wait is not None:
            on_wait(got)
        clock.sleep(got)
        waited += got
