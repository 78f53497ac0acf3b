"""Rate-limited, retrying facade over a provider.

All traversal code talks to SourceClient, never to a provider directly:
every call acquires a budget slot first (unit cost model: profile, edge page,
activity year, and seed page each cost 1), transient failures are retried
with jittered exponential backoff, and upstream rate-limit signals are
honored by sleeping until the echoed reset.
"""

from __future__ import annotations

import random
from typing import Callable

from ..clock import Clock
from ..model import Direction
from ..ratelimit import CredentialPool, acquire_request_slot
from .base import (
    EdgePage,
    InvalidCursorError,
    ProviderResponse,
    RateLimitedError,
    SourceProvider,
    TransientProviderError,
)

EventSink = Callable[[str, dict], None]

BACKOFF_BASE_SECONDS = 2.0
BACKOFF_FACTOR = 2.0
MAX_ATTEMPTS = 6


class TransientExhausted(TransientProviderError):
    """All retry attempts failed; the caller decides what to do next."""


class SourceClient:
    def __init__(
        self,
        provider: SourceProvider,
        pool: CredentialPool,
        clock: Clock,
        rng: random.Random | None = None,
        on_event: EventSink | None = None,
        max_attempts: int = MAX_ATTEMPTS,
    ):
        self._provider = provider
        self._pool = pool
        self._clock = clock
        self._rng = rng or random.Random()
        self._on_event = on_event
        self._max_attempts = max_attempts
        self.api_calls = 0
        self.retries = 0

    def _emit(self, kind: str, **fields) -> None:
        if self._on_event is not None:
            self._on_event(kind, {"t": self._clock.now(), **fields})

    def _call(self, call: str, fn, **detail) -> ProviderResponse:
        last_error: Exception | None = None
        for attempt in range(1, self._max_attempts + 1):
            grant = acquire_request_slot(
                self._pool, 1, self._clock,
                on_wait=lambda w: self._emit("wait", seconds=w, call=call, **detail),
            )
            self._emit("grant", token=grant.token_id, cost=grant.cost, waited=grant.waited)
            try:
                response = fn(token_id=grant.token_id)
            except RateLimitedError as exc:
                # Upstream disagrees with local accounting; trust its reset.
                last_error = exc
                self.retries += 1
                pause = max(exc.reset_at - self._clock.now(), 0.0) + 1.0
                self._emit("backoff", call=call, attempt=attempt, seconds=pause, **detail)
                self._clock.sleep(pause)
                continue
            except TransientProviderError as exc:
                last_error = exc
                self.retries += 1
                if attempt == self._max_attempts:
                    break
                ceiling = BACKOFF_BASE_SECONDS * (BACKOFF_FACTOR ** (attempt - 1))
                pause = self._rng.uniform(0.0, ceiling)
                self._emit("backoff", call=call, attempt=attempt, seconds=pause, **detail)
                self._clock.sleep(pause)
                continue
            self.api_calls += 1
            self._emit("fetch", call=call, **detail)
            return response
        raise TransientExhausted(f"{call} failed after {self._max_attempts} attempts: {last_error}")

    # -- public fetch surface -------------------------------------------------

    def fetch_profile(self, login: str):
        resp = self._call("profile", lambda token_id: self._provider.fetch_profile(
            login, token_id=token_id), login=login)
        return resp.payload

    def fetch_edges_page(self, login: str, direction: Direction, cursor: str | None):
        resp = self._call(
            "edges",
            lambda token_id: self._provider.fetch_sponsor_edges_page(
                login, direction, cursor, token_id=token_id),
            login=login, direction=direction.value,
        )
        return resp.payload

    def fetch_edges(self, login: str, direction: Direction) -> list[tuple[str, str]]:
        """All pages for one direction; an invalidated cursor restarts cleanly."""
        while True:
            edges: list[tuple[str, str]] = []
            cursor: str | None = None
            try:
                while True:
                    page: EdgePage = self.fetch_edges_page(login, direction, cursor)
                    edges.extend(page.edges)
                    if page.next_cursor is None:
                        return edges
                    cursor = page.next_cursor
            except InvalidCursorError:
                self._emit("cursor_restart", login=login, direction=direction.value)
                continue

    def fetch_activity_year(self, login: str, year: int):
        resp = self._call(
            "activity",
            lambda token_id: self._provider.fetch_activity_year(login, year, token_id=token_id),
            login=login, year=year,
        )
        return resp.payload

    def list_sponsorable(self) -> list[str]:
        logins: list[str] = []
        cursor: str | None = None
        while True:
            resp = self._call(
                "seed_page",
                lambda token_id: self._provider.list_sponsorable_page(cursor, token_id=token_id),
            )
            logins.extend(resp.payload.logins)
            if resp.payload.next_cursor is None:
                return logins
            cursor = resp.payload.next_cursor
