"""Ingest loop: seeded discovery, staleness, priority ordering, processing.

The worker drains a persistent queue of due accounts. Processing one account
fetches its profile and both edge directions, diffs edges against the store,
fetches missing activity years, enqueues newly seen edge endpoints, and
re-enqueues the account at its refresh horizon. All writes for one account
commit atomically, so a crash at any instant loses at most the in-flight
account, which stays due and is re-processed identically after restart.
"""

from __future__ import annotations

import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable

from .clock import Clock, SimulatedClock
from .geocode import GeocodeCache, Geocoder, geocode_location
from .model import (
    AccountType,
    Direction,
    UserRecord,
    YearActivity,
)
from .normalize import (
    LocationOutcome,
    classify_quality,
    extract_pronoun_category,
    normalize_location_string,
)
from .source import NotFoundError, ProfilePayload, SourceClient, TransientExhausted
from .store import Store

HOUR = 3600.0
DEFAULT_ACTIVE_REFRESH = 24 * HOUR
DEFAULT_INACTIVE_REFRESH = 720 * HOUR
# Delay before retrying an account whose fetches exhausted their retries.
TRANSIENT_REQUEUE_DELAY = 128.0
DEFAULT_BATCH_SIZE = 500

EventSink = Callable[[str, dict], None]


class SeedError(Exception):
    """Seeding aborted; the queue was left unchanged."""


@dataclass(frozen=True, slots=True)
class SchedulerConfig:
    active_refresh_interval: float = DEFAULT_ACTIVE_REFRESH
    inactive_refresh_interval: float = DEFAULT_INACTIVE_REFRESH
    worker_count: int = 1
    seed_mode: str = "AllSponsorable"  # or "TargetedFilter"
    target_filter: dict[str, str] | None = None

    def __post_init__(self):
        if self.active_refresh_interval >= self.inactive_refresh_interval:
            raise ValueError("active refresh interval must be shorter than inactive")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.seed_mode not in ("AllSponsorable", "TargetedFilter"):
            raise ValueError(f"unknown seed_mode {self.seed_mode!r}")


@dataclass(frozen=True, slots=True)
class ProcessOutcome:
    updated: bool
    new_users_discovered: int = 0
    edges_added: int = 0
    edges_retired: int = 0
    retired: bool = False
    deferred: bool = False


@dataclass
class RunReport:
    users_processed: int = 0
    api_calls: int = 0
    errors: int = 0
    retired: int = 0
    discovered: int = 0
    skipped_fresh: int = 0


def is_stale(user: UserRecord | None, active: bool, now: float,
             config: SchedulerConfig) -> bool:
    """Never-fetched accounts are always stale; otherwise age beats interval."""
    if user is None or user.last_fetched_at is None:
        return True
    interval = (config.active_refresh_interval if active
                else config.inactive_refresh_interval)
    return (now - user.last_fetched_at) > interval


def compute_priority(entry, now: float) -> tuple:
    """Total order over due entries: active class first, then most overdue,
    then login for determinism. Smaller keys sort first."""
    overdue = now - entry.due_at
    return (0 if entry.active else 1, -overdue, entry.login)


def year_of(ts: float) -> int:
    return datetime.fromtimestamp(ts, tz=timezone.utc).year


class IngestWorker:
    def __init__(
        self,
        store: Store,
        client: SourceClient,
        clock: Clock,
        config: SchedulerConfig | None = None,
        geocoder: Geocoder | None = None,
        geocode_cache: GeocodeCache | None = None,
        on_event: EventSink | None = None,
    ):
        self.store = store
        self.client = client
        self.clock = clock
        self.config = config or SchedulerConfig()
        self._geocoder = geocoder
        self._geocode_cache = geocode_cache
        self._on_event = on_event
        # In-memory mirrors of store state, rebuilt on construction so a
        # restarted worker resumes exactly where the store says it was.
        self._known = store.all_logins()
        self._queued = store.queued_logins()
        self._retired = store.retired_logins()
        self._claim_lock = threading.Lock()
        self._claimed: set[str] = set()
        self._report_lock = threading.Lock()

    def _emit(self, kind: str, **fields) -> None:
        if self._on_event is not None:
            self._on_event(kind, {"t": self.clock.now(), **fields})

    # -- seeding ---------------------------------------------------------------

    def seed(self) -> int:
        """Enqueue every provider-listed sponsorable account exactly once."""
        logins = self.client.list_sponsorable()
        if self.config.seed_mode == "TargetedFilter" and self.config.target_filter:
            logins = [l for l in logins if self._matches_filter(l)]
        added = 0
        now = self.clock.now()
        with self.store.transaction():
            for login in logins:
                if login in self._retired:
                    continue
                if self.store.enqueue_if_absent(login, now, False, now):
                    self._queued.add(login)
                    added += 1
        self._emit("seed", count=added, listed=len(logins))
        return added

    def _matches_filter(self, login: str) -> bool:
        flt = self.config.target_filter or {}
        profile = self.client.fetch_profile(login)
        if "type" in flt and profile.account_type != flt["type"]:
            return False
        if "country" in flt:
            geo, _ = self._resolve_location(profile.location_raw)
            if geo is None or geo.country != flt["country"]:
                return False
        return True

    # -- normalization during ingest --------------------------------------------

    def _resolve_location(self, location_raw: str | None):
        cleaned = normalize_location_string(location_raw)
        if cleaned is LocationOutcome.EMPTY:
            return None, LocationOutcome.EMPTY
        if cleaned is LocationOutcome.PRIVACY:
            return None, LocationOutcome.PRIVACY
        if self._geocoder is None or self._geocode_cache is None:
            return None, LocationOutcome.UNRESOLVABLE
        result = geocode_location(cleaned, self._geocode_cache, self._geocoder,
                                  self.clock.now())
        if result is LocationOutcome.UNRESOLVABLE:
            return None, LocationOutcome.UNRESOLVABLE
        return result, LocationOutcome.RESOLVED

    def _build_record(self, payload: ProfilePayload, existing: UserRecord | None,
                      now: float) -> tuple[UserRecord, str]:
        geo, outcome = self._resolve_location(payload.location_raw)
        pronouns_raw = payload.pronouns_raw
        if pronouns_raw is not None and not pronouns_raw.strip():
            pronouns_raw = None
        category = extract_pronoun_category(pronouns_raw)
        quality = classify_quality(category, geo)
        first_seen = existing.first_seen_at if existing is not None else now
        record = UserRecord(
            login=payload.login,
            account_type=AccountType(payload.account_type),
            display_name=payload.display_name,
            location_raw=payload.location_raw,
            geo=geo,
            pronouns_raw=pronouns_raw,
            pronoun_category=category,
            sponsor_count=payload.sponsor_count,
            sponsoring_count=payload.sponsoring_count,
            sponsorable=payload.sponsorable,
            min_tier_cents=payload.min_tier_cents,
            created_at=payload.created_at,
            first_seen_at=first_seen,
            last_fetched_at=now,
            quality_flag=quality,
            is_stub=False,
            retired=False,
            discovered_via=existing.discovered_via if existing else None,
        )
        return record, outcome.value

    # -- processing --------------------------------------------------------------

    def process_user(self, login: str) -> ProcessOutcome:
        existing = self.store.get_user(login)
        try:
            profile = self.client.fetch_profile(login)
            incoming = set(self.client.fetch_edges(login, Direction.SPONSORS_OF))
            outgoing = set(self.client.fetch_edges(login, Direction.SPONSORED_BY))
            activity = self._fetch_missing_activity(login, profile)
        except NotFoundError:
            return self._retire(login)
        except TransientExhausted:
            now = self.clock.now()
            self.store.requeue(login, now + TRANSIENT_REQUEUE_DELAY,
                               existing is not None and not existing.is_stub, now)
            self._queued.add(login)
            self._emit("deferred", login=login)
            return ProcessOutcome(updated=False, deferred=True)

        now = self.clock.now()
        record, outcome = self._build_record(profile, existing, now)
        discovered: list[tuple[str, str]] = []
        with self.store.transaction():
            self.store.upsert_user(record, location_outcome=outcome)
            self._known.add(login)
            added_in, retired_in = self.store.sync_sponsorship_edges(
                login, Direction.SPONSORS_OF, incoming, now)
            added_out, retired_out = self.store.sync_sponsorship_edges(
                login, Direction.SPONSORED_BY, outgoing, now)
            for entry in activity:
                self.store.record_activity_year(entry)

            for sponsor, recipient in sorted(incoming | outgoing):
                other = sponsor if sponsor != login else recipient
                if other in self._known or other in self._retired:
                    continue
                discovered.append((other, login))
            if discovered:
                self.store.ensure_stubs(discovered, now)
                for other, _ in discovered:
                    self._known.add(other)
                    if other not in self._queued:
                        self.store.enqueue_if_absent(other, now, False, now, login)
                        self._queued.add(other)
                        self._emit("enqueue", login=other, via=login)

            in_deg, out_deg = self.store.live_degree(login)
            active = (in_deg + out_deg) > 0
            interval = (self.config.active_refresh_interval if active
                        else self.config.inactive_refresh_interval)
            self.store.requeue(login, now + interval, active, now)
            self._queued.add(login)

        outcome_record = ProcessOutcome(
            updated=True,
            new_users_discovered=len(discovered),
            edges_added=added_in + added_out,
            edges_retired=retired_in + retired_out,
        )
        self._emit("process", login=login, discovered=len(discovered),
                   edges_added=outcome_record.edges_added,
                   edges_retired=outcome_record.edges_retired, active=active)
        return outcome_record

    def _fetch_missing_activity(self, login: str,
                                profile: ProfilePayload) -> list[YearActivity]:
        now = self.clock.now()
        current_year = year_of(now)
        created_year = max(year_of(profile.created_at), 2008)
        stored = self.store.activity_years(login)
        fetched: list[YearActivity] = []
        for year in range(created_year, current_year + 1):
            have = stored.get(year)
            if have is not None and have.complete:
                continue
            payload = self.client.fetch_activity_year(login, year)
            fetched.append(YearActivity(
                login=login, year=year, commits=payload.commits,
                pull_requests=payload.pull_requests, issues=payload.issues,
                reviews=payload.reviews, complete=year < current_year,
            ))
        return fetched

    def _retire(self, login: str) -> ProcessOutcome:
        now = self.clock.now()
        with self.store.transaction():
            self.store.ensure_stubs([(login, None)], now)
            self.store.mark_retired(login, now)
        self._retired.add(login)
        self._queued.discard(login)
        self._emit("retire", login=login)
        return ProcessOutcome(updated=False, retired=True)

    # -- the loop -----------------------------------------------------------------

    def run_loop(
        self,
        stop_event: threading.Event | None = None,
        until_time: float | None = None,
        stop_when_idle: bool = False,
        batch_size: int = DEFAULT_BATCH_SIZE,
    ) -> RunReport:
        """Process due entries by priority until stopped, idle, or out of time.

        With several workers on a real clock, entries are claimed exclusively
        and processed concurrently; under a simulated clock processing is
        serialized so event logs stay deterministic.
        """
        report = RunReport()
        calls_before = self.client.api_calls
        if self.config.worker_count > 1 and not isinstance(self.clock, SimulatedClock):
            threads = [
                threading.Thread(
                    target=self._loop_body,
                    args=(report, stop_event, until_time, stop_when_idle, 1),
                    daemon=True)
                for _ in range(self.config.worker_count)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        else:
            self._loop_body(report, stop_event, until_time, stop_when_idle, batch_size)
        report.api_calls = self.client.api_calls - calls_before
        return report

    def _loop_body(self, report: RunReport, stop_event, until_time,
                   stop_when_idle, batch_size) -> None:
        while True:
            if stop_event is not None and stop_event.is_set():
                return
            now = self.clock.now()
            if until_time is not None and now >= until_time:
                return
            batch = self._claim_batch(now, batch_size)
            if not batch:
                nxt = self.store.earliest_due_at()
                if nxt is None or stop_when_idle:
                    return
                if until_time is not None and nxt >= until_time:
                    return
                self.clock.sleep(max(nxt - now, 0.0))
                continue
            try:
                for entry in batch:
                    if stop_event is not None and stop_event.is_set():
                        return
                    if until_time is not None and self.clock.now() >= until_time:
                        return
                    self._step(entry, report)
            finally:
                self._release(batch)

    def _claim_batch(self, now: float, batch_size: int):
        with self._claim_lock:
            candidates = self.store.due_entries(now, batch_size + len(self._claimed))
            batch = [e for e in candidates if e.login not in self._claimed][:batch_size]
            self._claimed.update(e.login for e in batch)
            return batch

    def _release(self, batch) -> None:
        with self._claim_lock:
            self._claimed.difference_update(e.login for e in batch)

    def _step(self, entry, report: RunReport) -> None:
        now = self.clock.now()
        user = self.store.get_user(entry.login)
        if user is not None and not user.is_stub and not is_stale(
                user, entry.active, now, self.config):
            interval = (self.config.active_refresh_interval if entry.active
                        else self.config.inactive_refresh_interval)
            # Staleness is strict (>), so an entry dequeued exactly at the
            # boundary is still fresh; push it just past the boundary or it
            # would stay due at this same instant forever.
            due = user.last_fetched_at + interval
            if due <= now:
                due = now + 1.0
            self.store.requeue(entry.login, due, entry.active, now)
            with self._report_lock:
                report.skipped_fresh += 1
            return
        try:
            outcome = self.process_user(entry.login)
        except sqlite3.OperationalError:
            # Store briefly unavailable; pause and leave the entry due.
            with self._report_lock:
                report.errors += 1
            self.clock.sleep(1.0)
            return
        with self._report_lock:
            if outcome.retired:
                report.retired += 1
            elif outcome.deferred:
                report.errors += 1
            else:
                report.users_processed += 1
                report.discovered += outcome.new_users_discovered

    # -- introspection ---------------------------------------------------------------

    def status(self) -> dict:
        now = self.clock.now()
        return {
            "queue_depth": self.store.queue_depth(),
            "due_now": self.store.due_count(now),
            "users_known": self.store.user_count(),
            "users_fetched": self.store.user_count(include_stubs=False),
            "retired": len(self._retired),
            "api_calls": self.client.api_calls,
        }
