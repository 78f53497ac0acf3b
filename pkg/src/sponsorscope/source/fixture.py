"""Deterministic provider backed by newline-delimited JSON files.

A fixture directory holds users.ndjson, edges.ndjson, and activity.ndjson.
Identical request sequences always get identical responses, which is what
makes scenario runs and replication tests reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from ..clock import Clock
from ..model import Direction
from .base import (
    ActivityPayload,
    EdgePage,
    InvalidCursorError,
    NotFoundError,
    ProfilePayload,
    ProviderResponse,
    SeedPage,
    YearOutOfRangeError,
)

DEFAULT_PAGE_SIZE = 100

USERS_FILE = "users.ndjson"
EDGES_FILE = "edges.ndjson"
ACTIVITY_FILE = "activity.ndjson"


def parse_timestamp(value) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    dt = datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_timestamp(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass
class FixtureData:
    """In-memory form of one fixture directory."""

    users: dict[str, dict] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)
    activity: dict[tuple[str, int], dict] = field(default_factory=dict)

    @classmethod
    def load(cls, directory: str | Path) -> "FixtureData":
        directory = Path(directory)
        data = cls()
        with open(directory / USERS_FILE, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    data.users[rec["login"]] = rec
        with open(directory / EDGES_FILE, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    data.edges.append((rec["sponsor_login"], rec["recipient_login"]))
        activity_path = directory / ACTIVITY_FILE
        if activity_path.exists():
            with open(activity_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        data.activity[(rec["login"], int(rec["year"]))] = rec
        return data

    def write(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / USERS_FILE, "w", encoding="utf-8") as fh:
            for login in sorted(self.users):
                fh.write(json.dumps(self.users[login], sort_keys=True, ensure_ascii=False) + "\n")
        with open(directory / EDGES_FILE, "w", encoding="utf-8") as fh:
            for sponsor, recipient in sorted(self.edges):
                fh.write(json.dumps(
                    {"sponsor_login": sponsor, "recipient_login": recipient},
                    sort_keys=True) + "\n")
        with open(directory / ACTIVITY_FILE, "w", encoding="utf-8") as fh:
            for key in sorted(self.activity):
                fh.write(json.dumps(self.activity[key], sort_keys=True) + "\n")

    def sponsorable_logins(self) -> list[str]:
        return sorted(l for l, rec in self.users.items() if rec.get("sponsorable"))


class FixtureProvider:
    """Pages, profiles, and activity served from a FixtureData snapshot."""

    def __init__(self, data: FixtureData | str | Path, clock: Clock,
                 page_size: int = DEFAULT_PAGE_SIZE):
        if not isinstance(data, FixtureData):
            data = FixtureData.load(data)
        if page_size < 1:
            raise ValueError("page_size must be >= 1")
        self._data = data
        self._clock = clock
        self._page_size = page_size
        self._seeds = data.sponsorable_logins()
        # Adjacency sorted for deterministic page contents.
        self._incoming: dict[str, list[tuple[str, str]]] = {}
        self._outgoing: dict[str, list[tuple[str, str]]] = {}
        for sponsor, recipient in sorted(data.edges):
            self._incoming.setdefault(recipient, []).append((sponsor, recipient))
            self._outgoing.setdefault(sponsor, []).append((sponsor, recipient))

    def _page_bounds(self, cursor: str | None, total: int) -> int:
        if cursor is None:
            return 0
        if not cursor.isdigit():
            raise InvalidCursorError(cursor)
        offset = int(cursor)
        if offset % self._page_size != 0 or offset >= max(total, 1):
            raise InvalidCursorError(cursor)
        return offset

    @staticmethod
    def _next_cursor(offset: int, total: int, size: int) -> str | None:
        nxt = offset + size
        return str(nxt) if nxt < total else None

    def list_sponsorable_page(self, cursor=None, token_id=None) -> ProviderResponse:
        offset = self._page_bounds(cursor, len(self._seeds))
        chunk = tuple(self._seeds[offset:offset + self._page_size])
        return ProviderResponse(
            SeedPage(chunk, self._next_cursor(offset, len(self._seeds), self._page_size))
        )

    def fetch_profile(self, login, token_id=None) -> ProviderResponse:
        rec = self._data.users.get(login)
        if rec is None:
            raise NotFoundError(login)
        return ProviderResponse(ProfilePayload(
            login=rec["login"],
            account_type=rec.get("account_type", "User"),
            display_name=rec.get("display_name"),
            location_raw=rec.get("location_raw"),
            pronouns_raw=rec.get("pronouns_raw"),
            sponsorable=bool(rec.get("sponsorable", False)),
            min_tier_cents=rec.get("min_tier_cents"),
            created_at=parse_timestamp(rec["created_at"]),
            sponsor_count=int(rec.get("sponsor_count", 0)),
            sponsoring_count=int(rec.get("sponsoring_count", 0)),
        ))

    def fetch_sponsor_edges_page(self, login, direction, cursor=None,
                                 token_id=None) -> ProviderResponse:
        if login not in self._data.users:
            raise NotFoundError(login)
        if direction is Direction.SPONSORS_OF:
            rows = self._incoming.get(login, [])
        else:
            rows = self._outgoing.get(login, [])
        offset = self._page_bounds(cursor, len(rows))
        chunk = tuple(rows[offset:offset + self._page_size])
        return ProviderResponse(EdgePage(
            chunk, self._next_cursor(offset, len(rows), self._page_size), direction
        ))

    def fetch_activity_year(self, login, year, token_id=None) -> ProviderResponse:
        rec = self._data.users.get(login)
        if rec is None:
            raise NotFoundError(login)
        created_year = datetime.fromtimestamp(
            parse_timestamp(rec["created_at"]), tz=timezone.utc).year
        now_year = datetime.fromtimestamp(self._clock.now(), tz=timezone.utc).year
        if year < created_year or year > now_year:
            raise YearOutOfRangeError(f"{login}: year {year} outside [{created_year}, {now_year}]")
        entry = self._data.activity.get((login, year), {})
        return ProviderResponse(ActivityPayload(
            login=login,
            year=year,
            commits=int(entry.get("commits", 0)),
            pull_requests=int(entry.get("pull_requests", 0)),
            issues=int(entry.get("issues", 0)),
            reviews=int(entry.get("reviews", 0)),
        ))
