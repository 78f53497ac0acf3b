"""Persistent data-access layer: users, edges, activity, queue, snapshots.

Backed by a single-file SQLite database in WAL mode. Writers run inside
explicit transactions guarded by a re-entrant lock, so a whole per-user
update commits or rolls back as one unit; readers (the API) open their own
read-only connections and never block ingest.

Snapshots are tagged logical copies: rows copied into snapshot_* tables keyed
by a monotonically increasing snapshot_id, queryable and exportable forever
regardless of later ingest writes.
"""

from __future__ import annotations

import os
import sqlite3
import threading
from contextlib import contextmanager
from importlib import resources

from .geocode import CachedResolution
from .model import (
    AccountType,
    Direction,
    GeoResolution,
    PronounCategory,
    QualityFlag,
    QueueEntry,
    Role,
    SnapshotMeta,
    UserRecord,
    YearActivity,
    validate_user_record,
    validate_year_activity,
)
from .query import UserQuery

COLLECTOR_VERSION = "0.1.0"


class StoreError(Exception):
    pass


class RejectedRecordError(StoreError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class ImmutabilityError(StoreError):
    """Attempted overwrite of a complete (frozen) activity year."""


class SnapshotNotFoundError(StoreError):
    pass


def resolve_database_path(database_url: str | None = None) -> str:
    url = database_url or os.environ.get("DATABASE_URL") or "sponsorscope.db"
    if url.startswith("sqlite:///"):
        url = url[len("sqlite:///"):]
    elif url.startswith("sqlite://"):
        url = url[len("sqlite://"):]
    return url or ":memory:"


_USER_COLUMNS = (
    "login", "account_type", "display_name", "location_raw", "location_outcome",
    "geo_country", "geo_importance", "geo_resolved_from", "geo_resolved_at",
    "pronouns_raw", "pronoun_category", "sponsor_count", "sponsoring_count",
    "sponsorable", "min_tier_cents", "created_at", "first_seen_at",
    "last_fetched_at", "quality_flag", "is_stub", "retired", "discovered_via",
)


def _row_to_user(row: sqlite3.Row) -> UserRecord:
    geo = None
    if row["geo_country"] is not None:
        geo = GeoResolution(
            country=row["geo_country"],
            importance=row["geo_importance"],
            resolved_from=row["geo_resolved_from"],
            resolved_at=row["geo_resolved_at"],
        )
    return UserRecord(
        login=row["login"],
        account_type=AccountType(row["account_type"]) if row["account_type"] else None,
        display_name=row["display_name"],
        location_raw=row["location_raw"],
        geo=geo,
        pronouns_raw=row["pronouns_raw"],
        pronoun_category=PronounCategory(row["pronoun_category"]),
        sponsor_count=row["sponsor_count"],
        sponsoring_count=row["sponsoring_count"],
        sponsorable=bool(row["sponsorable"]),
        min_tier_cents=row["min_tier_cents"],
        created_at=row["created_at"],
        first_seen_at=row["first_seen_at"],
        last_fetched_at=row["last_fetched_at"],
        quality_flag=QualityFlag(row["quality_flag"]),
        is_stub=bool(row["is_stub"]),
        retired=bool(row["retired"]),
        discovered_via=row["discovered_via"],
    )


class Store:
    def __init__(self, database_url: str | None = None, read_only: bool = False):
        self.path = resolve_database_path(database_url)
        self._read_only = read_only
        self._lock = threading.RLock()
        self._tx_depth = 0
        self.commit_hook = None  # test hook: callable invoked just before commit

        if read_only:
            uri = f"file:{self.path}?mode=ro"
            self._conn = sqlite3.connect(uri, uri=True, check_same_thread=False)
        else:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.isolation_level = None  # explicit transaction control
        cur = self._conn.execute("PRAGMA journal_mode=WAL")
        cur.fetchone()
        self._conn.execute("PRAGMA busy_timeout=10000")
        if not read_only:
            self._conn.execute("PRAGMA synchronous=NORMAL")
            self._migrate()

    # -- lifecycle ------------------------------------------------------------

    def _migrate(self) -> None:
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS schema_migrations (name TEXT PRIMARY KEY)"
        )
        applied = {r["name"] for r in self._conn.execute("SELECT name FROM schema_migrations")}
        migration_dir = resources.files("sponsorscope.migrations")
        names = sorted(
            entry.name for entry in migration_dir.iterdir() if entry.name.endswith(".sql")
        )
        for name in names:
            if name in applied:
                continue
            sql = migration_dir.joinpath(name).read_text("utf-8")
            # executescript() force-commits, so apply statement by statement to
            # keep each migration atomic with its version bookkeeping.
            statements = [s.strip() for s in sql.split(";") if s.strip()]
            with self.transaction():
                for statement in statements:
                    self._conn.execute(statement)
                self._conn.execute("INSERT INTO schema_migrations (name) VALUES (?)", (name,))

    def close(self) -> None:
        # An open transaction (crash simulation) rolls back on close.
        try:
            if self._conn.in_transaction:
                self._conn.execute("ROLLBACK")
        except sqlite3.Error:
            pass
        self._conn.close()

    @contextmanager
    def transaction(self):
        """Re-entrant write transaction; outermost scope commits or rolls back."""
        with self._lock:
            outer = self._tx_depth == 0
            if outer:
                self._conn.execute("BEGIN IMMEDIATE")
            self._tx_depth += 1
            try:
                yield self._conn
            except BaseException:
                self._tx_depth -= 1
                if outer:
                    self._conn.execute("ROLLBACK")
                raise
            else:
                self._tx_depth -= 1
                if outer:
                    if self.commit_hook is not None:
                        self.commit_hook()
                    self._conn.execute("COMMIT")

    # -- users ----------------------------------------------------------------

    def upsert_user(self, record: UserRecord,
                    location_outcome: str | None = None) -> UserRecord:
        violations = validate_user_record(record)
        if violations:
            raise RejectedRecordError(violations)
        geo = record.geo
        params = {
            "login": record.login,
            "account_type": record.account_type.value if record.account_type else None,
            "display_name": record.display_name,
            "location_raw": record.location_raw,
            "location_outcome": location_outcome,
            "geo_country": geo.country if geo else None,
            "geo_importance": geo.importance if geo else None,
            "geo_resolved_from": geo.resolved_from if geo else None,
            "geo_resolved_at": geo.resolved_at if geo else None,
            "pronouns_raw": record.pronouns_raw,
            "pronoun_category": record.pronoun_category.value,
            "sponsor_count": record.sponsor_count,
            "sponsoring_count": record.sponsoring_count,
            "sponsorable": int(record.sponsorable),
            "min_tier_cents": record.min_tier_cents,
            "created_at": record.created_at,
            "first_seen_at": record.first_seen_at,
            "last_fetched_at": record.last_fetched_at,
            "quality_flag": record.quality_flag.value,
            "is_stub": int(record.is_stub),
            "retired": int(record.retired),
            "discovered_via": record.discovered_via,
        }
        with self.transaction():
            self._conn.execute(
                f"""
                INSERT INTO users ({", ".join(params)})
                VALUES ({", ".join(":" + c for c in params)})
                ON CONFLICT(login) DO UPDATE SET
                    account_type=excluded.account_type,
                    display_name=excluded.display_name,
                    location_raw=excluded.location_raw,
                    location_outcome=excluded.location_outcome,
                    geo_country=excluded.geo_country,
                    geo_importance=excluded.geo_importance,
                    geo_resolved_from=excluded.geo_resolved_from,
                    geo_resolved_at=excluded.geo_resolved_at,
                    pronouns_raw=excluded.pronouns_raw,
                    pronoun_category=excluded.pronoun_category,
                    sponsor_count=excluded.sponsor_count,
                    sponsoring_count=excluded.sponsoring_count,
                    sponsorable=excluded.sponsorable,
                    min_tier_cents=excluded.min_tier_cents,
                    created_at=excluded.created_at,
                    last_fetched_at=excluded.last_fetched_at,
                    quality_flag=excluded.quality_flag,
                    is_stub=excluded.is_stub,
                    retired=excluded.retired,
                    discovered_via=COALESCE(excluded.discovered_via, users.discovered_via)
                """,
                params,
            )
        return self.get_user(record.login)

    def get_user(self, login: str) -> UserRecord | None:
        row = self._conn.execute("SELECT * FROM users WHERE login=?", (login,)).fetchone()
        return _row_to_user(row) if row else None

    def has_user(self, login: str) -> bool:
        return self._conn.execute(
            "SELECT 1 FROM users WHERE login=?", (login,)).fetchone() is not None

    def ensure_stubs(self, logins: list[tuple[str, str | None]], now: float) -> None:
        """Insert provenance-marked placeholder records for unseen logins."""
        if not logins:
            return
        with self.transaction():
            self._conn.executemany(
                """
                INSERT INTO users (login, first_seen_at, is_stub, discovered_via)
                VALUES (?, ?, 1, ?) ON CONFLICT(login) DO NOTHING
                """,
                [(login, now, via) for login, via in logins],
            )

    def mark_retired(self, login: str, now: float) -> None:
        with self.transaction():
            self._conn.execute("UPDATE users SET retired=1 WHERE login=?", (login,))
            self._conn.execute("DELETE FROM queue WHERE login=?", (login,))
            self._conn.execute(
                """
                UPDATE edges SET ended_at=?
                WHERE (sponsor_login=? OR recipient_login=?) AND ended_at IS NULL
                """,
                (now, login, login),
            )

    def user_count(self, include_stubs: bool = True) -> int:
        if include_stubs:
            return self._conn.execute("SELECT COUNT(*) FROM users").fetchone()[0]
        return self._conn.execute(
            "SELECT COUNT(*) FROM users WHERE is_stub=0 AND retired=0").fetchone()[0]

    def all_logins(self) -> set[str]:
        return {r[0] for r in self._conn.execute("SELECT login FROM users")}

    def retired_logins(self) -> set[str]:
        return {r[0] for r in self._conn.execute("SELECT login FROM users WHERE retired=1")}

    # -- edges ----------------------------------------------------------------

    def live_edge_pairs(self, login: str, direction: Direction) -> set[tuple[str, str]]:
        if direction is Direction.SPONSORS_OF:
            rows = self._conn.execute(
                "SELECT sponsor_login, recipient_login FROM edges "
                "WHERE recipient_login=? AND ended_at IS NULL", (login,))
        else:
            rows = self._conn.execute(
                "SELECT sponsor_login, recipient_login FROM edges "
                "WHERE sponsor_login=? AND ended_at IS NULL", (login,))
        return {(r[0], r[1]) for r in rows}

    def live_degree(self, login: str) -> tuple[int, int]:
        incoming = self._conn.execute(
            "SELECT COUNT(*) FROM edges WHERE recipient_login=? AND ended_at IS NULL",
            (login,)).fetchone()[0]
        outgoing = self._conn.execute(
            "SELECT COUNT(*) FROM edges WHERE sponsor_login=? AND ended_at IS NULL",
            (login,)).fetchone()[0]
        return incoming, outgoing

    def live_edge_count(self) -> int:
        return self._conn.execute(
            "SELECT COUNT(*) FROM edges WHERE ended_at IS NULL").fetchone()[0]

    def sync_sponsorship_edges(
        self, login: str, direction: Direction,
        observed: set[tuple[str, str]], now: float,
    ) -> tuple[int, int]:
        """Transactional diff of the live edge set for one endpoint+direction.

        Vanished edges get ended_at, new edges get first_seen_at, persisting
        edges get a last_seen_at touch. Replaying the same observation is a
        no-op. Every referenced endpoint is guaranteed a user row.
        """
        for sponsor, recipient in observed:
            if sponsor == recipient:
                raise StoreError(f"self-sponsorship rejected: {sponsor}")
            anchor = recipient if direction is Direction.SPONSORS_OF else sponsor
            if anchor != login:
                raise StoreError(
                    f"edge ({sponsor} -> {recipient}) not incident to {login} "
                    f"in direction {direction.value}")

        with self.transaction():
            current = self.live_edge_pairs(login, direction)
            to_add = observed - current
            to_end = current - observed
            to_touch = observed & current
            if to_add:
                endpoints = [(s, login) for s, _ in to_add] if direction is Direction.SPONSORS_OF \
                    else [(r, login) for _, r in to_add]
                endpoints.append((login, None))
                self.ensure_stubs(endpoints, now)
                self._conn.executemany(
                    "INSERT INTO edges (sponsor_login, recipient_login, first_seen_at, "
                    "last_seen_at) VALUES (?, ?, ?, ?)",
                    [(s, r, now, now) for s, r in sorted(to_add)],
                )
            if to_end:
                self._conn.executemany(
                    "UPDATE edges SET ended_at=? WHERE sponsor_login=? AND recipient_login=? "
                    "AND ended_at IS NULL",
                    [(now, s, r) for s, r in sorted(to_end)],
                )
            if to_touch:
                self._conn.executemany(
                    "UPDATE edges SET last_seen_at=? WHERE sponsor_login=? AND recipient_login=? "
                    "AND ended_at IS NULL",
                    [(now, s, r) for s, r in sorted(to_touch)],
                )
        return len(to_add), len(to_end)

    # -- activity ---------------------------------------------------------------

    def record_activity_year(self, entry: YearActivity) -> None:
        violations = validate_year_activity(entry)
        if violations:
            raise RejectedRecordError(violations)
        with self.transaction():
            row = self._conn.execute(
                "SELECT complete FROM activity WHERE login=? AND year=?",
                (entry.login, entry.year)).fetchone()
            if row is not None and row["complete"]:
                raise ImmutabilityError(
                    f"activity ({entry.login}, {entry.year}) is complete and immutable")
            self._conn.execute(
                "INSERT OR REPLACE INTO activity "
                "(login, year, commits, pull_requests, issues, reviews, complete) "
                "VALUES (?, ?, ?, ?, ?, ?, ?)",
                (entry.login, entry.year, entry.commits, entry.pull_requests,
                 entry.issues, entry.reviews, int(entry.complete)),
            )

    def activity_years(self, login: str) -> dict[int, YearActivity]:
        rows = self._conn.execute("SELECT * FROM activity WHERE login=?", (login,))
        return {
            r["year"]: YearActivity(
                login=login, year=r["year"], commits=r["commits"],
                pull_requests=r["pull_requests"], issues=r["issues"],
                reviews=r["reviews"], complete=bool(r["complete"]))
            for r in rows
        }

    # -- queue ----------------------------------------------------------------

    def enqueue_if_absent(self, login: str, due_at: float, active: bool,
                          enqueued_at: float, discovered_via: str | None = None) -> bool:
        with self.transaction():
            cur = self._conn.execute(
                "INSERT INTO queue (login, due_at, active, discovered_via, enqueued_at) "
                "VALUES (?, ?, ?, ?, ?) ON CONFLICT(login) DO NOTHING",
                (login, due_at, int(active), discovered_via, enqueued_at),
            )
            return cur.rowcount > 0

    def requeue(self, login: str, due_at: float, active: bool, enqueued_at: float) -> None:
        with self.transaction():
            self._conn.execute(
                "INSERT INTO queue (login, due_at, active, enqueued_at) VALUES (?, ?, ?, ?) "
                "ON CONFLICT(login) DO UPDATE SET due_at=excluded.due_at, "
                "active=excluded.active, enqueued_at=excluded.enqueued_at",
                (login, due_at, int(active), enqueued_at),
            )

    def remove_queue_entry(self, login: str) -> None:
        with self.transaction():
            self._conn.execute("DELETE FROM queue WHERE login=?", (login,))

    def due_entries(self, now: float, limit: int) -> list[QueueEntry]:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        rows = self._conn.execute(
            "SELECT * FROM queue WHERE due_at <= ? "
            "ORDER BY active DESC, due_at ASC, login ASC LIMIT ?",
            (now, limit),
        )
        return [
            QueueEntry(login=r["login"], due_at=r["due_at"], active=bool(r["active"]),
                       enqueued_at=r["enqueued_at"], discovered_via=r["discovered_via"])
            for r in rows
        ]

    def earliest_due_at(self) -> float | None:
        row = self._conn.execute("SELECT MIN(due_at) FROM queue").fetchone()
        return row[0]

    def queue_depth(self) -> int:
        return self._conn.execute("SELECT COUNT(*) FROM queue").fetchone()[0]

    def due_count(self, now: float) -> int:
        return self._conn.execute(
            "SELECT COUNT(*) FROM queue WHERE due_at <= ?", (now,)).fetchone()[0]

    def queued_logins(self) -> set[str]:
        return {r[0] for r in self._conn.execute("SELECT login FROM queue")}

    # -- geocode cache ----------------------------------------------------------

    def geocode_cache_get(self, query: str) -> CachedResolution | None:
        row = self._conn.execute(
            "SELECT outcome, country, importance, resolved_at FROM geocode_cache WHERE query=?",
            (query,)).fetchone()
        if row is None:
            return None
        return CachedResolution(row["outcome"], row["country"], row["importance"],
                                row["resolved_at"])

    def geocode_cache_put(self, query: str, entry: CachedResolution) -> None:
        with self.transaction():
            self._conn.execute(
                "INSERT OR REPLACE INTO geocode_cache "
                "(query, outcome, country, importance, resolved_at) VALUES (?, ?, ?, ?, ?)",
                (query, entry.outcome, entry.country, entry.importance, entry.resolved_at),
            )

    # -- snapshots ----------------------------------------------------------------

    def create_snapshot(self, now: float,
                        collector_version: str = COLLECTOR_VERSION) -> SnapshotMeta:
        with self.transaction():
            user_count = self._conn.execute("SELECT COUNT(*) FROM users").fetchone()[0]
            edge_count = self.live_edge_count()
            cur = self._conn.execute(
                "INSERT INTO snapshots (created_at, user_count, edge_count, collector_version) "
                "VALUES (?, ?, ?, ?)",
                (now, user_count, edge_count, collector_version),
            )
            snapshot_id = cur.lastrowid
            cols = ", ".join(_USER_COLUMNS)
            self._conn.execute(
                f"INSERT INTO snapshot_users (snapshot_id, {cols}) "
                f"SELECT ?, {cols} FROM users", (snapshot_id,))
            self._conn.execute(
                "INSERT INTO snapshot_edges (snapshot_id, sponsor_login, recipient_login, "
                "first_seen_at, last_seen_at, ended_at) "
                "SELECT ?, sponsor_login, recipient_login, first_seen_at, last_seen_at, ended_at "
                "FROM edges", (snapshot_id,))
            self._conn.execute(
                "INSERT INTO snapshot_activity (snapshot_id, login, year, commits, "
                "pull_requests, issues, reviews, complete) "
                "SELECT ?, login, year, commits, pull_requests, issues, reviews, complete "
                "FROM activity", (snapshot_id,))
            return SnapshotMeta(snapshot_id, now, user_count, edge_count, collector_version)

    def list_snapshots(self) -> list[SnapshotMeta]:
        rows = self._conn.execute("SELECT * FROM snapshots ORDER BY snapshot_id")
        return [
            SnapshotMeta(r["snapshot_id"], r["created_at"], r["user_count"],
                         r["edge_count"], r["collector_version"])
            for r in rows
        ]

    def snapshot_meta(self, snapshot_id: int) -> SnapshotMeta:
        row = self._conn.execute(
            "SELECT * FROM snapshots WHERE snapshot_id=?", (snapshot_id,)).fetchone()
        if row is None:
            raise SnapshotNotFoundError(str(snapshot_id))
        return SnapshotMeta(row["snapshot_id"], row["created_at"], row["user_count"],
                            row["edge_count"], row["collector_version"])

    # -- filtered queries (API + export) ------------------------------------------

    def _table_refs(self, snapshot_id: int | None) -> tuple[str, str, str, list]:
        if snapshot_id is None:
            return "users", "edges", "activity", []
        self.snapshot_meta(snapshot_id)  # raises if missing
        return (
            f"(SELECT * FROM snapshot_users WHERE snapshot_id={int(snapshot_id)})",
            f"(SELECT * FROM snapshot_edges WHERE snapshot_id={int(snapshot_id)})",
            f"(SELECT * FROM snapshot_activity WHERE snapshot_id={int(snapshot_id)})",
            [],
        )

    def _query_sql(self, q: UserQuery, snapshot_id: int | None) -> tuple[str, str, list]:
        users_t, edges_t, activity_t, params = self._table_refs(snapshot_id)
        where = ["u.is_stub = 0", "u.retired = 0"]
        args: list = []
        if q.country is not None:
            where.append("u.geo_country = ?")
            args.append(q.country)
        if q.account_type is not None:
            where.append("u.account_type = ?")
            args.append(q.account_type.value)
        if q.pronoun_category is not None:
            where.append("u.pronoun_category = ?")
            args.append(q.pronoun_category.value)
        if q.quality_flag is not None:
            where.append("u.quality_flag = ?")
            args.append(q.quality_flag.value)
        if q.min_sponsors is not None:
            where.append("u.sponsor_count >= ?")
            args.append(q.min_sponsors)
        if q.role is not None:
            has_in = (f"EXISTS (SELECT 1 FROM {edges_t} e WHERE e.recipient_login = u.login "
                      "AND e.ended_at IS NULL)")
            has_out = (f"EXISTS (SELECT 1 FROM {edges_t} e WHERE e.sponsor_login = u.login "
                       "AND e.ended_at IS NULL)")
            if q.role is Role.SPONSORED:
                where.append(f"{has_in} AND NOT {has_out}")
            elif q.role is Role.SPONSORING:
                where.append(f"{has_out} AND NOT {has_in}")
            else:
                where.append(f"{has_in} AND {has_out}")
        base = (
            f"FROM {users_t} u LEFT JOIN (SELECT login, SUM(commits) AS commits_total, "
            "SUM(pull_requests) AS pull_requests_total, SUM(issues) AS issues_total, "
            f"SUM(reviews) AS reviews_total FROM {activity_t} GROUP BY login) a "
            "ON a.login = u.login WHERE " + " AND ".join(where)
        )
        sort_exprs = {
            "sponsor_count": "u.sponsor_count",
            "sponsoring_count": "u.sponsoring_count",
            "estimated_earnings": "(u.min_tier_cents * u.sponsor_count)",
            "login": "u.login",
            "last_fetched_at": "u.last_fetched_at",
        }
        expr = sort_exprs[q.sort_by]
        direction = "ASC" if q.sort_dir == "asc" else "DESC"
        order = f"ORDER BY ({expr} IS NULL) ASC, {expr} {direction}, u.login ASC"
        return base, order, params + args

    def query_users(self, q: UserQuery, snapshot_id: int | None = None) -> tuple[list[dict], int]:
        """One page of filtered users plus the unpaginated match count."""
        base, order, args = self._query_sql(q, snapshot_id)
        total = self._conn.execute(f"SELECT COUNT(*) {base}", args).fetchone()[0]
        offset = (q.page - 1) * q.page_size
        rows = self._conn.execute(
            f"SELECT u.*, a.commits_total, a.pull_requests_total, a.issues_total, "
            f"a.reviews_total {base} {order} LIMIT ? OFFSET ?",
            args + [q.page_size, offset],
        ).fetchall()
        return [dict(r) for r in rows], total

    def iter_query_users(self, q: UserQuery, snapshot_id: int | None = None):
        """Every matching row in stable order (export path, unpaginated)."""
        base, order, args = self._query_sql(q, snapshot_id)
        cursor = self._conn.execute(
            f"SELECT u.*, a.commits_total, a.pull_requests_total, a.issues_total, "
            f"a.reviews_total {base} {order}",
            args,
        )
        for row in cursor:
            yield dict(row)

    def user_export_row(self, login: str, snapshot_id: int | None = None) -> dict | None:
        """One user's row in the same shape query_users produces."""
        users_t, edges_t, activity_t, params = self._table_refs(snapshot_id)
        row = self._conn.execute(
            f"SELECT u.*, a.commits_total, a.pull_requests_total, a.issues_total, "
            f"a.reviews_total, "
            f"EXISTS (SELECT 1 FROM {edges_t} e WHERE e.recipient_login=u.login AND "
            "e.ended_at IS NULL) AS has_incoming, "
            f"EXISTS (SELECT 1 FROM {edges_t} e WHERE e.sponsor_login=u.login AND "
            "e.ended_at IS NULL) AS has_outgoing "
            f"FROM {users_t} u LEFT JOIN (SELECT login, SUM(commits) AS commits_total, "
            "SUM(pull_requests) AS pull_requests_total, SUM(issues) AS issues_total, "
            f"SUM(reviews) AS reviews_total FROM {activity_t} GROUP BY login) a "
            "ON a.login = u.login WHERE u.login = ? AND u.is_stub = 0 AND u.retired = 0",
            params + [login],
        ).fetchone()
        return dict(row) if row else None

    # -- analytics inputs ------------------------------------------------------------

    def census_rows(self, snapshot_id: int | None = None) -> list[sqlite3.Row]:
        users_t, _, _, params = self._table_refs(snapshot_id)
        return self._conn.execute(
            f"SELECT login, account_type, geo_country, pronoun_category, quality_flag, "
            f"location_outcome FROM {users_t} WHERE is_stub=0 AND retired=0", params
        ).fetchall()

    def live_endpoint_sets(self, snapshot_id: int | None = None) -> tuple[set[str], set[str]]:
        _, edges_t, _, params = self._table_refs(snapshot_id)
        recipients = {r[0] for r in self._conn.execute(
            f"SELECT DISTINCT recipient_login FROM {edges_t} WHERE ended_at IS NULL", params)}
        sponsors = {r[0] for r in self._conn.execute(
            f"SELECT DISTINCT sponsor_login FROM {edges_t} WHERE ended_at IS NULL", params)}
        return recipients, sponsors

    def funded_peer_values(self, metric: str, snapshot_id: int | None = None) -> list[int]:
        """Sorted metric values over funded users (role Sponsored or Both)."""
        users_t, edges_t, activity_t, params = self._table_refs(snapshot_id)
        metric_exprs = {
            "sponsor_count": "u.sponsor_count",
            "commits_total": "COALESCE(a.commits_total, 0)",
            "estimated_earnings": "COALESCE(u.min_tier_cents * u.sponsor_count, 0)",
        }
        expr = metric_exprs[metric]
        rows = self._conn.execute(
            f"SELECT {expr} FROM {users_t} u "
            f"LEFT JOIN (SELECT login, SUM(commits) AS commits_total FROM {activity_t} "
            "GROUP BY login) a ON a.login = u.login "
            "WHERE u.is_stub=0 AND u.retired=0 AND EXISTS "
            f"(SELECT 1 FROM {edges_t} e WHERE e.recipient_login=u.login AND e.ended_at IS NULL)",
            params,
        )
        return sorted(r[0] for r in rows)

    # -- integrity ----------------------------------------------------------------

    def integrity_violations(self) -> list[str]:
        problems: list[str] = []
        row = self._conn.execute("PRAGMA integrity_check").fetchone()
        if row[0] != "ok":
            problems.append(f"sqlite integrity: {row[0]}")
        dup = self._conn.execute(
            "SELECT sponsor_login, recipient_login, COUNT(*) FROM edges "
            "WHERE ended_at IS NULL GROUP BY 1, 2 HAVING COUNT(*) > 1").fetchall()
        if dup:
            problems.append(f"duplicate live edges: {len(dup)}")
        orphan = self._conn.execute(
            "SELECT COUNT(*) FROM edges e WHERE NOT EXISTS "
            "(SELECT 1 FROM users u WHERE u.login = e.sponsor_login) OR NOT EXISTS "
            "(SELECT 1 FROM users u WHERE u.login = e.recipient_login)").fetchone()[0]
        if orphan:
            problems.append(f"edges with missing endpoints: {orphan}")
        bad_queue = self._conn.execute(
            "SELECT COUNT(*) FROM queue q JOIN users u ON u.login = q.login "
            "WHERE u.retired = 1").fetchone()[0]
        if bad_queue:
            problems.append(f"retired users still queued: {bad_queue}")
        return problems


class StoreGeocodeCache:
    """Persistent geocode cache with a read-through in-memory layer.

    Values for a key never change (resolution is deterministic), so
    last-writer-wins between concurrent writers is harmless.
    """

    def __init__(self, store: Store):
        self._store = store
        self._mem: dict[str, CachedResolution] = {}

    def get(self, query: str) -> CachedResolution | None:
        hit = self._mem.get(query)
        if hit is not None:
            return hit
        hit = self._store.geocode_cache_get(query)
        if hit is not None:
            self._mem[query] = hit
        return hit

    def put(self, query: str, entry: CachedResolution) -> None:
        self._store.geocode_cache_put(query, entry)
        self._mem[query] = entry
