"""HTTP interface: filtered user queries, statistics, CSV export, snapshots.

Read-only by design; every request runs against one read view of the store.
Validation is strict and structured: malformed input gets a 400-class JSON
body of shape {error, field, message} naming the offending field, and unknown
query parameters are rejected rather than ignored.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import asdict

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from . import analytics
from .clock import Clock, RealClock
from .export import (
    CSV_COLUMNS,
    UnknownColumnError,
    earnings_usd,
    stream_csv,
    validate_columns,
)
from .model import role_from_degrees
from .query import QueryValidationError, parse_user_query
from .source.fixture import format_timestamp
from .store import SnapshotNotFoundError, Store

STATS_GROUPINGS = ("type", "country", "benchmark")
DEFAULT_COUNTRY_TOP_N = 6


class ApiError(Exception):
    def __init__(self, status: int, field: str, message: str):
        super().__init__(message)
        self.status = status
        self.field = field
        self.message = message


class StoreHandle:
    """Serves read views: a shared in-process store (tests, embedded use) or a
    fresh read-only connection per request (served deployments)."""

    def __init__(self, shared: Store | None = None, database_url: str | None = None):
        if shared is None and database_url is None:
            raise ValueError("need a store or a database url")
        self._shared = shared
        self._database_url = database_url
        self._lock = threading.Lock()

    @contextmanager
    def read(self):
        if self._shared is not None:
            with self._lock:
                yield self._shared
            return
        store = Store(self._database_url, read_only=True)
        try:
            yield store
        finally:
            store.close()


def _check_params(request: Request, allowed: set[str]) -> dict[str, str]:
    params = {}
    for key in request.query_params:
        if key not in allowed:
            raise ApiError(400, key, "unknown query parameter")
        params[key] = request.query_params[key]
    return params


def _parse_snapshot_id(params: dict[str, str]) -> int | None:
    raw = params.pop("snapshot_id", None)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ApiError(400, "snapshot_id", f"not an integer: {raw!r}") from None


def _user_json(row: dict) -> dict:
    earnings = earnings_usd(row["min_tier_cents"], row["sponsor_count"])
    return {
        "login": row["login"],
        "account_type": row["account_type"],
        "display_name": row["display_name"],
        "location_raw": row["location_raw"],
        "country": row["geo_country"],
        "geocode_importance": row["geo_importance"],
        "pronoun_category": row["pronoun_category"],
        "sponsorable": bool(row["sponsorable"]),
        "sponsor_count": row["sponsor_count"],
        "sponsoring_count": row["sponsoring_count"],
        "min_tier_usd": (row["min_tier_cents"] / 100
                         if row["min_tier_cents"] is not None else None),
        "estimated_monthly_earnings_usd": earnings,
        "commits_total": row["commits_total"] or 0,
        "pull_requests_total": row["pull_requests_total"] or 0,
        "issues_total": row["issues_total"] or 0,
        "reviews_total": row["reviews_total"] or 0,
        "created_at": format_timestamp(row["created_at"]) if row["created_at"] else None,
        "first_seen_at": format_timestamp(row["first_seen_at"]),
        "last_fetched_at": (format_timestamp(row["last_fetched_at"])
                            if row["last_fetched_at"] else None),
        "quality_flag": row["quality_flag"],
    }


def _provenance(snapshot_id: int | None) -> str:
    return "live" if snapshot_id is None else f"snapshot:{snapshot_id}"


def create_app(store: Store | None = None, database_url: str | None = None,
               clock: Clock | None = None) -> FastAPI:
    app = FastAPI(title="sponsorscope", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET"], allow_headers=["*"])
    handle = StoreHandle(shared=store, database_url=database_url)
    app_clock = clock or RealClock()

    @app.exception_handler(ApiError)
    async def _api_error(request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": "validation_error" if exc.status == 400 else "not_found",
                     "field": exc.field, "message": exc.message},
        )

    @app.get("/api/health")
    def health():
        with handle.read() as s:
            return {"status": "ok", "users_known": s.user_count(),
                    "generated_at": format_timestamp(app_clock.now())}

    @app.get("/api/users")
    def list_users(request: Request):
        params = _check_params(request, {
            "country", "account_type", "role", "pronoun_category", "quality_flag",
            "min_sponsors", "sort_by", "sort_dir", "page", "page_size", "snapshot_id"})
        snapshot_id = _parse_snapshot_id(params)
        try:
            query = parse_user_query(params)
        except QueryValidationError as exc:
            raise ApiError(400, exc.field, exc.message) from None
        with handle.read() as s:
            try:
                rows, total = s.query_users(query, snapshot_id)
            except SnapshotNotFoundError as exc:
                raise ApiError(404, "snapshot_id", f"no snapshot {exc}") from None
        return {
            "items": [_user_json(r) for r in rows],
            "total_matching": total,
            "page": query.page,
            "page_size": query.page_size,
            "earnings_lower_bound": True,
            "provenance": _provenance(snapshot_id),
        }

    @app.get("/api/stats")
    def get_stats(request: Request):
        params = _check_params(request, {"group_by", "top_n", "login", "snapshot_id"})
        snapshot_id = _parse_snapshot_id(params)
        group_by = params.get("group_by")
        if group_by not in STATS_GROUPINGS:
            raise ApiError(400, "group_by",
                           f"expected one of: {', '.join(STATS_GROUPINGS)}")
        generated_at = format_timestamp(app_clock.now())
        base = {"group_by": group_by, "provenance": _provenance(snapshot_id),
                "generated_at": generated_at}
        with handle.read() as s:
            try:
                if group_by == "type":
                    rows = analytics.participation_by_type(s, snapshot_id)
                    ratio = analytics.sponsoring_sponsored_ratio(rows)
                    body = {**base, "rows": [asdict(r) for r in rows]}
                    if ratio is not None:
                        body["sponsoring_to_sponsored_ratio"] = ratio[0]
                        body["ratio_display"] = ratio[1]
                    return body
                if group_by == "country":
                    top_n = int(params.get("top_n", DEFAULT_COUNTRY_TOP_N))
                    if top_n < 1:
                        raise ApiError(400, "top_n", "must be >= 1")
                    rows = analytics.participation_by_country(s, top_n, snapshot_id)
                    return {**base, "rows": [asdict(r) for r in rows]}
                return {**base, **_benchmark(s, params, snapshot_id)}
            except SnapshotNotFoundError as exc:
                raise ApiError(404, "snapshot_id", f"no snapshot {exc}") from None
            except ValueError as exc:
                raise ApiError(400, "top_n", str(exc)) from None

    def _benchmark(s: Store, params: dict, snapshot_id: int | None) -> dict:
        login = params.get("login")
        if not login:
            raise ApiError(400, "login", "benchmark grouping needs login=<account>")
        row = s.user_export_row(login, snapshot_id)
        if row is None:
            raise ApiError(404, "login", f"unknown account {login!r}")
        peers_sponsors = s.funded_peer_values("sponsor_count", snapshot_id)
        peers_commits = s.funded_peer_values("commits_total", snapshot_id)
        peers_earnings = s.funded_peer_values("estimated_earnings", snapshot_id)
        earnings_cents = (row["min_tier_cents"] or 0) * row["sponsor_count"]
        commits = row["commits_total"] or 0
        return {
            "login": login,
            "role": role_from_degrees(row["has_incoming"], row["has_outgoing"]).value,
            "peer_count": len(peers_sponsors),
            "peer_definition": "role in {Sponsored, Both}",
            "earnings_lower_bound": True,
            "metrics": {
                "sponsor_count": {
                    "value": row["sponsor_count"],
                    "percentile": analytics.percentile_rank(
                        peers_sponsors, row["sponsor_count"]),
                    "bands": analytics.percentile_bands(peers_sponsors),
                },
                "commits_total": {
                    "value": commits,
                    "percentile": analytics.percentile_rank(peers_commits, commits),
                    "bands": analytics.percentile_bands(peers_commits),
                },
                "estimated_monthly_earnings_usd": {
                    "value": earnings_usd(row["min_tier_cents"], row["sponsor_count"]),
                    "percentile": analytics.percentile_rank(peers_earnings, earnings_cents),
                    "bands": {k: v // 100 for k, v in
                              analytics.percentile_bands(peers_earnings).items()},
                    "lower_bound": True,
                },
            },
        }

    @app.get("/api/export")
    def export_csv(request: Request):
        params = _check_params(request, {
            "country", "account_type", "role", "pronoun_category", "quality_flag",
            "min_sponsors", "sort_by", "sort_dir", "fields", "snapshot_id"})
        snapshot_id = _parse_snapshot_id(params)
        fields = None
        if "fields" in params:
            fields = [f.strip() for f in params.pop("fields").split(",") if f.strip()]
        try:
            query = parse_user_query(params)
        except QueryValidationError as exc:
            raise ApiError(400, exc.field, exc.message) from None

        def generate():
            with handle.read() as s:
                yield from stream_csv(s.iter_query_users(query, snapshot_id), fields)

        try:
            # Validate eagerly so errors are structured, not mid-stream.
            validate_columns(fields)
            with handle.read() as s:
                if snapshot_id is not None:
                    s.snapshot_meta(snapshot_id)
        except UnknownColumnError as exc:
            raise ApiError(
                400, "fields",
                f"unknown column {exc.column!r}; valid: {', '.join(CSV_COLUMNS)}") from None
        except SnapshotNotFoundError as exc:
            raise ApiError(404, "snapshot_id", f"no snapshot {exc}") from None
        return StreamingResponse(
            generate(), media_type="text/csv; charset=utf-8",
            headers={"Content-Disposition": "attachment; filename=sponsorscope-export.csv"})

    @app.get("/api/snapshots")
    def list_snapshots(request: Request):
        _check_params(request, set())
        with handle.read() as s:
            metas = s.list_snapshots()
        return {"snapshots": [
            {"snapshot_id": m.snapshot_id, "created_at": format_timestamp(m.created_at),
             "user_count": m.user_count, "edge_count": m.edge_count,
             "collector_version": m.collector_version}
            for m in metas
        ]}

    return app
