"""Analysis-ready CSV rendering of filtered user sets.

Grammar is fixed: UTF-8, comma delimiter, CRLF row endings, double-quote
quoting with embedded-quote doubling, mandatory header row, ISO-8601 UTC
timestamps, absent values as empty fields. Row order follows the query's
stable (sort key, login) ordering, so exporting the same snapshot twice is
byte-identical.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Iterator

from .source.fixture import format_timestamp

CSV_COLUMNS = (
    "login",
    "account_type",
    "display_name",
    "location_raw",
    "country",
    "geocode_importance",
    "pronoun_category",
    "sponsorable",
    "sponsor_count",
    "sponsoring_count",
    "min_tier_usd",
    "estimated_monthly_earnings_usd",
    "commits_total",
    "pull_requests_total",
    "issues_total",
    "reviews_total",
    "created_at",
    "first_seen_at",
    "last_fetched_at",
    "quality_flag",
)


class UnknownColumnError(ValueError):
    def __init__(self, column: str):
        super().__init__(column)
        self.column = column


def cents_to_usd(cents: int | None) -> str:
    if cents is None:
        return ""
    if cents % 100 == 0:
        return str(cents // 100)
    return f"{cents / 100:.2f}"


def earnings_usd(min_tier_cents: int | None, sponsor_count: int) -> int | None:
    """Lower-bound monthly earnings in whole USD (floor)."""
    if min_tier_cents is None:
        return None
    return (min_tier_cents * sponsor_count) // 100


def _ts(value) -> str:
    return format_timestamp(value) if value is not None else ""


def row_to_csv_values(row: dict) -> dict[str, str]:
    """Map one store row onto the documented column set, all stringified."""
    earnings = earnings_usd(row["min_tier_cents"], row["sponsor_count"])
    return {
        "login": row["login"],
        "account_type": row["account_type"] or "",
        "display_name": row["display_name"] or "",
        "location_raw": row["location_raw"] or "",
        "country": row["geo_country"] or "",
        "geocode_importance": (repr(row["geo_importance"])
                               if row["geo_importance"] is not None else ""),
        "pronoun_category": row["pronoun_category"],
        "sponsorable": "true" if row["sponsorable"] else "false",
        "sponsor_count": str(row["sponsor_count"]),
        "sponsoring_count": str(row["sponsoring_count"]),
        "min_tier_usd": cents_to_usd(row["min_tier_cents"]),
        "estimated_monthly_earnings_usd": "" if earnings is None else str(earnings),
        "commits_total": str(row["commits_total"] or 0),
        "pull_requests_total": str(row["pull_requests_total"] or 0),
        "issues_total": str(row["issues_total"] or 0),
        "reviews_total": str(row["reviews_total"] or 0),
        "created_at": _ts(row["created_at"]),
        "first_seen_at": _ts(row["first_seen_at"]),
        "last_fetched_at": _ts(row["last_fetched_at"]),
        "quality_flag": row["quality_flag"],
    }


def validate_columns(fields: list[str] | None) -> tuple[str, ...]:
    if fields is None:
        return CSV_COLUMNS
    if not fields:
        raise UnknownColumnError("(empty field list)")
    for name in fields:
        if name not in CSV_COLUMNS:
            raise UnknownColumnError(name)
    return tuple(fields)


CHUNK_BYTES = 256 * 1024


def stream_csv(rows: Iterable[dict], fields: list[str] | None = None) -> Iterator[str]:
    """Yield CSV in ~256 KiB chunks (header first) for the given store rows."""
    columns = validate_columns(fields)
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter=",", quotechar='"',
                        quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        values = row_to_csv_values(row)
        writer.writerow([values[c] for c in columns])
        if buffer.tell() >= CHUNK_BYTES:
            yield buffer.getvalue()
            buffer.seek(0)
            buffer.truncate()
    if buffer.tell():
        yield buffer.getvalue()


def render_csv(rows: Iterable[dict], fields: list[str] | None = None) -> str:
    return "".join(stream_csv(rows, fields))
