"""Core domain types shared by every other module.

All types are immutable value objects (frozen dataclasses): once constructed
they are safe to share between threads and to use as set/dict members.
Timestamps are Unix epoch seconds (UTC) as floats so that the same types work
under both the real and the simulated clock.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources

Timestamp = float

PLATFORM_LAUNCH_YEAR = 2008  # activity years before this signal corrupt data


class AccountType(str, Enum):
    USER = "User"
    ORG = "Org"


class Role(str, Enum):
    SPONSORED = "Sponsored"
    SPONSORING = "Sponsoring"
    BOTH = "Both"
    NEITHER = "Neither"


class PronounCategory(str, Enum):
    MASCULINE = "Masculine"
    FEMININE = "Feminine"
    OTHER_NEUTRAL = "OtherNeutral"
    UNSPECIFIED = "Unspecified"


class QualityFlag(str, Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"


class Direction(str, Enum):
    """Edge fetch direction relative to a login.

    SPONSORS_OF: edges where the login is the recipient (incoming).
    SPONSORED_BY: edges where the login is the sponsor (outgoing).
    """

    SPONSORS_OF = "SponsorsOf"
    SPONSORED_BY = "SponsoredBy"


def _load_country_data() -> tuple[frozenset[str], dict[str, str]]:
    raw = resources.files("sponsorscope.data").joinpath("countries.json").read_text("utf-8")
    data = json.loads(raw)
    return frozenset(data["countries"]), dict(data["aliases"])


CANONICAL_COUNTRIES, COUNTRY_ALIASES = _load_country_data()


def canonical_country(name: str) -> str | None:
    """Map a geocoder country label onto the bundled canonical list."""
    name = name.strip()
    if name in CANONICAL_COUNTRIES:
        return name
    return COUNTRY_ALIASES.get(name)


@dataclass(frozen=True, slots=True)
class GeoResolution:
    country: str
    importance: float
    resolved_from: str
    resolved_at: Timestamp


@dataclass(frozen=True, slots=True)
class UserRecord:
    login: str
    account_type: AccountType | None
    first_seen_at: Timestamp
    display_name: str | None = None
    location_raw: str | None = None
    geo: GeoResolution | None = None
    pronouns_raw: str | None = None
    pronoun_category: PronounCategory = PronounCategory.UNSPECIFIED
    sponsor_count: int = 0
    sponsoring_count: int = 0
    sponsorable: bool = False
    min_tier_cents: int | None = None
    created_at: Timestamp | None = None
    last_fetched_at: Timestamp | None = None
    quality_flag: QualityFlag = QualityFlag.LOW
    # Store provenance: a stub is an edge endpoint discovered during traversal
    # whose profile has never been fetched; retired marks an upstream-deleted
    # account kept as a tombstone for edge history.
    is_stub: bool = False
    retired: bool = False
    discovered_via: str | None = None

    def evolve(self, **changes) -> "UserRecord":
        return replace(self, **changes)


@dataclass(frozen=True, slots=True)
class SponsorshipEdge:
    sponsor_login: str
    recipient_login: str
    first_seen_at: Timestamp
    last_seen_at: Timestamp
    ended_at: Timestamp | None = None

    @property
    def live(self) -> bool:
        return self.ended_at is None


@dataclass(frozen=True, slots=True)
class YearActivity:
    login: str
    year: int
    commits: int = 0
    pull_requests: int = 0
    issues: int = 0
    reviews: int = 0
    complete: bool = False


@dataclass(frozen=True, slots=True)
class QueueEntry:
    login: str
    due_at: Timestamp
    active: bool
    enqueued_at: Timestamp
    discovered_via: str | None = None


@dataclass(frozen=True, slots=True)
class SnapshotMeta:
    snapshot_id: int
    created_at: Timestamp
    user_count: int
    edge_count: int
    collector_version: str


def classify_role(user: UserRecord, edges: set[SponsorshipEdge] | list[SponsorshipEdge]) -> Role:
    """Participation role from the live edges incident to ``user``.

    The four roles partition the population: a user receiving and giving is
    Both (and is counted in neither of the one-sided buckets).
    """
    receives = any(e.recipient_login == user.login for e in edges)
    gives = any(e.sponsor_login == user.login for e in edges)
    if receives and gives:
        return Role.BOTH
    if receives:
        return Role.SPONSORED
    if gives:
        return Role.SPONSORING
    return Role.NEITHER


def role_from_degrees(incoming: int, outgoing: int) -> Role:
    """Same partition as classify_role, from precomputed live degree counts."""
    if incoming > 0 and outgoing > 0:
        return Role.BOTH
    if incoming > 0:
        return Role.SPONSORED
    if outgoing > 0:
        return Role.SPONSORING
    return Role.NEITHER


def validate_user_record(record: UserRecord) -> list[str]:
    """Return the list of invariant violations; empty means storable."""
    violations: list[str] = []
    if not record.login:
        violations.append("login empty")
    if record.sponsor_count < 0:
        violations.append("sponsor_count negative")
    if record.sponsoring_count < 0:
        violations.append("sponsoring_count negative")

    has_pronouns = record.pronouns_raw is not None and record.pronouns_raw.strip() != ""
    if has_pronouns and record.pronoun_category == PronounCategory.UNSPECIFIED:
        violations.append("pronoun category inconsistent")
    if not has_pronouns and record.pronoun_category != PronounCategory.UNSPECIFIED:
        violations.append("pronoun category inconsistent")

    if record.geo is not None:
        if not 0.0 <= record.geo.importance <= 1.0:
            violations.append("geo importance out of range")
        if record.geo.country not in CANONICAL_COUNTRIES:
            violations.append(f"geo country not canonical: {record.geo.country!r}")

    expected_flag = expected_quality_flag(record.pronoun_category, record.geo)
    if record.quality_flag != expected_flag:
        violations.append(
            f"quality flag {getattr(record.quality_flag, 'value', record.quality_flag)} "
            f"not recomputable (expected {expected_flag.value})"
        )

    if record.min_tier_cents is not None and record.min_tier_cents <= 0:
        violations.append("min_tier_cents not positive")

    if record.last_fetched_at is not None and record.last_fetched_at < record.first_seen_at:
        violations.append("last_fetched_at before first_seen_at")

    if not record.is_stub:
        if record.account_type is None:
            violations.append("account_type missing on fetched record")
        if record.created_at is None:
            violations.append("created_at missing on fetched record")
        if record.last_fetched_at is None:
            violations.append("last_fetched_at missing on fetched record")

    return violations


def expected_quality_flag(category: PronounCategory, geo: GeoResolution | None) -> QualityFlag:
    """Confidence grid: High needs pronouns AND an unambiguous geocode
    (importance strictly above 0.8); one of the two gives Medium; else Low."""
    pronouns = category != PronounCategory.UNSPECIFIED
    confident_geo = geo is not None and geo.importance > 0.8
    if pronouns and confident_geo:
        return QualityFlag.HIGH
    if pronouns or confident_geo:
        return QualityFlag.MEDIUM
    return QualityFlag.LOW


def validate_year_activity(entry: YearActivity) -> list[str]:
    violations = []
    if entry.year < PLATFORM_LAUNCH_YEAR:
        violations.append(f"year {entry.year} predates the platform")
    for name in ("commits", "pull_requests", "issues", "reviews"):
        if getattr(entry, name) < 0:
            violations.append(f"{name} negative")
    return violations
