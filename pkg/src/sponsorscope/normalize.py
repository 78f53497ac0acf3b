"""Profile-string normalization into research-grade fields.

Everything in this module is a pure function of its inputs. Geocoding (the
one operation with an external dependency) lives in ``geocode``; this module
owns the deterministic cleaning and classification rules.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from enum import Enum

from .model import (
    GeoResolution,
    PronounCategory,
    QualityFlag,
    YearActivity,
    expected_quality_flag,
)


class LocationOutcome(Enum):
    """Where a raw location string ended up; plain Enum so results are never
    confused with cleaned strings in union returns."""

    RESOLVED = "Resolved"
    PRIVACY = "PrivacyString"
    EMPTY = "Empty"
    UNRESOLVABLE = "Unresolvable"


@dataclass(frozen=True, slots=True)
class LocationNormalization:
    raw: str
    cleaned: str
    outcome: LocationOutcome
    geo: GeoResolution | None = None


# Location strings that deliberately say "not a place". Matched case-insensitively
# against the cleaned string; these must never reach the geocoder.
PRIVACY_LOCATIONS = frozenset(
    {
        "remote",
        "earth",
        "worldwide",
        "the internet",
        "internet",
        "everywhere",
        "nowhere",
        "127.0.0.1",
        "localhost",
        "world",
        "planet earth",
        "the moon",
        "moon",
        "mars",
        "cyberspace",
        "online",
        "global",
        "metaverse",
        "somewhere",
        "anywhere",
        "home",
        "/dev/null",
        "null island",
    }
)

_WS_RE = re.compile(r"\s+")
# Symbol-ish categories dropped during cleaning: emoji & pictographs (So),
# modifier symbols such as skin tones (Sk), surrogates/private use (Cs, Co).
_DROP_CATEGORIES = frozenset({"So", "Sk", "Cs", "Co"})
_DROP_CODEPOINTS = frozenset(
    {0x200D, *range(0xFE00, 0xFE10)}  # zero-width joiner, variation selectors
)


def normalize_location_string(raw: str | None) -> str | LocationOutcome:
    """Clean a raw profile location.

    Returns the cleaned string ready for geocoding, or LocationOutcome.EMPTY /
    LocationOutcome.PRIVACY when there is nothing to geocode.
    """
    if raw is None:
        return LocationOutcome.EMPTY
    text = unicodedata.normalize("NFKC", raw)
    text = "".join(
        ch
        for ch in text
        if ord(ch) not in _DROP_CODEPOINTS and unicodedata.category(ch) not in _DROP_CATEGORIES
    )
    text = _WS_RE.sub(" ", text).casefold().strip()
    if not text:
        return LocationOutcome.EMPTY
    if text in PRIVACY_LOCATIONS:
        return LocationOutcome.PRIVACY
    return text


_PRONOUN_SPLIT_RE = re.compile(r"[/\s]+")
_MASCULINE = frozenset({"he", "him", "his"})
_FEMININE = frozenset({"she", "her", "hers"})


def extract_pronoun_category(pronouns_raw: str | None) -> PronounCategory:
    """Deterministic token rules; no inference for users who stay silent."""
    if pronouns_raw is None:
        return PronounCategory.UNSPECIFIED
    tokens = [
        t.strip(".,;:()[]") for t in _PRONOUN_SPLIT_RE.split(pronouns_raw.casefold()) if t
    ]
    tokens = [t for t in tokens if t]
    if not tokens:
        return PronounCategory.UNSPECIFIED
    token_set = set(tokens)
    # Pure sets only: anything mixed ("she/they", "he/she") or outside the
    # binary token sets counts as other/neutral, never as a binary category.
    if token_set <= _MASCULINE:
        return PronounCategory.MASCULINE
    if token_set <= _FEMININE:
        return PronounCategory.FEMININE
    return PronounCategory.OTHER_NEUTRAL


def classify_quality(
    pronoun_category: PronounCategory, geo: GeoResolution | None
) -> QualityFlag:
    return expected_quality_flag(pronoun_category, geo)


def estimate_monthly_earnings(
    min_tier_cents: int | None, sponsor_count: int
) -> int | None:
    """Lower bound on monthly earnings, in USD cents.

    The published minimum tier times the sponsor count. Sponsors picking
    premium tiers only push true earnings above this, never below. Without a
    published tier there is no known bound, so the result stays absent.
    """
    if sponsor_count < 0:
        raise ValueError("sponsor_count must be >= 0")
    if min_tier_cents is None:
        return None
    return min_tier_cents * sponsor_count


class AggregationError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class ActivityTotals:
    commits: int = 0
    pull_requests: int = 0
    issues: int = 0
    reviews: int = 0


def aggregate_activity(records: list[YearActivity]) -> ActivityTotals:
    """Lifetime totals for one login; duplicate years are a caller bug."""
    seen_years: set[int] = set()
    commits = prs = issues = reviews = 0
    for rec in records:
        if rec.year in seen_years:
            raise AggregationError(f"duplicate year {rec.year}")
        seen_years.add(rec.year)
        commits += rec.commits
        prs += rec.pull_requests
        issues += rec.issues
        reviews += rec.reviews
    return ActivityTotals(commits, prs, issues, reviews)
