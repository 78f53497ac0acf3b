"""Read-only aggregations over the store: participation tables, pronoun
distribution, coverage. Percentages are always computed from raw counts at
render time with an explicit denominator; nothing derived is stored.

Stubs (discovered but never fetched) and retired tombstones are excluded from
every aggregate: their profile fields are unknown or frozen history.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .model import AccountType, PronounCategory, QualityFlag, Role, role_from_degrees
from .store import Store


@dataclass(frozen=True, slots=True)
class ParticipationRow:
    group_key: str
    sponsored: int
    sponsoring: int
    both: int
    total: int

    def __post_init__(self):
        if self.sponsored + self.sponsoring + self.both > self.total:
            raise ValueError(f"role counts exceed group total for {self.group_key!r}")


def _census(store: Store, snapshot_id: int | None):
    """(rows, recipients, sponsors) for non-retired, non-stub users."""
    recipients, sponsors = store.live_endpoint_sets(snapshot_id)
    return store.census_rows(snapshot_id), recipients, sponsors


def _tally(rows, recipients: set[str], sponsors: set[str], key_fn) -> dict[str, list[int]]:
    # buckets: [sponsored, sponsoring, both, total]
    buckets: dict[str, list[int]] = {}
    for row in rows:
        key = key_fn(row)
        if key is None:
            continue
        counts = buckets.setdefault(key, [0, 0, 0, 0])
        counts[3] += 1
        role = role_from_degrees(
            1 if row["login"] in recipients else 0,
            1 if row["login"] in sponsors else 0,
        )
        if role is Role.SPONSORED:
            counts[0] += 1
        elif role is Role.SPONSORING:
            counts[1] += 1
        elif role is Role.BOTH:
            counts[2] += 1
    return buckets


def participation_by_type(store: Store, snapshot_id: int | None = None) -> list[ParticipationRow]:
    """One row per account type plus a column-wise totals row."""
    rows, recipients, sponsors = _census(store, snapshot_id)
    buckets = _tally(rows, recipients, sponsors, lambda r: r["account_type"])
    result = []
    totals = [0, 0, 0, 0]
    for account_type in (AccountType.USER, AccountType.ORG):
        counts = buckets.get(account_type.value, [0, 0, 0, 0])
        result.append(ParticipationRow(account_type.value, *counts))
        totals = [a + b for a, b in zip(totals, counts)]
    result.append(ParticipationRow("Total", *totals))
    return result


def participation_by_country(store: Store, top_n: int,
                             snapshot_id: int | None = None) -> list[ParticipationRow]:
    """Top countries by participating population, resolved users only.

    Ordered by total descending, ties alphabetical; a totals row over the
    returned countries closes the list.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    rows, recipients, sponsors = _census(store, snapshot_id)
    buckets = _tally(rows, recipients, sponsors, lambda r: r["geo_country"])
    ordered = sorted(buckets.items(), key=lambda item: (-item[1][3], item[0]))[:top_n]
    result = [ParticipationRow(country, *counts) for country, counts in ordered]
    if result:
        totals = [0, 0, 0, 0]
        for row in result:
            totals = [a + b for a, b in zip(
                totals, (row.sponsored, row.sponsoring, row.both, row.total))]
        result.append(ParticipationRow("Total", *totals))
    return result


def sponsoring_sponsored_ratio(rows: list[ParticipationRow]) -> tuple[float, str] | None:
    """Giving-to-receiving ratio from a participation table's totals row."""
    totals = next((r for r in rows if r.group_key == "Total"), None)
    if totals is None or totals.sponsored == 0:
        return None
    ratio = totals.sponsoring / totals.sponsored
    return ratio, f"{ratio:.1f}:1"


@dataclass(frozen=True, slots=True)
class PronounDistribution:
    counts: dict
    specifying: int
    population: int
    specifying_share: float | None
    shares_among_specifying: dict | None


def pronoun_distribution(store: Store, snapshot_id: int | None = None) -> PronounDistribution:
    rows = store.census_rows(snapshot_id)
    counts = {category.value: 0 for category in PronounCategory}
    for row in rows:
        counts[row["pronoun_category"]] += 1
    population = len(rows)
    specifying = population - counts[PronounCategory.UNSPECIFIED.value]
    share = specifying / population if population else None
    shares = None
    if specifying:
        shares = {
            category.value: counts[category.value] / specifying
            for category in (PronounCategory.MASCULINE, PronounCategory.FEMININE,
                             PronounCategory.OTHER_NEUTRAL)
        }
    return PronounDistribution(counts, specifying, population, share, shares)


@dataclass(frozen=True, slots=True)
class CoverageSummary:
    population: int
    geocoded: int
    geocoded_fraction: float | None
    country_count: int
    quality_flag_histogram: dict


def coverage_summary(store: Store, snapshot_id: int | None = None) -> CoverageSummary:
    rows = store.census_rows(snapshot_id)
    histogram = {flag.value: 0 for flag in QualityFlag}
    countries: set[str] = set()
    geocoded = 0
    for row in rows:
        histogram[row["quality_flag"]] += 1
        if row["geo_country"] is not None:
            geocoded += 1
            countries.add(row["geo_country"])
    population = len(rows)
    fraction = geocoded / population if population else None
    return CoverageSummary(population, geocoded, fraction, len(countries), histogram)


def percentile_rank(sorted_values: list[int], value: int) -> int:
    """Nearest-rank percentile of ``value`` among ``sorted_values`` (0..100)."""
    if not sorted_values:
        return 0
    at_or_below = bisect_right(sorted_values, value)
    return (100 * at_or_below) // len(sorted_values)


def percentile_bands(sorted_values: list[int]) -> dict[str, int]:
    """Nearest-rank quantile thresholds for a funded-peer population."""
    if not sorted_values:
        return {}
    n = len(sorted_values)
    bands = {}
    for pct in (25, 50, 75, 90):
        rank = max(1, -(-pct * n // 100))  # ceil(pct*n/100), nearest-rank
        bands[f"p{pct}"] = sorted_values[min(rank, n) - 1]
    return bands
