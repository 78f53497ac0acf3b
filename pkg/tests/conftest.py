from __future__ import annotations

import pytest

from sponsorscope.clock import SimulatedClock
from sponsorscope.model import (
    AccountType,
    GeoResolution,
    PronounCategory,
    QualityFlag,
    UserRecord,
)
from sponsorscope.simulation import SIM_EPOCH
from sponsorscope.source import FixtureData
from sponsorscope.store import Store

T0 = SIM_EPOCH


def make_user(login="alice", **overrides) -> UserRecord:
    """A valid, fully fetched user record; override fields per test."""
    defaults = dict(
        login=login,
        account_type=AccountType.USER,
        first_seen_at=T0,
        created_at=T0 - 86400 * 400,
        last_fetched_at=T0,
        sponsor_count=0,
        sponsoring_count=0,
        sponsorable=True,
        pronoun_category=PronounCategory.UNSPECIFIED,
        quality_flag=QualityFlag.LOW,
        is_stub=False,
    )
    defaults.update(overrides)
    return UserRecord(**defaults)


def make_geo(country="Japan", importance=0.9, resolved_from="tokyo") -> GeoResolution:
    return GeoResolution(country, importance, resolved_from, T0)


def tiny_fixture(users: dict[str, dict] | None = None,
                 edges: list[tuple[str, str]] | None = None,
                 activity: dict | None = None) -> FixtureData:
    """Hand-rolled fixture; fills in required profile fields."""
    data = FixtureData()
    for login, extra in (users or {}).items():
        rec = {
            "login": login,
            "account_type": "User",
            "display_name": login.title(),
            "location_raw": None,
            "pronouns_raw": None,
            "sponsorable": False,
            "min_tier_cents": None,
            "created_at": "2025-06-01T00:00:00Z",
            "sponsor_count": 0,
            "sponsoring_count": 0,
        }
        rec.update(extra)
        data.users[login] = rec
    data.edges = list(edges or [])
    for (login, year), counts in (activity or {}).items():
        data.activity[(login, year)] = {"login": login, "year": year, **counts}
    # Profile counters consistent with edges unless the test overrode them.
    for login in data.users:
        if "sponsor_count" not in (users or {}).get(login, {}):
            data.users[login]["sponsor_count"] = sum(
                1 for _, r in data.edges if r == login)
        if "sponsoring_count" not in (users or {}).get(login, {}):
            data.users[login]["sponsoring_count"] = sum(
                1 for s, _ in data.edges if s == login)
    return data


@pytest.fixture
def mem_store():
    store = Store(":memory:")
    yield store
    store.close()


@pytest.fixture
def sim_clock():
    return SimulatedClock(T0)
