import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sponsorscope.clock import SimulatedClock
from sponsorscope.model import Direction
from sponsorscope.ratelimit import CredentialPool
from sponsorscope.simulation import EventLog
from sponsorscope.source import (
    CassetteTransport,
    FixtureData,
    FixtureProvider,
    InvalidCursorError,
    LiveProvider,
    NotFoundError,
    SourceClient,
    TransientExhausted,
    TransientProviderError,
    YearOutOfRangeError,
)

from .conftest import T0, tiny_fixture

LIVE_CASSETTE = Path(__file__).parent / "data" / "live_cassette.json"


def make_client(provider, clock, on_event=None, budget=5000):
    pool = CredentialPool(["t1", "t2", "t3"], budget_per_hour=budget)
    return SourceClient(provider, pool, clock, rng=random.Random(0), on_event=on_event)


def star_fixture(n_edges: int):
    """hub receives n_edges sponsors fan0..fanN."""
    users = {"hub": {"sponsorable": True, "min_tier_cents": 500}}
    edges = []
    for i in range(n_edges):
        login = f"fan{i:04d}"
        users[login] = {}
        edges.append((login, "hub"))
    return tiny_fixture(users, edges)


class TestFixtureProvider:
    def test_profile_echoes_fixture_byte_for_byte(self, sim_clock):
        data = tiny_fixture({"alice": {
            "display_name": "Alice", "location_raw": "Tokyo",
            "pronouns_raw": "she/her", "sponsorable": True,
            "min_tier_cents": 500, "sponsor_count": 7, "sponsoring_count": 2,
        }})
        provider = FixtureProvider(data, sim_clock)
        payload = provider.fetch_profile("alice").payload
        assert payload.login == "alice"
        assert payload.display_name == "Alice"
        assert payload.location_raw == "Tokyo"
        assert payload.pronouns_raw == "she/her"
        assert payload.sponsorable is True
        assert payload.min_tier_cents == 500
        assert payload.sponsor_count == 7
        assert payload.sponsoring_count == 2

    def test_unknown_login_is_not_found(self, sim_clock):
        provider = FixtureProvider(tiny_fixture({"alice": {}}), sim_clock)
        with pytest.raises(NotFoundError):
            provider.fetch_profile("ghost")

    def test_pagination_arithmetic_250_edges(self, sim_clock):
        provider = FixtureProvider(star_fixture(250), sim_clock)
        sizes = []
        cursor = None
        while True:
            page = provider.fetch_sponsor_edges_page("hub", Direction.SPONSORS_OF,
                                                     cursor).payload
            sizes.append(len(page.edges))
            if page.next_cursor is None:
                break
            cursor = page.next_cursor
        assert sizes == [100, 100, 50]

    def test_zero_edges_single_empty_page(self, sim_clock):
        provider = FixtureProvider(tiny_fixture({"loner": {}}), sim_clock)
        page = provider.fetch_sponsor_edges_page("loner", Direction.SPONSORS_OF).payload
        assert page.edges == ()
        assert page.next_cursor is None

    def test_invalid_cursor_rejected(self, sim_clock):
        provider = FixtureProvider(star_fixture(5), sim_clock)
        with pytest.raises(InvalidCursorError):
            provider.fetch_sponsor_edges_page("hub", Direction.SPONSORS_OF, "banana")
        with pytest.raises(InvalidCursorError):
            provider.fetch_sponsor_edges_page("hub", Direction.SPONSORS_OF, "700")

    def test_activity_echo_and_range(self, sim_clock):
        data = tiny_fixture(
            {"alice": {"created_at": "2023-02-01T00:00:00Z"}},
            activity={("alice", 2023): {"commits": 120, "pull_requests": 14,
                                        "issues": 9, "reviews": 30}})
        provider = FixtureProvider(data, sim_clock)
        payload = provider.fetch_activity_year("alice", 2023).payload
        assert (payload.commits, payload.pull_requests, payload.issues,
                payload.reviews) == (120, 14, 9, 30)
        with pytest.raises(YearOutOfRangeError):
            provider.fetch_activity_year("alice", 2022)  # before creation
        with pytest.raises(YearOutOfRangeError):
            provider.fetch_activity_year("alice", 2027)  # future

    def test_identical_request_sequences_identical_responses(self, sim_clock):
        data = star_fixture(130)

        def run():
            provider = FixtureProvider(data, SimulatedClock(T0))
            out = [provider.fetch_profile("hub").payload]
            cursor = None
            while True:
                page = provider.fetch_sponsor_edges_page(
                    "hub", Direction.SPONSORS_OF, cursor).payload
                out.append(page)
                if page.next_cursor is None:
                    return out
                cursor = page.next_cursor

        assert run() == run()

    @given(page_size=st.integers(1, 37), n_edges=st.integers(0, 90))
    @settings(max_examples=25, deadline=None)
    def test_pagination_completeness_any_page_size(self, page_size, n_edges):
        # Set-equality oracle: union of pages == fixture adjacency, disjoint.
        data = star_fixture(n_edges)
        provider = FixtureProvider(data, SimulatedClock(T0), page_size=page_size)
        collected = []
        cursor = None
        while True:
            page = provider.fetch_sponsor_edges_page("hub", Direction.SPONSORS_OF,
                                                     cursor).payload
            collected.extend(page.edges)
            if page.next_cursor is None:
                break
            cursor = page.next_cursor
        assert len(collected) == len(set(collected)) == n_edges
        assert set(collected) == {(f"fan{i:04d}", "hub") for i in range(n_edges)}

    def test_round_trips_through_disk(self, sim_clock, tmp_path):
        data = star_fixture(7)
        data.write(tmp_path / "fx")
        reloaded = FixtureData.load(tmp_path / "fx")
        assert reloaded.users == data.users
        assert sorted(reloaded.edges) == sorted(data.edges)
        assert reloaded.activity == data.activity


class FlakyProvider:
    """Fails n times, then delegates to a fixture provider."""

    def __init__(self, inner, failures: int):
        self.inner = inner
        self.remaining_failures = failures
        self.calls = 0

    def fetch_profile(self, login, token_id=None):
        self.calls += 1
        if self.remaining_failures > 0:
            self.remaining_failures -= 1
            raise TransientProviderError("hiccup")
        return self.inner.fetch_profile(login, token_id=token_id)

    def __getattr__(self, name):
        return getattr(self.inner, name)


class RestartingPager:
    """Invalidates the first continuation cursor once, like an expired token."""

    def __init__(self, inner):
        self.inner = inner
        self.poisoned = True

    def fetch_sponsor_edges_page(self, login, direction, cursor=None, token_id=None):
        if cursor is not None and self.poisoned:
            self.poisoned = False
            raise InvalidCursorError(cursor)
        return self.inner.fetch_sponsor_edges_page(login, direction, cursor,
                                                   token_id=token_id)

    def __getattr__(self, name):
        return getattr(self.inner, name)


class TestSourceClient:
    def test_backoff_retries_transient_failures(self, sim_clock):
        inner = FixtureProvider(tiny_fixture({"alice": {}}), sim_clock)
        flaky = FlakyProvider(inner, failures=3)
        client = make_client(flaky, sim_clock)
        payload = client.fetch_profile("alice")
        assert payload.login == "alice"
        assert flaky.calls == 4
        assert sim_clock.now() > T0  # jittered sleeps advanced the clock

    def test_transient_exhaustion_after_max_attempts(self, sim_clock):
        inner = FixtureProvider(tiny_fixture({"alice": {}}), sim_clock)
        flaky = FlakyProvider(inner, failures=99)
        client = make_client(flaky, sim_clock)
        with pytest.raises(TransientExhausted):
            client.fetch_profile("alice")
        assert flaky.calls == 6

    def test_invalid_cursor_restarts_pagination(self, sim_clock):
        provider = RestartingPager(FixtureProvider(star_fixture(250), sim_clock))
        client = make_client(provider, sim_clock)
        edges = client.fetch_edges("hub", Direction.SPONSORS_OF)
        assert len(edges) == 250
        assert len(set(edges)) == 250

    def test_every_call_consumes_budget(self, sim_clock):
        provider = FixtureProvider(star_fixture(10), sim_clock)
        log = EventLog()
        client = make_client(provider, sim_clock, on_event=log)
        client.fetch_profile("hub")
        client.fetch_edges("hub", Direction.SPONSORS_OF)
        client.list_sponsorable()
        grants = log.of_kind("grant")
        assert len(grants) == client.api_calls
        assert all(g["cost"] == 1 for g in grants)

    def test_not_found_propagates_without_retry(self, sim_clock):
        provider = FixtureProvider(tiny_fixture({"alice": {}}), sim_clock)
        client = make_client(provider, sim_clock)
        with pytest.raises(NotFoundError):
            client.fetch_profile("ghost")
        assert sim_clock.now() == T0  # no backoff for permanent errors

    def test_upstream_rate_limit_sleeps_until_echoed_reset(self, sim_clock):
        from sponsorscope.source import RateLimitedError

        class LimitedOnce:
            def __init__(self, inner):
                self.inner = inner
                self.limited = True

            def fetch_profile(self, login, token_id=None):
                if self.limited:
                    self.limited = False
                    raise RateLimitedError(reset_at=T0 + 50.0)
                return self.inner.fetch_profile(login, token_id=token_id)

            def __getattr__(self, name):
                return getattr(self.inner, name)

        provider = LimitedOnce(FixtureProvider(tiny_fixture({"alice": {}}), sim_clock))
        client = make_client(provider, sim_clock)
        payload = client.fetch_profile("alice")
        assert payload.login == "alice"
        # slept until the echoed reset plus the one-second grace
        assert sim_clock.now() == pytest.approx(T0 + 51.0)


class TestLiveProviderContract:
    """Recorded-cassette replay through the live query/parsing layer."""

    def _provider(self):
        transport = CassetteTransport(LIVE_CASSETTE)
        return LiveProvider(transport, SimulatedClock(T0)), transport

    def test_seed_listed_account_is_sponsorable(self):
        provider, _ = self._provider()
        seeds = provider.list_sponsorable_page().payload
        assert "octo-maintainer" in seeds.logins
        profile = provider.fetch_profile("octo-maintainer").payload
        assert profile.sponsorable is True

    def test_profile_fields_parsed(self):
        provider, _ = self._provider()
        profile = provider.fetch_profile("octo-maintainer").payload
        assert profile.account_type == "User"
        assert profile.pronouns_raw == "she/her"
        assert profile.min_tier_cents == 500  # minimum of the published tiers
        assert profile.sponsor_count == 42
        assert profile.location_raw == "Berlin, Germany"

    def test_deleted_account_is_not_found(self):
        provider, _ = self._provider()
        with pytest.raises(NotFoundError):
            provider.fetch_profile("gone-account")

    def test_edge_pagination_follows_cursors(self):
        provider, transport = self._provider()
        page1 = provider.fetch_sponsor_edges_page(
            "octo-maintainer", Direction.SPONSORS_OF).payload
        assert page1.edges == (("fan-one", "octo-maintainer"),
                               ("fan-two", "octo-maintainer"))
        assert page1.next_cursor is not None
        page2 = provider.fetch_sponsor_edges_page(
            "octo-maintainer", Direction.SPONSORS_OF, page1.next_cursor).payload
        assert page2.edges == (("fan-three", "octo-maintainer"),)
        assert page2.next_cursor is None
        outgoing = provider.fetch_sponsor_edges_page(
            "octo-maintainer", Direction.SPONSORED_BY).payload
        assert outgoing.edges == (("octo-maintainer", "upstream-dep"),)

    def test_activity_year_parsed(self):
        provider, _ = self._provider()
        payload = provider.fetch_activity_year("octo-maintainer", 2023).payload
        assert (payload.commits, payload.pull_requests, payload.issues,
                payload.reviews) == (812, 96, 31, 140)

    def test_http_transport_echoes_rate_headers(self):
        import httpx

        from sponsorscope.source.live import HttpGraphQLTransport

        def handler(request):
            assert request.headers["authorization"] == "bearer secret"
            return httpx.Response(
                200,
                json={"data": {"repositoryOwner": {
                    "__typename": "User", "login": "a",
                    "createdAt": "2020-01-01T00:00:00Z",
                    "hasSponsorsListing": True,
                    "sponsors": {"totalCount": 1},
                    "sponsoring": {"totalCount": 0}}}},
                headers={"x-ratelimit-remaining": "4321",
                         "x-ratelimit-reset": "1772323999"},
            )

        transport = HttpGraphQLTransport(
            {"t0": "secret"},
            client=httpx.Client(transport=httpx.MockTransport(handler)))
        provider = LiveProvider(transport, SimulatedClock(T0))
        response = provider.fetch_profile("a", token_id="t0")
        assert response.rate_state.remaining == 4321
        assert response.rate_state.reset_at == 1772323999.0
