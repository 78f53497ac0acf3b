import csv
import io
import random

import pytest
from fastapi.testclient import TestClient

from sponsorscope import analytics
from sponsorscope.api import create_app
from sponsorscope.simulation import (
    GraphSpec,
    generate_graph,
    run_scenario,
    store_fingerprint,
)

from .conftest import T0

SPEC = GraphSpec(
    seed=101,
    user_count=260,
    org_count=40,
    role_marginals={
        "User": {"sponsored": 40, "sponsoring": 120, "both": 15},
        "Org": {"sponsored": 8, "sponsoring": 12, "both": 2},
    },
    country_marginals={
        "Japan": {"sponsored": 10, "sponsoring": 20, "both": 5},
        "Germany": {"sponsored": 8, "sponsoring": 30, "both": 4},
        "Canada": {"sponsored": 5, "sponsoring": 10, "both": 2},
    },
    pronoun_marginals={"Masculine": 40, "Feminine": 12, "OtherNeutral": 6},
)


@pytest.fixture(scope="module")
def backend():
    data = generate_graph(SPEC)
    # Plant CSV torture cases deterministically.
    victims = sorted(data.users)[:3]
    data.users[victims[0]]["display_name"] = 'Ada "The Comma", Lovelace'
    data.users[victims[1]]["display_name"] = "Multi\nline name"
    data.users[victims[2]]["display_name"] = 'quote"inside'
    result = run_scenario(data)
    app = create_app(store=result.store, clock=result.clock)
    with TestClient(app) as client:
        yield client, result.store
    result.store.close()


def parse_csv(text: str):
    return list(csv.reader(io.StringIO(text)))


class TestHealth:
    def test_health(self, backend):
        client, _ = backend
        body = client.get("/api/health").json()
        assert body["status"] == "ok"
        assert body["users_known"] > 0


class TestListUsers:
    def test_filters_are_conjunctive(self, backend):
        client, _ = backend
        body = client.get("/api/users", params={
            "country": "Japan", "role": "Both"}).json()
        assert body["total_matching"] == 5
        for item in body["items"]:
            assert item["country"] == "Japan"

    def test_unknown_parameter_rejected(self, backend):
        client, _ = backend
        resp = client.get("/api/users", params={"countri": "Japan"})
        assert resp.status_code == 400
        body = resp.json()
        assert body["field"] == "countri"
        assert body["error"] == "validation_error"

    def test_unknown_enum_value_rejected(self, backend):
        client, _ = backend
        resp = client.get("/api/users", params={"role": "Benefactor"})
        assert resp.status_code == 400
        assert resp.json()["field"] == "role"

    def test_page_size_bounds(self, backend):
        client, _ = backend
        assert client.get("/api/users", params={"page_size": "501"}).status_code == 400
        assert client.get("/api/users", params={"page_size": "0"}).status_code == 400

    def test_page_beyond_range_empty_with_correct_total(self, backend):
        client, _ = backend
        first = client.get("/api/users").json()
        far = client.get("/api/users", params={"page": "9999"}).json()
        assert far["items"] == []
        assert far["total_matching"] == first["total_matching"]

    def test_pagination_exhaustion_equals_unpaginated(self, backend):
        client, _ = backend
        # Oracle: concatenating every page must reproduce the full match set
        # exactly once, in order.
        everything = client.get("/api/users", params={
            "page_size": "500", "sort_by": "login", "sort_dir": "asc"}).json()
        full = [item["login"] for item in everything["items"]]
        collected = []
        page = 1
        while True:
            body = client.get("/api/users", params={
                "page_size": "37", "page": str(page),
                "sort_by": "login", "sort_dir": "asc"}).json()
            collected.extend(item["login"] for item in body["items"])
            if not body["items"]:
                break
            page += 1
        assert collected == full
        assert len(set(collected)) == len(collected)

    def test_sort_by_sponsor_count_desc_default(self, backend):
        client, _ = backend
        items = client.get("/api/users").json()["items"]
        counts = [item["sponsor_count"] for item in items]
        assert counts == sorted(counts, reverse=True)

    def test_min_sponsors_filter(self, backend):
        client, _ = backend
        body = client.get("/api/users", params={"min_sponsors": "3"}).json()
        assert all(item["sponsor_count"] >= 3 for item in body["items"])

    def test_earnings_sort_places_absent_last(self, backend):
        client, _ = backend
        items = client.get("/api/users", params={
            "sort_by": "estimated_earnings", "page_size": "500"}).json()["items"]
        values = [item["estimated_monthly_earnings_usd"] for item in items]
        tail_nones = [v for v in values if v is None]
        assert values[-len(tail_nones):] == tail_nones if tail_nones else True

    def test_read_only_no_request_mutates(self, backend):
        client, store = backend
        before = store_fingerprint(store)
        client.get("/api/users", params={"country": "Japan"})
        client.get("/api/stats", params={"group_by": "type"})
        client.get("/api/export")
        client.get("/api/snapshots")
        assert store_fingerprint(store) == before


class TestStats:
    def test_group_by_type_matches_analytics(self, backend):
        client, store = backend
        body = client.get("/api/stats", params={"group_by": "type"}).json()
        direct = analytics.participation_by_type(store)
        assert body["rows"] == [
            {"group_key": r.group_key, "sponsored": r.sponsored,
             "sponsoring": r.sponsoring, "both": r.both, "total": r.total}
            for r in direct
        ]
        assert body["provenance"] == "live"
        assert "generated_at" in body
        assert "sponsoring_to_sponsored_ratio" in body

    def test_group_by_country_top_n(self, backend):
        client, _ = backend
        body = client.get("/api/stats", params={
            "group_by": "country", "top_n": "2"}).json()
        keys = [r["group_key"] for r in body["rows"]]
        assert len(keys) == 3  # two countries + totals row
        assert keys[-1] == "Total"

    def test_invalid_grouping_rejected(self, backend):
        client, _ = backend
        resp = client.get("/api/stats", params={"group_by": "planet"})
        assert resp.status_code == 400
        assert resp.json()["field"] == "group_by"

    def test_benchmark_unknown_login_404(self, backend):
        client, _ = backend
        resp = client.get("/api/stats", params={
            "group_by": "benchmark", "login": "nobody-here"})
        assert resp.status_code == 404

    def test_benchmark_percentiles_match_offline_oracle(self, backend):
        client, store = backend
        peers = store.funded_peer_values("sponsor_count")
        probes = [item["login"] for item in client.get(
            "/api/users", params={"page_size": "7"}).json()["items"]]
        for login in probes:
            body = client.get("/api/stats", params={
                "group_by": "benchmark", "login": login}).json()
            value = body["metrics"]["sponsor_count"]["value"]
            oracle = (100 * sum(1 for v in peers if v <= value)) // len(peers)
            assert body["metrics"]["sponsor_count"]["percentile"] == oracle
            assert body["earnings_lower_bound"] is True

    def test_benchmark_extremes(self, backend):
        client, store = backend
        peers = store.funded_peer_values("sponsor_count")
        top = client.get("/api/users", params={"page_size": "1"}).json()["items"][0]
        assert top["sponsor_count"] == max(peers)
        body = client.get("/api/stats", params={
            "group_by": "benchmark", "login": top["login"]}).json()
        assert body["metrics"]["sponsor_count"]["percentile"] == 100
        zero = client.get("/api/users", params={
            "sort_dir": "asc", "page_size": "1"}).json()["items"][0]
        if zero["sponsor_count"] == 0:
            body = client.get("/api/stats", params={
                "group_by": "benchmark", "login": zero["login"]}).json()
            assert body["metrics"]["sponsor_count"]["percentile"] == 0


class TestExport:
    def test_default_header_is_full_schema(self, backend):
        client, _ = backend
        text = client.get("/api/export").text
        rows = parse_csv(text)
        assert rows[0] == [
            "login", "account_type", "display_name", "location_raw", "country",
            "geocode_importance", "pronoun_category", "sponsorable",
            "sponsor_count", "sponsoring_count", "min_tier_usd",
            "estimated_monthly_earnings_usd", "commits_total",
            "pull_requests_total", "issues_total", "reviews_total",
            "created_at", "first_seen_at", "last_fetched_at", "quality_flag"]

    def test_field_projection_order_preserved(self, backend):
        client, _ = backend
        text = client.get("/api/export", params={
            "fields": "country,login,sponsor_count"}).text
        rows = parse_csv(text)
        assert rows[0] == ["country", "login", "sponsor_count"]

    def test_unknown_column_rejected_with_catalog(self, backend):
        client, _ = backend
        resp = client.get("/api/export", params={"fields": "login,shoe_size"})
        assert resp.status_code == 400
        body = resp.json()
        assert body["field"] == "fields"
        assert "login" in body["message"]  # names the valid columns

    def test_crlf_and_quoting(self, backend):
        client, _ = backend
        text = client.get("/api/export").text
        assert "\r\n" in text
        assert '"Ada ""The Comma"", Lovelace"' in text  # quote doubling
        assert '"Multi\nline name"' in text  # embedded newline survives quoted
        rows = parse_csv(text)
        names = {row[2] for row in rows[1:]}
        assert 'Ada "The Comma", Lovelace' in names
        assert "Multi\nline name" in names
        assert 'quote"inside' in names

    def test_export_row_count_equals_total_matching(self, backend):
        client, _ = backend
        for params in ({}, {"country": "Japan"}, {"role": "Sponsored"},
                       {"account_type": "Org"}, {"min_sponsors": "2"}):
            total = client.get("/api/users", params=params).json()["total_matching"]
            text = client.get("/api/export", params=params).text
            assert len(parse_csv(text)) - 1 == total, params

    def test_round_trip_is_byte_identical(self, backend):
        client, _ = backend
        text = client.get("/api/export").text
        parsed = parse_csv(text)
        buffer = io.StringIO()
        writer = csv.writer(buffer, delimiter=",", quotechar='"',
                            quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        for row in parsed:
            writer.writerow(row)
        assert buffer.getvalue() == text

    def test_unknown_filter_rejected(self, backend):
        client, _ = backend
        assert client.get("/api/export", params={"page": "1"}).status_code == 400


class TestSnapshots:
    def test_snapshot_pinning_and_determinism(self, backend):
        client, store = backend
        meta = store.create_snapshot(T0 + 5000)
        first = client.get("/api/export", params={
            "snapshot_id": str(meta.snapshot_id)}).text
        # Ingest writes after the snapshot must not alter its export.
        from .conftest import make_user
        store.upsert_user(make_user("post-snapshot-user"))
        second = client.get("/api/export", params={
            "snapshot_id": str(meta.snapshot_id)}).text
        assert first == second
        assert "post-snapshot-user" not in first
        live = client.get("/api/export").text
        assert "post-snapshot-user" in live

    def test_snapshot_listing(self, backend):
        client, store = backend
        store.create_snapshot(T0 + 6000)
        body = client.get("/api/snapshots").json()
        ids = [s["snapshot_id"] for s in body["snapshots"]]
        assert ids == sorted(ids)
        assert body["snapshots"][-1]["user_count"] == store.user_count()
        assert body["snapshots"][-1]["collector_version"]

    def test_stats_pinned_to_snapshot(self, backend):
        client, store = backend
        meta = store.create_snapshot(T0 + 7000)
        before = client.get("/api/stats", params={
            "group_by": "type", "snapshot_id": str(meta.snapshot_id)}).json()
        assert before["provenance"] == f"snapshot:{meta.snapshot_id}"
        from .conftest import make_user
        store.upsert_user(make_user("stats-latecomer"))
        after = client.get("/api/stats", params={
            "group_by": "type", "snapshot_id": str(meta.snapshot_id)}).json()
        assert after["rows"] == before["rows"]  # frozen view
        live = client.get("/api/stats", params={"group_by": "type"}).json()
        live_total = next(r for r in live["rows"] if r["group_key"] == "Total")
        frozen_total = next(r for r in before["rows"] if r["group_key"] == "Total")
        assert live_total["total"] == frozen_total["total"] + 1

    def test_missing_snapshot_404(self, backend):
        client, _ = backend
        resp = client.get("/api/export", params={"snapshot_id": "9999"})
        assert resp.status_code == 404
        resp = client.get("/api/users", params={"snapshot_id": "9999"})
        assert resp.status_code == 404


class TestRandomizedQueryAgreement:
    def test_fifty_random_queries_export_equals_total(self, backend):
        client, _ = backend
        rng = random.Random(20)
        countries = ["Japan", "Germany", "Canada"]
        for _ in range(50):
            params = {}
            if rng.random() < 0.5:
                params["country"] = rng.choice(countries)
            if rng.random() < 0.4:
                params["role"] = rng.choice(["Sponsored", "Sponsoring", "Both"])
            if rng.random() < 0.3:
                params["account_type"] = rng.choice(["User", "Org"])
            if rng.random() < 0.3:
                params["min_sponsors"] = str(rng.randint(0, 4))
            if rng.random() < 0.3:
                params["pronoun_category"] = rng.choice(
                    ["Masculine", "Feminine", "OtherNeutral", "Unspecified"])
            total = client.get("/api/users", params=params).json()["total_matching"]
            text = client.get("/api/export", params=params).text
            assert len(parse_csv(text)) - 1 == total, params
