#!/usr/bin/env python3
"""Record API responses for the dashboard's agreement tests.

Builds the country-census fixture backend (the same population the acceptance
suite reproduces), replays the scripted filter interactions the dashboard
tests perform, and saves every response keyed by the exact request URL the
dashboard's API client will construct. Also captures benchmark responses for
five probe accounts plus the funded-peer sponsor counts that back the offline
quantile oracle.

Regenerate with:  python scripts/record_frontend_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path
from urllib.parse import urlencode

from fastapi.testclient import TestClient

from sponsorscope.api import create_app
from sponsorscope.simulation import GraphSpec, ScenarioConfig, generate_graph, run_scenario

OUT_PATH = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures" / "api_recordings.json"

COUNTRY_CENSUS = {
    "United States": {"sponsored": 1320, "sponsoring": 6292, "both": 298},
    "Germany": {"sponsored": 520, "sponsoring": 2323, "both": 111},
    "United Kingdom": {"sponsored": 450, "sponsoring": 1270, "both": 74},
    "Japan": {"sponsored": 294, "sponsoring": 879, "both": 100},
    "Canada": {"sponsored": 206, "sponsoring": 804, "both": 58},
    "France": {"sponsored": 299, "sponsoring": 580, "both": 50},
}

# Mirrors the dashboard's scripted interactions (see frontend agreement test).
INTERACTIONS = [
    {"action": "set", "key": "country", "value": "Japan"},
    {"action": "set", "key": "role", "value": "Both"},
    {"action": "set", "key": "role", "value": "Sponsored"},
    {"action": "set", "key": "role", "value": None},
    {"action": "set", "key": "accountType", "value": "User"},
    {"action": "set", "key": "minSponsors", "value": 3},
    {"action": "set", "key": "country", "value": None},
    {"action": "set", "key": "sortBy", "value": "login"},
    {"action": "set", "key": "sortDir", "value": "asc"},
    {"action": "page", "value": 2},
    {"action": "page", "value": 3},
    {"action": "set", "key": "pageSize", "value": 100},
    {"action": "set", "key": "country", "value": "Germany"},
    {"action": "set", "key": "role", "value": "Sponsoring"},
    {"action": "set", "key": "pronounCategory", "value": "Unspecified"},
    {"action": "clear_all"},
    {"action": "set", "key": "country", "value": "United States"},
    {"action": "set", "key": "qualityFlag", "value": "Medium"},
    {"action": "set", "key": "sortBy", "value": "estimated_earnings"},
    {"action": "set", "key": "role", "value": "Both"},
]

DEFAULTS = {"sortBy": "sponsor_count", "sortDir": "desc", "page": 1, "pageSize": 50}


def apply(state: dict, step: dict) -> dict:
    if step["action"] == "clear_all":
        return dict(DEFAULTS)
    if step["action"] == "page":
        return {**state, "page": max(1, step["value"])}
    next_state = {**state, "page": 1}
    if step["value"] is None:
        next_state.pop(step["key"], None)
        for key, default in DEFAULTS.items():
            next_state.setdefault(key, default)
    else:
        next_state[step["key"]] = step["value"]
    return next_state


def users_url(state: dict) -> str:
    # Must build byte-identical URLs to the dashboard's usersQueryParams().
    params: list[tuple[str, str]] = []
    if state.get("country"):
        params.append(("country", state["country"]))
    if state.get("accountType"):
        params.append(("account_type", state["accountType"]))
    if state.get("role"):
        params.append(("role", state["role"]))
    if state.get("pronounCategory"):
        params.append(("pronoun_category", state["pronounCategory"]))
    if state.get("qualityFlag"):
        params.append(("quality_flag", state["qualityFlag"]))
    if state.get("minSponsors") is not None:
        params.append(("min_sponsors", str(state["minSponsors"])))
    if state["sortBy"] != "sponsor_count":
        params.append(("sort_by", state["sortBy"]))
    if state["sortDir"] != "desc":
        params.append(("sort_dir", state["sortDir"]))
    if state["page"] != 1:
        params.append(("page", str(state["page"])))
    if state["pageSize"] != 50:
        params.append(("page_size", str(state["pageSize"])))
    query = urlencode(params)
    return f"/api/users?{query}" if query else "/api/users"


def build_backend():
    spec = GraphSpec(
        seed=2026_04,
        user_count=15928,
        org_count=0,
        role_marginals={"User": {k: sum(c[k] for c in COUNTRY_CENSUS.values())
                                 for k in ("sponsored", "sponsoring", "both")}},
        country_marginals=COUNTRY_CENSUS,
        sponsorable_policy="all",
        created_year_start=2026,
    )
    result = run_scenario(generate_graph(spec), ScenarioConfig())
    return result


def main() -> None:
    result = build_backend()
    app = create_app(store=result.store, clock=result.clock)
    responses: dict[str, dict] = {}
    with TestClient(app) as client:
        def record(url: str) -> dict:
            response = client.get(url)
            assert response.status_code == 200, (url, response.text)
            responses[url] = response.json()
            return responses[url]

        state = dict(DEFAULTS)
        record(users_url(state))  # initial unfiltered view
        for step in INTERACTIONS:
            state = apply(state, step)
            record(users_url(state))

        record("/api/stats?group_by=type")
        record("/api/stats?group_by=country&top_n=6")

        # Probe accounts for the benchmark oracle: extremes plus mid-range.
        top = record("/api/users")["items"][0]["login"]
        mids = record("/api/users?sort_by=login&page=40")["items"]
        zeros = record("/api/users?sort_dir=asc")["items"]
        probes = [top, mids[0]["login"], mids[10]["login"], mids[25]["login"],
                  zeros[0]["login"]]
        for login in probes:
            record(f"/api/stats?group_by=benchmark&login={login}")

        peers = result.store.funded_peer_values("sponsor_count")
        probe_values = {
            login: result.store.user_export_row(login)["sponsor_count"]
            for login in probes
        }

    payload = {
        "interactions": INTERACTIONS,
        "responses": responses,
        "benchmark_probes": probes,
        "probe_sponsor_counts": probe_values,
        "funded_peer_sponsor_counts": peers,
    }
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print(f"recorded {len(responses)} responses, {len(peers)} funded peers "
          f"-> {OUT_PATH}")
    result.store.close()


if __name__ == "__main__":
    main()
