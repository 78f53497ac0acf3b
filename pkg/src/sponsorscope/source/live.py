"""Live GraphQL provider.

Speaks per-account queries against a GraphQL endpoint with bearer tokens.
The wire layer is injectable: the HTTP transport is used in production, while
contract tests replay a recorded cassette (request-key -> response JSON map)
through the exact same query construction and parsing code.

Pronouns arrive through the profile query like any other field; callers never
see how the transport obtained them.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol

import httpx

from ..clock import Clock
from ..model import Direction
from .base import (
    ActivityPayload,
    EdgePage,
    InvalidCursorError,
    NotFoundError,
    ProfilePayload,
    ProviderResponse,
    RateLimitedError,
    RateState,
    SeedPage,
    TransientProviderError,
)
from .fixture import parse_timestamp

DEFAULT_ENDPOINT = "https://api.github.com/graphql"
PAGE_SIZE = 100

PROFILE_QUERY = """
query Profile($login: String!) {
  repositoryOwner(login: $login) {
    __typename
    login
    ... on User {
      name location pronouns createdAt hasSponsorsListing
      sponsors { totalCount }
      sponsoring { totalCount }
      sponsorsListing { tiers(first: 100) { nodes { monthlyPriceInCents } } }
    }
    ... on Organization {
      name location createdAt hasSponsorsListing
      sponsors { totalCount }
      sponsoring { totalCount }
      sponsorsListing { tiers(first: 100) { nodes { monthlyPriceInCents } } }
    }
  }
}
"""

EDGES_QUERY = {
    Direction.SPONSORS_OF: """
query Sponsors($login: String!, $first: Int!, $after: String) {
  repositoryOwner(login: $login) {
    ... on Sponsorable {
      sponsors(first: $first, after: $after) {
        nodes { ... on User { login } ... on Organization { login } }
        pageInfo { hasNextPage endCursor }
      }
    }
  }
}
""",
    Direction.SPONSORED_BY: """
query Sponsoring($login: String!, $first: Int!, $after: String) {
  repositoryOwner(login: $login) {
    ... on User {
      sponsoring(first: $first, after: $after) {
        nodes { ... on User { login } ... on Organization { login } }
        pageInfo { hasNextPage endCursor }
      }
    }
    ... on Organization {
      sponsoring(first: $first, after: $after) {
        nodes { ... on User { login } ... on Organization { login } }
        pageInfo { hasNextPage endCursor }
      }
    }
  }
}
""",
}

ACTIVITY_QUERY = """
query Activity($login: String!, $from: DateTime!, $to: DateTime!) {
  user(login: $login) {
    contributionsCollection(from: $from, to: $to) {
      totalCommitContributions
      totalPullRequestContributions
      totalIssueContributions
      totalPullRequestReviewContributions
    }
  }
}
"""

SEED_QUERY = """
query Seeds($first: Int!, $after: String) {
  search(query: "is:sponsorable", type: USER, first: $first, after: $after) {
    nodes { ... on User { login } ... on Organization { login } }
    pageInfo { hasNextPage endCursor }
  }
}
"""


class GraphQLTransport(Protocol):
    def __call__(self, request_key: str, query: str, variables: dict,
                 token_id: str | None) -> dict: ...


class HttpGraphQLTransport:
    """POSTs queries with the granted credential as the bearer token.

    Remote rate headers are kept on ``last_rate_state`` so the provider can
    echo them in its responses."""

    def __init__(self, tokens: dict[str, str], endpoint: str = DEFAULT_ENDPOINT,
                 client: httpx.Client | None = None):
        self._tokens = tokens
        self._endpoint = endpoint
        self._client = client or httpx.Client(timeout=30.0)
        self.last_rate_state: RateState | None = None

    def __call__(self, request_key, query, variables, token_id):
        token = self._tokens.get(token_id) if token_id else None
        if token is None:
            token = next(iter(self._tokens.values()))
        try:
            resp = self._client.post(
                self._endpoint,
                json={"query": query, "variables": variables},
                headers={"Authorization": f"bearer {token}"},
            )
        except httpx.HTTPError as exc:
            raise TransientProviderError(str(exc)) from exc
        if "x-ratelimit-remaining" in resp.headers:
            self.last_rate_state = RateState(
                remaining=int(resp.headers["x-ratelimit-remaining"]),
                reset_at=float(resp.headers.get("x-ratelimit-reset", 0)) or None,
            )
        if resp.status_code in (403, 429):
            reset = float(resp.headers.get("x-ratelimit-reset", 0))
            raise RateLimitedError(reset)
        if resp.status_code >= 500:
            raise TransientProviderError(f"endpoint returned {resp.status_code}")
        if resp.status_code != 200:
            raise TransientProviderError(f"unexpected status {resp.status_code}")
        body = resp.json()
        for err in body.get("errors") or []:
            if err.get("type") == "NOT_FOUND":
                raise NotFoundError(err.get("message", "not found"))
        if "data" not in body:
            raise TransientProviderError("response missing data")
        return body["data"]


class CassetteTransport:
    """Replays one scenario's recorded request-key -> data map."""

    def __init__(self, cassette: dict | str | Path):
        if isinstance(cassette, (str, Path)):
            cassette = json.loads(Path(cassette).read_text("utf-8"))
        self._responses = cassette
        self.requests: list[str] = []

    def __call__(self, request_key, query, variables, token_id):
        self.requests.append(request_key)
        if request_key not in self._responses:
            raise NotFoundError(request_key)
        return self._responses[request_key]


def _min_tier_cents(owner: dict) -> int | None:
    listing = owner.get("sponsorsListing") or {}
    nodes = (listing.get("tiers") or {}).get("nodes") or []
    prices = [n["monthlyPriceInCents"] for n in nodes if n and n.get("monthlyPriceInCents")]
    return min(prices) if prices else None


class LiveProvider:
    def __init__(self, transport: GraphQLTransport, clock: Clock):
        self._transport = transport
        self._clock = clock

    def _echo(self) -> RateState | None:
        return getattr(self._transport, "last_rate_state", None)

    def fetch_profile(self, login, token_id=None) -> ProviderResponse:
        key = f"profile:{login}"
        data = self._transport(key, PROFILE_QUERY, {"login": login}, token_id)
        owner = data.get("repositoryOwner")
        if owner is None:
            raise NotFoundError(login)
        return ProviderResponse(ProfilePayload(
            login=owner["login"],
            account_type="Org" if owner.get("__typename") == "Organization" else "User",
            display_name=owner.get("name"),
            location_raw=owner.get("location"),
            pronouns_raw=owner.get("pronouns") or None,
            sponsorable=bool(owner.get("hasSponsorsListing")),
            min_tier_cents=_min_tier_cents(owner),
            created_at=parse_timestamp(owner["createdAt"]),
            sponsor_count=(owner.get("sponsors") or {}).get("totalCount", 0),
            sponsoring_count=(owner.get("sponsoring") or {}).get("totalCount", 0),
        ), rate_state=self._echo())

    def fetch_sponsor_edges_page(self, login, direction, cursor=None,
                                 token_id=None) -> ProviderResponse:
        key = f"edges:{login}:{direction.value}:{cursor or ''}"
        data = self._transport(
            key, EDGES_QUERY[direction],
            {"login": login, "first": PAGE_SIZE, "after": cursor}, token_id,
        )
        owner = data.get("repositoryOwner")
        if owner is None:
            raise NotFoundError(login)
        conn_name = "sponsors" if direction is Direction.SPONSORS_OF else "sponsoring"
        conn = owner.get(conn_name) or {"nodes": [], "pageInfo": {"hasNextPage": False}}
        others = [n["login"] for n in conn.get("nodes") or [] if n and n.get("login")]
        if direction is Direction.SPONSORS_OF:
            pairs = tuple((other, login) for other in others)
        else:
            pairs = tuple((login, other) for other in others)
        info = conn.get("pageInfo") or {}
        next_cursor = info.get("endCursor") if info.get("hasNextPage") else None
        return ProviderResponse(EdgePage(pairs, next_cursor, direction),
                                rate_state=self._echo())

    def fetch_activity_year(self, login, year, token_id=None) -> ProviderResponse:
        start = datetime(year, 1, 1, tzinfo=timezone.utc)
        end = datetime(year, 12, 31, 23, 59, 59, tzinfo=timezone.utc)
        key = f"activity:{login}:{year}"
        data = self._transport(
            key, ACTIVITY_QUERY,
            {"login": login, "from": start.isoformat(), "to": end.isoformat()}, token_id,
        )
        user = data.get("user")
        coll = (user or {}).get("contributionsCollection") or {}
        return ProviderResponse(ActivityPayload(
            login=login,
            year=year,
            commits=coll.get("totalCommitContributions", 0),
            pull_requests=coll.get("totalPullRequestContributions", 0),
            issues=coll.get("totalIssueContributions", 0),
            reviews=coll.get("totalPullRequestReviewContributions", 0),
        ), rate_state=self._echo())

    def list_sponsorable_page(self, cursor=None, token_id=None) -> ProviderResponse:
        key = f"seeds:{cursor or ''}"
        data = self._transport(key, SEED_QUERY, {"first": PAGE_SIZE, "after": cursor}, token_id)
        search = data.get("search")
        if search is None:
            raise InvalidCursorError(cursor or "")
        logins = tuple(n["login"] for n in search.get("nodes") or [] if n and n.get("login"))
        info = search.get("pageInfo") or {}
        next_cursor = info.get("endCursor") if info.get("hasNextPage") else None
        return ProviderResponse(SeedPage(logins, next_cursor),
                                rate_state=self._echo())
