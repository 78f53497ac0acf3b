"""Provider-facing payload types and error taxonomy.

A provider is the transport behind the observatory: the live GraphQL endpoint,
a deterministic fixture directory, or a recorded cassette. All three speak in
these payloads so everything above them is transport-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Union

from ..model import Direction


class ProviderError(Exception):
    pass


class NotFoundError(ProviderError):
    """Account deleted or renamed upstream; the scheduler should retire it."""


class TransientProviderError(ProviderError):
    """Retryable failure (network, 5xx); backed off and retried."""


class RateLimitedError(TransientProviderError):
    """Remote limiter said no despite local accounting; honor its reset."""

    def __init__(self, reset_at: float, message: str = "rate limited upstream"):
        super().__init__(message)
        self.reset_at = reset_at


class InvalidCursorError(ProviderError):
    """Pagination cursor no longer valid; restart from the first page."""


class YearOutOfRangeError(ProviderError):
    """Requested activity year outside [account creation year, current year]."""


@dataclass(frozen=True, slots=True)
class ProfilePayload:
    login: str
    account_type: str  # "User" | "Org"
    display_name: str | None
    location_raw: str | None
    pronouns_raw: str | None
    sponsorable: bool
    min_tier_cents: int | None
    created_at: float
    sponsor_count: int
    sponsoring_count: int


@dataclass(frozen=True, slots=True)
class EdgePage:
    edges: tuple[tuple[str, str], ...]  # (sponsor_login, recipient_login)
    next_cursor: str | None
    direction: Direction


@dataclass(frozen=True, slots=True)
class ActivityPayload:
    login: str
    year: int
    commits: int
    pull_requests: int
    issues: int
    reviews: int


@dataclass(frozen=True, slots=True)
class SeedPage:
    logins: tuple[str, ...]
    next_cursor: str | None


@dataclass(frozen=True, slots=True)
class RateState:
    remaining: int
    reset_at: float | None


Payload = Union[ProfilePayload, EdgePage, ActivityPayload, SeedPage]


@dataclass(frozen=True, slots=True)
class ProviderResponse:
    payload: Payload
    cost: int = 1
    rate_state: RateState | None = None

    def __post_init__(self):
        if self.cost < 1:
            raise ValueError("response cost must be >= 1")


class SourceProvider(Protocol):
    """One remote data source; every fetch costs budget units."""

    def list_sponsorable_page(self, cursor: str | None = None,
                              token_id: str | None = None) -> ProviderResponse: ...

    def fetch_profile(self, login: str,
                      token_id: str | None = None) -> ProviderResponse: ...

    def fetch_sponsor_edges_page(self, login: str, direction: Direction,
                                 cursor: str | None = None,
                                 token_id: str | None = None) -> ProviderResponse: ...

    def fetch_activity_year(self, login: str, year: int,
                            token_id: str | None = None) -> ProviderResponse: ...
