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
    SourceProvider,
    TransientProviderError,
    YearOutOfRangeError,
)
from .client import SourceClient, TransientExhausted
from .fixture import FixtureData, FixtureProvider, format_timestamp, parse_timestamp
from .live import CassetteTransport, HttpGraphQLTransport, LiveProvider

__all__ = [
    "ActivityPayload",
    "CassetteTransport",
    "EdgePage",
    "FixtureData",
    "FixtureProvider",
    "HttpGraphQLTransport",
    "InvalidCursorError",
    "LiveProvider",
    "NotFoundError",
    "ProfilePayload",
    "ProviderResponse",
    "RateLimitedError",
    "RateState",
    "SeedPage",
    "SourceClient",
    "SourceProvider",
    "TransientExhausted",
    "TransientProviderError",
    "YearOutOfRangeError",
    "format_timestamp",
    "parse_timestamp",
]
