"""Country resolution for cleaned location strings.

Two geocoder backends sit behind one interface: a live Nominatim-compatible
client (rate-capped to 1 request/second, independent of the main API budget)
and a cassette backend replaying recorded responses for tests and fixture
runs. Results are cached keyed by the cleaned query so each distinct string
hits the service at most once, ever.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Protocol

import httpx

from .clock import Clock, RealClock
from .model import GeoResolution, canonical_country
from .normalize import LocationOutcome

DEFAULT_GEOCODER_URL = "https://nominatim.openstreetmap.org/search"
USER_AGENT = "sponsorscope/0.1 (sponsorship-graph observatory; contact: operator)"


class GeocoderUnavailable(Exception):
    """Transient failure: the caller may retry; never cached."""


class CassetteMiss(KeyError):
    """Strict cassette has no recording for the query."""


class Geocoder(Protocol):
    def search(self, query: str) -> list[dict]: ...


@dataclass(frozen=True, slots=True)
class CachedResolution:
    outcome: str  # "resolved" | "unresolvable"
    country: str | None
    importance: float | None
    resolved_at: float


class GeocodeCache(Protocol):
    def get(self, query: str) -> CachedResolution | None: ...

    def put(self, query: str, entry: CachedResolution) -> None: ...


class InMemoryGeocodeCache:
    def __init__(self):
        self._entries: dict[str, CachedResolution] = {}
        self._lock = threading.Lock()

    def get(self, query: str) -> CachedResolution | None:
        return self._entries.get(query)

    def put(self, query: str, entry: CachedResolution) -> None:
        with self._lock:
            self._entries[query] = entry

    def __len__(self) -> int:
        return len(self._entries)


class CassetteGeocoder:
    """Replays recorded candidate lists; counts calls for politeness tests.

    miss_policy "empty" treats unknown queries as a recorded empty result
    (they resolve to nothing); "error" raises CassetteMiss, which the corpus
    tests use to prove coverage.
    """

    def __init__(self, cassette: dict[str, list[dict]] | str | Path | None = None,
                 miss_policy: str = "empty"):
        if cassette is None:
            cassette = bundled_cassette()
        elif isinstance(cassette, (str, Path)):
            cassette = json.loads(Path(cassette).read_text("utf-8"))
        if miss_policy not in ("empty", "error"):
            raise ValueError(f"unknown miss_policy {miss_policy!r}")
        self._responses = dict(cassette)
        self._miss_policy = miss_policy
        self.calls = 0

    def search(self, query: str) -> list[dict]:
        self.calls += 1
        if query in self._responses:
            return self._responses[query]
        if self._miss_policy == "error":
            raise CassetteMiss(query)
        return []


class NominatimGeocoder:
    """Live HTTP geocoder with a hard 1 req/s politeness cap."""

    def __init__(self, base_url: str = DEFAULT_GEOCODER_URL,
                 user_agent: str = USER_AGENT,
                 clock: Clock | None = None,
                 min_interval: float = 1.0,
                 client: httpx.Client | None = None):
        self._base_url = base_url
        self._clock = clock or RealClock()
        self._min_interval = min_interval
        self._client = client or httpx.Client(headers={"User-Agent": user_agent}, timeout=30.0)
        self._last_request_at: float | None = None
        self._lock = threading.Lock()
        self.calls = 0

    def search(self, query: str) -> list[dict]:
        with self._lock:
            now = self._clock.now()
            if self._last_request_at is not None:
                gap = self._min_interval - (now - self._last_request_at)
                if gap > 0:
                    self._clock.sleep(gap)
            self._last_request_at = self._clock.now()
        self.calls += 1
        try:
            resp = self._client.get(
                self._base_url,
                params={"q": query, "format": "jsonv2", "addressdetails": 1, "limit": 10},
            )
        except httpx.HTTPError as exc:
            raise GeocoderUnavailable(str(exc)) from exc
        if resp.status_code != 200:
            raise GeocoderUnavailable(f"geocoder returned {resp.status_code}")
        return resp.json()


def bundled_cassette() -> dict[str, list[dict]]:
    raw = resources.files("sponsorscope.data").joinpath("geocode_cassette.json").read_text("utf-8")
    return json.loads(raw)


def bundled_location_corpus() -> list[dict]:
    """The shipped raw-string variant corpus with expected resolutions."""
    raw = resources.files("sponsorscope.data").joinpath("location_corpus.json").read_text("utf-8")
    return json.loads(raw)


def geocode_location(
    cleaned: str,
    cache: GeocodeCache,
    geocoder: Geocoder,
    now: float,
) -> GeoResolution | LocationOutcome:
    """Resolve a cleaned, non-privacy location string to a country.

    Cache hits never touch the geocoder and reproduce the original resolution
    byte for byte. The highest-importance candidate with a canonicalizable
    country wins; ties keep the first-returned candidate. A transient
    geocoder failure propagates and is never cached.
    """
    if not cleaned:
        raise ValueError("cleaned location must be non-empty")
    hit = cache.get(cleaned)
    if hit is not None:
        if hit.outcome == "resolved":
            return GeoResolution(hit.country, hit.importance, cleaned, hit.resolved_at)
        return LocationOutcome.UNRESOLVABLE

    candidates = geocoder.search(cleaned)
    best: tuple[float, str] | None = None
    for cand in candidates:
        country_raw = (cand.get("address") or {}).get("country")
        if not country_raw:
            continue
        country = canonical_country(str(country_raw))
        if country is None:
            continue
        importance = float(cand.get("importance", 0.0))
        if best is None or importance > best[0]:
            best = (importance, country)

    if best is None:
        cache.put(cleaned, CachedResolution("unresolvable", None, None, now))
        return LocationOutcome.UNRESOLVABLE
    importance, country = best
    cache.put(cleaned, CachedResolution("resolved", country, importance, now))
    return GeoResolution(country, importance, cleaned, now)
