#!/usr/bin/env python3
"""Rebuild the bundled geocoder cassette and the location-variant corpus.

The cassette is the persistent recording the test suite and fixture runs
replay instead of calling a live geocoding service. Entries follow the
Nominatim jsonv2 candidate shape (importance + address.country). Importance
values are a stable function of the query so rebuilding the file is
byte-reproducible.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "sponsorscope" / "data"

# (raw profile string, cleaned form, resolved country, importance)
VARIANTS = [
    ("  NYC \U0001F5FD ", "nyc", "United States", 0.86),
    ("New York", "new york", "United States", 0.89),
    ("New York, NY", "new york, ny", "United States", 0.84),
    ("USA", "usa", "United States", 0.93),
    ("U.S.A.", "u.s.a.", "United States", 0.91),
    ("United States", "united states", "United States", 0.95),
    ("San Francisco, CA", "san francisco, ca", "United States", 0.83),
    ("Seattle, WA \U0001F326️", "seattle, wa", "United States", 0.82),
    ("Berlin", "berlin", "Germany", 0.88),
    ("Berlin, Germany", "berlin, germany", "Germany", 0.86),
    ("München", "münchen", "Germany", 0.84),
    ("Deutschland", "deutschland", "Germany", 0.92),
    ("Germany \U0001F1E9\U0001F1EA", "germany", "Germany", 0.95),
    ("London", "london", "United Kingdom", 0.90),
    ("London, UK", "london, uk", "United Kingdom", 0.87),
    ("UK", "uk", "United Kingdom", 0.92),
    ("England", "england", "United Kingdom", 0.88),
    ("Tokyo", "tokyo", "Japan", 0.89),
    ("Tokyo, Japan", "tokyo, japan", "Japan", 0.87),
    ("東京", "東京", "Japan", 0.85),
    ("日本", "日本", "Japan", 0.93),
    ("Japan", "japan", "Japan", 0.95),
    ("Toronto", "toronto", "Canada", 0.88),
    ("Vancouver, BC", "vancouver, bc", "Canada", 0.84),
    ("Montréal", "montréal", "Canada", 0.85),
    ("Canada", "canada", "Canada", 0.95),
    ("Paris", "paris", "France", 0.90),
    ("Paris, France", "paris, france", "France", 0.87),
    ("France", "france", "France", 0.95),
]

# Queries recorded with no usable candidates.
UNRESOLVABLE = ["asdfqwerty", "xyzzy plugh", "blorptown"]

# Alias labels a live geocoder actually emits, to exercise canonicalization.
ALIAS_LABELS = {
    "United States": "United States of America",
    "United Kingdom": "United Kingdom",
}


def stable_importance(name: str) -> float:
    return round(0.85 + (zlib.crc32(name.encode("utf-8")) % 10) / 100.0, 2)


def main() -> None:
    countries = json.loads((DATA_DIR / "countries.json").read_text("utf-8"))["countries"]

    cassette: dict[str, list[dict]] = {}
    for _, cleaned, country, importance in VARIANTS:
        label = ALIAS_LABELS.get(country, country)
        cassette[cleaned] = [
            {"importance": importance, "address": {"country": label}},
            {"importance": round(importance - 0.31, 2), "address": {"country": label}},
        ]
    for junk in UNRESOLVABLE:
        cassette[junk] = []
    # Tie on importance: the first-returned candidate must win.
    cassette["springfield"] = [
        {"importance": 0.5, "address": {"country": "United States"}},
        {"importance": 0.5, "address": {"country": "Canada"}},
    ]
    # Exactly at the confidence boundary: resolved, but never High quality.
    cassette["ambiguousville"] = [{"importance": 0.8, "address": {"country": "Canada"}}]
    # A candidate without a country component is skipped in favor of one with.
    cassette["riverbend"] = [
        {"importance": 0.9, "address": {}},
        {"importance": 0.6, "address": {"country": "Canada"}},
    ]
    # Every canonical country name resolves to itself (lowercased query).
    for name in countries:
        query = name.casefold()
        if query not in cassette:
            cassette[query] = [
                {"importance": stable_importance(name), "address": {"country": name}}
            ]

    corpus = [
        {"raw": raw, "cleaned": cleaned, "country": country}
        for raw, cleaned, country, _ in VARIANTS
    ]

    (DATA_DIR / "geocode_cassette.json").write_text(
        json.dumps(cassette, ensure_ascii=False, indent=1, sort_keys=True) + "\n", "utf-8"
    )
    (DATA_DIR / "location_corpus.json").write_text(
        json.dumps(corpus, ensure_ascii=False, indent=1) + "\n", "utf-8"
    )
    print(f"cassette entries: {len(cassette)}, corpus variants: {len(corpus)}")


if __name__ == "__main__":
    main()
