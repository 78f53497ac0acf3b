"""sponsorscope: a continuously operating observatory for the developer
sponsorship graph — discovery crawler, normalizer, embedded store, analytics
API, CSV exports, and a deterministic simulation harness."""

__version__ = "0.1.0"
