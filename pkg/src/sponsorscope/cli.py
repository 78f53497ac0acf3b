"""Command-line entry points: ingest control, simulation tooling, snapshots,
and the API server.

Configuration comes from environment variables (DATABASE_URL, SOURCE_MODE,
FIXTURE_PATH, GH_TOKENS, BIND_ADDR, GEOCODER_URL), mirroring how the service
is deployed; flags override where noted.
"""

from __future__ import annotations

import json
import os
import random
import signal
import threading

import click

from .clock import RealClock, SimulatedClock
from .geocode import DEFAULT_GEOCODER_URL, CassetteGeocoder, NominatimGeocoder
from .ratelimit import CredentialPool
from .scheduler import IngestWorker, SchedulerConfig
from .simulation import (
    SIM_EPOCH,
    GraphSpec,
    ScenarioConfig,
    generate_graph,
    run_scenario,
    sliding_window_grant_violations,
)
from .source import (
    FixtureData,
    FixtureProvider,
    HttpGraphQLTransport,
    LiveProvider,
    SourceClient,
)
from .store import Store, StoreGeocodeCache


def _build_runtime(fixture: str | None, simulated_clock: bool, workers: int,
                   on_event=None):
    """Assemble (store, worker, clock, stop_event) from env + flags."""
    stop_event = threading.Event()
    clock = SimulatedClock(SIM_EPOCH) if simulated_clock else RealClock(stop_event)
    mode = os.environ.get("SOURCE_MODE", "fixture" if fixture else "live")
    if fixture or mode == "fixture":
        path = fixture or os.environ.get("FIXTURE_PATH")
        if not path:
            raise click.UsageError("fixture mode needs --fixture PATH or FIXTURE_PATH")
        provider = FixtureProvider(FixtureData.load(path), clock)
        tokens = [f"token{i}" for i in range(3)]
        geocoder = CassetteGeocoder()
    else:
        raw = os.environ.get("GH_TOKENS", "")
        secrets = [t.strip() for t in raw.split(",") if t.strip()]
        if not secrets:
            raise click.UsageError("live mode needs GH_TOKENS (comma-separated)")
        tokens = [f"token{i}" for i in range(len(secrets))]
        transport = HttpGraphQLTransport(dict(zip(tokens, secrets)))
        provider = LiveProvider(transport, clock)
        geocoder = NominatimGeocoder(
            base_url=os.environ.get("GEOCODER_URL", DEFAULT_GEOCODER_URL), clock=clock)

    store = Store(os.environ.get("DATABASE_URL"))
    pool = CredentialPool(tokens)
    client = SourceClient(provider, pool, clock, rng=random.Random(0), on_event=on_event)
    config = SchedulerConfig(worker_count=workers)
    worker = IngestWorker(store, client, clock, config, geocoder=geocoder,
                          geocode_cache=StoreGeocodeCache(store), on_event=on_event)
    return store, worker, clock, stop_event


@click.group()
def main():
    """Sponsorship-graph observatory."""


@main.group()
def ingest():
    """Run and inspect the collector."""


@ingest.command("seed")
@click.option("--filter", "filters", multiple=True,
              help="Narrow seeding, e.g. country=Japan or type=User.")
@click.option("--fixture", type=click.Path(exists=True), default=None)
@click.option("--simulated-clock", is_flag=True, default=False)
def ingest_seed(filters, fixture, simulated_clock):
    """Enqueue every sponsorable account (idempotent)."""
    target = {}
    for item in filters:
        if "=" not in item:
            raise click.UsageError(f"--filter expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        if key not in ("country", "type"):
            raise click.UsageError(f"unknown filter key {key!r} (country, type)")
        target[key] = value
    store, worker, _, _ = _build_runtime(fixture, simulated_clock, 1)
    if target:
        worker.config = SchedulerConfig(
            worker_count=worker.config.worker_count,
            seed_mode="TargetedFilter", target_filter=target)
    added = worker.seed()
    click.echo(f"enqueued {added} accounts (queue depth {store.queue_depth()})")
    store.close()


@ingest.command("run")
@click.option("--workers", default=1, show_default=True)
@click.option("--fixture", type=click.Path(exists=True), default=None)
@click.option("--simulated-clock", is_flag=True, default=False,
              help="Run against the simulated clock and exit when quiescent.")
@click.option("--seed-first/--no-seed-first", default=True, show_default=True)
def ingest_run(workers, fixture, simulated_clock, seed_first):
    """Run the ingest loop until stopped (Ctrl-C) or quiescent."""
    store, worker, clock, stop_event = _build_runtime(fixture, simulated_clock, workers)

    def handle_signal(signum, frame):
        click.echo("stopping after the current account…", err=True)
        stop_event.set()

    signal.signal(signal.SIGINT, handle_signal)
    signal.signal(signal.SIGTERM, handle_signal)

    if seed_first and store.queue_depth() == 0:
        click.echo(f"seeded {worker.seed()} accounts")
    report = worker.run_loop(stop_event=stop_event, stop_when_idle=simulated_clock)
    click.echo(json.dumps({
        "users_processed": report.users_processed,
        "api_calls": report.api_calls,
        "errors": report.errors,
        "retired": report.retired,
        "discovered": report.discovered,
    }, indent=2))
    store.close()


@ingest.command("status")
@click.option("--fixture", type=click.Path(exists=True), default=None)
@click.option("--simulated-clock", is_flag=True, default=False)
def ingest_status(fixture, simulated_clock):
    """Queue depth, due counts, processed totals."""
    store, worker, _, _ = _build_runtime(fixture, simulated_clock, 1)
    click.echo(json.dumps(worker.status(), indent=2))
    store.close()


@main.group()
def simulate():
    """Deterministic synthetic ecosystems and scenario runs."""


@simulate.command("generate")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def simulate_generate(spec_path, out_dir):
    """Generate fixture files from a JSON graph spec."""
    spec = GraphSpec.from_json(spec_path)
    data = generate_graph(spec)
    data.write(out_dir)
    click.echo(f"wrote {len(data.users)} users, {len(data.edges)} edges to {out_dir}")


@simulate.command("run")
@click.option("--fixture", required=True, type=click.Path(exists=True))
@click.option("--hours", type=float, default=None,
              help="Simulated duration; omit to run to quiescence.")
@click.option("--workers", default=1, show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
def simulate_run(fixture, hours, workers, report_path):
    """Drive a full scenario under the simulated clock and report on it."""
    data = FixtureData.load(fixture)
    config = ScenarioConfig(workers=workers)
    result = run_scenario(data, config, duration_hours=hours)
    grants = result.log.of_kind("grant")
    summary = {
        "users_processed": result.report.users_processed,
        "api_calls": result.report.api_calls,
        "errors": result.report.errors,
        "discovered": result.report.discovered,
        "simulated_hours": round((result.clock.now() - config.start_time) / 3600.0, 3),
        "grants": len(grants),
        "budget_violations": sliding_window_grant_violations(
            grants, config.budget_per_hour),
    }
    click.echo(json.dumps(summary, indent=2))
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump({"summary": summary, "events": result.log.events}, fh, indent=1)
        click.echo(f"report written to {report_path}")
    result.store.close()


@main.group()
def snapshot():
    """Versioned point-in-time exports."""


@snapshot.command("create")
def snapshot_create():
    store = Store(os.environ.get("DATABASE_URL"))
    meta = store.create_snapshot(RealClock().now())
    click.echo(json.dumps({
        "snapshot_id": meta.snapshot_id, "user_count": meta.user_count,
        "edge_count": meta.edge_count, "collector_version": meta.collector_version,
    }, indent=2))
    store.close()


@snapshot.command("list")
def snapshot_list():
    store = Store(os.environ.get("DATABASE_URL"))
    for meta in store.list_snapshots():
        click.echo(f"{meta.snapshot_id}\t{meta.created_at}\t"
                   f"{meta.user_count} users\t{meta.edge_count} edges")
    store.close()


@main.command("serve")
@click.option("--bind", default=None, help="host:port (default BIND_ADDR or 127.0.0.1:8000)")
def serve(bind):
    """Serve the read-only HTTP API."""
    import uvicorn

    from .api import create_app

    addr = bind or os.environ.get("BIND_ADDR", "127.0.0.1:8000")
    host, _, port = addr.rpartition(":")
    app = create_app(database_url=os.environ.get("DATABASE_URL"))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
