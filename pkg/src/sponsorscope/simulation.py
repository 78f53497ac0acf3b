"""Synthetic sponsorship ecosystems and the simulated-clock scenario harness.

The generator emits fixture files whose census satisfies requested marginals
exactly, which is how desk-scale runs reproduce the reference participation
tables. Everything is driven by one seeded Mersenne-Twister PRNG
(random.Random), whose core methods are stable across platforms and Python
versions, so the same spec always produces byte-identical fixtures.

The reachability oracle is deliberately independent of the scheduler: it does
a plain breadth-first sweep over the fixture files themselves.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .clock import SimulatedClock
from .geocode import CassetteGeocoder
from .model import CANONICAL_COUNTRIES
from .ratelimit import DEFAULT_BUDGET_PER_HOUR, CredentialPool
from .scheduler import HOUR, IngestWorker, RunReport, SchedulerConfig
from .source import FixtureData, FixtureProvider, SourceClient, format_timestamp
from .store import Store, StoreGeocodeCache

SIM_EPOCH = datetime(2026, 3, 1, tzinfo=timezone.utc).timestamp()

_PRONOUN_STRINGS = {
    "Masculine": ["he/him", "He/Him", "he/him/his"],
    "Feminine": ["she/her", "She/Her", "she/her/hers"],
    "OtherNeutral": ["they/them", "she/they", "any", "xe/xem", "he/they"],
}

_TIER_CENTS = [100, 300, 500, 1000, 2500, 5000]


class UnsatisfiableMarginals(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class GraphSpec:
    seed: int
    user_count: int
    org_count: int = 0
    # per account type: {"sponsored": n, "sponsoring": n, "both": n}
    role_marginals: dict = field(default_factory=dict)
    # per country: {"sponsored": n, "sponsoring": n, "both": n}
    country_marginals: dict | None = None
    pronoun_marginals: dict | None = None
    degree_model: tuple = ("powerlaw", 2.5)
    sponsorable_policy: str = "all"  # "all" | "recipients" | "mixed"
    location_fill: str = "none"  # locations for users without a country: "none" | "mixed"
    created_year_start: int = 2025

    @classmethod
    def from_json(cls, path: str | Path) -> "GraphSpec":
        data = json.loads(Path(path).read_text("utf-8"))
        if "degree_model" in data:
            data["degree_model"] = tuple(data["degree_model"])
        return cls(**data)


def _role_counts(spec: GraphSpec, account_type: str) -> tuple[int, int, int]:
    m = spec.role_marginals.get(account_type, {})
    return (int(m.get("sponsored", 0)), int(m.get("sponsoring", 0)), int(m.get("both", 0)))


def validate_spec(spec: GraphSpec) -> None:
    for account_type, population in (("User", spec.user_count), ("Org", spec.org_count)):
        sponsored, sponsoring, both = _role_counts(spec, account_type)
        total_roles = sponsored + sponsoring + both
        if total_roles > population:
            raise UnsatisfiableMarginals(
                f"{account_type}: role marginals sum to {total_roles} "
                f"but population is {population}")
    sponsored_all = sum(_role_counts(spec, t)[0] for t in ("User", "Org"))
    sponsoring_all = sum(_role_counts(spec, t)[1] for t in ("User", "Org"))
    both_all = sum(_role_counts(spec, t)[2] for t in ("User", "Org"))
    recipients = sponsored_all + both_all
    sponsors = sponsoring_all + both_all
    if sponsors > 0 and recipients == 0:
        raise UnsatisfiableMarginals("sponsoring users exist but nobody can receive")
    if recipients > 0 and sponsors == 0:
        raise UnsatisfiableMarginals("sponsored users exist but nobody can give")
    if both_all > 0 and recipients == 1 and sponsors == 1:
        raise UnsatisfiableMarginals(
            "a Both user cannot sponsor itself and no other participant exists")
    if spec.country_marginals:
        for column, total in (("sponsored", sponsored_all), ("sponsoring", sponsoring_all),
                              ("both", both_all)):
            assigned = sum(int(c.get(column, 0)) for c in spec.country_marginals.values())
            if assigned > total:
                raise UnsatisfiableMarginals(
                    f"country marginals assign {assigned} {column} users "
                    f"but only {total} exist")
        unknown = [c for c in spec.country_marginals if c not in CANONICAL_COUNTRIES]
        if unknown:
            raise UnsatisfiableMarginals(f"countries not in canonical list: {unknown}")
    if spec.pronoun_marginals:
        assigned = sum(int(v) for v in spec.pronoun_marginals.values())
        if assigned > spec.user_count + spec.org_count:
            raise UnsatisfiableMarginals(
                f"pronoun marginals assign {assigned} users but population is "
                f"{spec.user_count + spec.org_count}")
        unknown = [k for k in spec.pronoun_marginals if k not in _PRONOUN_STRINGS]
        if unknown:
            raise UnsatisfiableMarginals(f"unknown pronoun categories: {unknown}")


def _out_degree(rng: random.Random, spec: GraphSpec, max_targets: int) -> int:
    kind = spec.degree_model[0]
    if kind == "powerlaw":
        alpha = float(spec.degree_model[1])
        d = int(rng.paretovariate(alpha - 1.0))
    elif kind == "uniform":
        d = rng.randint(int(spec.degree_model[1]), int(spec.degree_model[2]))
    else:
        raise UnsatisfiableMarginals(f"unknown degree model {kind!r}")
    return max(1, min(d, max_targets))


def generate_graph(spec: GraphSpec) -> FixtureData:
    """Deterministic fixture satisfying every supplied marginal exactly."""
    validate_spec(spec)
    rng = random.Random(spec.seed)
    data = FixtureData()

    logins: dict[str, list[str]] = {"User": [], "Org": []}
    width = max(5, len(str(max(spec.user_count, spec.org_count))))
    logins["User"] = [f"user{i:0{width}d}" for i in range(spec.user_count)]
    logins["Org"] = [f"org{i:0{width}d}" for i in range(spec.org_count)]

    roles: dict[str, str] = {}
    pools = {"sponsored": [], "sponsoring": [], "both": [], "neither": []}
    for account_type in ("User", "Org"):
        sponsored, sponsoring, both = _role_counts(spec, account_type)
        members = logins[account_type][:]
        rng.shuffle(members)
        cursor = 0
        for role, count in (("sponsored", sponsored), ("sponsoring", sponsoring),
                            ("both", both)):
            for login in members[cursor:cursor + count]:
                roles[login] = role
                pools[role].append(login)
            cursor += count
        for login in members[cursor:]:
            roles[login] = "neither"
            pools["neither"].append(login)

    # Countries: draw from each role pool in order; leftovers get filler.
    locations: dict[str, str | None] = {}
    if spec.country_marginals:
        offsets = {"sponsored": 0, "sponsoring": 0, "both": 0}
        shuffled = {role: pools[role][:] for role in offsets}
        for pool in shuffled.values():
            rng.shuffle(pool)
        for country in sorted(spec.country_marginals):
            counts = spec.country_marginals[country]
            for role in ("sponsored", "sponsoring", "both"):
                take = int(counts.get(role, 0))
                start = offsets[role]
                for login in shuffled[role][start:start + take]:
                    locations[login] = country.casefold()
                offsets[role] += take

    all_logins = sorted(roles)
    if spec.location_fill == "mixed":
        fillers = ["privacy", "junk", "empty"]
        resolvable = sorted(CANONICAL_COUNTRIES)
        for login in all_logins:
            if login in locations:
                continue
            roll = rng.random()
            if roll < 0.70:
                locations[login] = rng.choice(resolvable).casefold()
            elif roll < 0.80:
                locations[login] = rng.choice(["Remote", "Earth", "Worldwide", "everywhere"])
            elif roll < 0.90:
                locations[login] = rng.choice(["asdfqwerty", "xyzzy plugh", "blorptown"])
            else:
                locations[login] = None

    pronouns: dict[str, str] = {}
    if spec.pronoun_marginals:
        unassigned = all_logins[:]
        rng.shuffle(unassigned)
        cursor = 0
        for category in ("Masculine", "Feminine", "OtherNeutral"):
            count = int(spec.pronoun_marginals.get(category, 0))
            for login in unassigned[cursor:cursor + count]:
                pronouns[login] = rng.choice(_PRONOUN_STRINGS[category])
            cursor += count

    # Edges. Recipients and sponsors come from role pools; phase one guarantees
    # every recipient an incoming edge, phase two spends remaining out-degree
    # with popularity-weighted target choice.
    recipients = sorted(pools["sponsored"] + pools["both"])
    sponsors = sorted(pools["sponsoring"] + pools["both"])
    rng.shuffle(recipients)
    rng.shuffle(sponsors)

    out_budget = {s: _out_degree(rng, spec, max(1, len(recipients))) for s in sponsors}
    out_used = {s: 0 for s in sponsors}
    edge_set: set[tuple[str, str]] = set()

    if recipients:
        idx = 0
        for r in recipients:
            for _ in range(len(sponsors)):
                s = sponsors[idx % len(sponsors)]
                idx += 1
                if s != r:
                    edge_set.add((s, r))
                    out_used[s] += 1
                    break
            else:
                raise UnsatisfiableMarginals(f"no possible sponsor for recipient {r}")

    if recipients:
        weights = None
        if spec.degree_model[0] == "powerlaw":
            weights = [1.0 / (i + 1) for i in range(len(recipients))]
        cumulative = None
        if weights:
            cumulative = []
            running = 0.0
            for w in weights:
                running += w
                cumulative.append(running)
        for s in sponsors:
            attempts = 0
            while out_used[s] < out_budget[s] and attempts < 50:
                attempts += 1
                if cumulative:
                    r = rng.choices(recipients, cum_weights=cumulative, k=1)[0]
                else:
                    r = rng.choice(recipients)
                if r == s or (s, r) in edge_set:
                    continue
                edge_set.add((s, r))
                out_used[s] += 1

    in_count: dict[str, int] = {}
    out_count: dict[str, int] = {}
    for s, r in edge_set:
        out_count[s] = out_count.get(s, 0) + 1
        in_count[r] = in_count.get(r, 0) + 1
    data.edges = sorted(edge_set)

    year_end = datetime(2026, 3, 1, tzinfo=timezone.utc).timestamp()
    year_start = datetime(spec.created_year_start, 1, 1, tzinfo=timezone.utc).timestamp()

    for login in all_logins:
        role = roles[login]
        account_type = "Org" if login.startswith("org") else "User"
        sponsorable = _sponsorable(spec, rng, role)
        min_tier = rng.choice(_TIER_CENTS) if sponsorable and rng.random() < 0.9 else None
        created_at = rng.uniform(year_start, year_end - 1)
        display_name = login.capitalize()
        if rng.random() < 0.01:
            display_name = f'{login.capitalize()} "the builder", esq.'
        data.users[login] = {
            "login": login,
            "account_type": account_type,
            "display_name": display_name,
            "location_raw": locations.get(login),
            "pronouns_raw": pronouns.get(login),
            "sponsorable": sponsorable,
            "min_tier_cents": min_tier,
            "created_at": format_timestamp(created_at),
            "sponsor_count": in_count.get(login, 0),
            "sponsoring_count": out_count.get(login, 0),
        }
        created_year = datetime.fromtimestamp(created_at, tz=timezone.utc).year
        busy = role in ("sponsored", "both")
        for year in range(created_year, 2027):
            data.activity[(login, year)] = {
                "login": login,
                "year": year,
                "commits": rng.randint(20, 800) if busy else rng.randint(0, 200),
                "pull_requests": rng.randint(0, 120),
                "issues": rng.randint(0, 80),
                "reviews": rng.randint(0, 150),
            }
    return data


def _sponsorable(spec: GraphSpec, rng: random.Random, role: str) -> bool:
    if spec.sponsorable_policy == "all":
        return True
    is_recipient = role in ("sponsored", "both")
    if spec.sponsorable_policy == "recipients":
        return is_recipient or role == "neither"
    # "mixed": recipients always; givers sometimes; isolated users half the time
    if is_recipient:
        return True
    if role == "sponsoring":
        return rng.random() < 0.1
    return rng.random() < 0.5


def reachable_oracle(fixture: FixtureData) -> set[str]:
    """Breadth-first closure over undirected sponsorship adjacency from all
    sponsorable seeds. Shares no traversal code with the scheduler."""
    adjacency: dict[str, list[str]] = {}
    for sponsor, recipient in fixture.edges:
        adjacency.setdefault(sponsor, []).append(recipient)
        adjacency.setdefault(recipient, []).append(sponsor)
    seeds = fixture.sponsorable_logins()
    seen: set[str] = set(seeds)
    frontier = deque(seeds)
    while frontier:
        current = frontier.popleft()
        for neighbor in adjacency.get(current, ()):
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append(neighbor)
    return seen


# -- scenario harness ------------------------------------------------------------


class CrashSignal(Exception):
    """Raised by the crash hook to abort a scenario mid-run."""


class EventLog:
    """Ordered scenario events; callable so components can use it as a sink."""

    def __init__(self):
        self.events: list[dict] = []

    def __call__(self, kind: str, fields: dict) -> None:
        self.events.append({"kind": kind, **fields})

    def of_kind(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["kind"] == kind]

    def to_ndjson(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True) for e in self.events) + "\n"


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    credential_count: int = 3
    budget_per_hour: int = DEFAULT_BUDGET_PER_HOUR
    active_refresh_hours: float = 24.0
    inactive_refresh_hours: float = 720.0
    workers: int = 1
    start_time: float = SIM_EPOCH
    rng_seed: int = 0
    geocode: bool = True


@dataclass
class ScenarioResult:
    log: EventLog
    report: RunReport
    store: Store
    clock: SimulatedClock
    worker: IngestWorker
    crashed: bool = False


def run_scenario(
    fixture: FixtureData,
    config: ScenarioConfig = ScenarioConfig(),
    duration_hours: float | None = None,
    store_path: str = ":memory:",
    crash_after_commits: int | None = None,
    resume_clock_at: float | None = None,
) -> ScenarioResult:
    """Drive the full ingest loop against a fixture under the simulated clock.

    duration_hours None means run until quiescent (nothing due right now).
    crash_after_commits aborts the run just before the Nth store commit, the
    way a process death between durability points would. Pass the crashed
    store path plus resume_clock_at to continue a previous run.
    """
    store = Store(store_path)
    clock = SimulatedClock(resume_clock_at if resume_clock_at is not None
                           else config.start_time)
    provider = FixtureProvider(fixture, clock)
    pool = CredentialPool(
        [f"token{i}" for i in range(config.credential_count)], config.budget_per_hour)
    log = EventLog()
    client = SourceClient(provider, pool, clock,
                          rng=random.Random(config.rng_seed), on_event=log)
    scheduler_config = SchedulerConfig(
        active_refresh_interval=config.active_refresh_hours * HOUR,
        inactive_refresh_interval=config.inactive_refresh_hours * HOUR,
        worker_count=config.workers,
    )
    worker = IngestWorker(
        store, client, clock, scheduler_config,
        geocoder=CassetteGeocoder() if config.geocode else None,
        geocode_cache=StoreGeocodeCache(store) if config.geocode else None,
        on_event=log,
    )

    crashed = False
    if crash_after_commits is not None:
        remaining = [crash_after_commits]

        def hook():
            remaining[0] -= 1
            if remaining[0] < 0:
                raise CrashSignal()

        store.commit_hook = hook

    report = RunReport()
    try:
        if store.queue_depth() == 0 and not store.all_logins():
            worker.seed()
        until = None if duration_hours is None else clock.now() + duration_hours * HOUR
        report = worker.run_loop(until_time=until,
                                 stop_when_idle=duration_hours is None)
    except CrashSignal:
        crashed = True
        store.close()
        store = Store(store_path) if store_path != ":memory:" else store
    return ScenarioResult(log, report, store, clock, worker, crashed)


# -- event-log oracles -------------------------------------------------------------


def sliding_window_grant_violations(
    grants: list[dict], budget: int, window: float = 3600.0
) -> int:
    """Count grant events whose trailing window exceeds the budget, per token.

    Independent re-check over the raw event log: for every grant, the total
    cost granted to that token in (t - window, t] must stay within budget.
    """
    by_token: dict[str, list[tuple[float, int]]] = {}
    for g in grants:
        by_token.setdefault(g["token"], []).append((g["t"], g["cost"]))
    violations = 0
    for rows in by_token.values():
        rows.sort()
        start = 0
        in_window = 0
        for i, (t, cost) in enumerate(rows):
            in_window += cost
            while rows[start][0] <= t - window:
                in_window -= rows[start][1]
                start += 1
            if in_window > budget:
                violations += 1
    return violations


def profile_fetch_counts(log: EventLog) -> dict[str, int]:
    counts: dict[str, int] = {}
    for event in log.of_kind("fetch"):
        if event.get("call") == "profile":
            counts[event["login"]] = counts.get(event["login"], 0) + 1
    return counts


def store_fingerprint(store: Store) -> dict:
    """Canonical dump of user/edge/activity/queue state for equality checks."""
    conn = store._conn
    users = [tuple(r) for r in conn.execute(
        "SELECT login, account_type, display_name, location_raw, location_outcome, "
        "geo_country, geo_importance, pronouns_raw, pronoun_category, sponsor_count, "
        "sponsoring_count, sponsorable, min_tier_cents, created_at, first_seen_at, "
        "last_fetched_at, quality_flag, is_stub, retired FROM users ORDER BY login")]
    edges = [tuple(r) for r in conn.execute(
        "SELECT sponsor_login, recipient_login, first_seen_at, last_seen_at, ended_at "
        "FROM edges ORDER BY sponsor_login, recipient_login, first_seen_at")]
    activity = [tuple(r) for r in conn.execute(
        "SELECT login, year, commits, pull_requests, issues, reviews, complete "
        "FROM activity ORDER BY login, year")]
    queue = [tuple(r) for r in conn.execute(
        "SELECT login, due_at, active FROM queue ORDER BY login")]
    return {"users": users, "edges": edges, "activity": activity, "queue": queue}
