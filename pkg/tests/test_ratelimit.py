import random
import threading

import pytest

from sponsorscope.clock import SimulatedClock
from sponsorscope.ratelimit import (
    WINDOW_SECONDS,
    Credential,
    CredentialPool,
    Grant,
    UnsatisfiableCostError,
    acquire_request_slot,
    select_credential,
)

from .conftest import T0


def brute_force_window_check(grants, budget, window=WINDOW_SECONDS):
    """Independent safety oracle: every trailing window within budget.

    O(n^2) on purpose; shares nothing with the pool's accounting.
    """
    for t, _token, _cost in grants:
        spent = sum(c for (t2, tok2, c) in grants
                    if _token == tok2 and t - window < t2 <= t)
        if spent > budget:
            return False
    return True


class TestSelectCredential:
    def test_max_remaining_wins(self):
        pool = [
            Credential("t1", 5000, 10, T0 + 60),
            Credential("t2", 5000, 500, T0 + 60),
            Credential("t3", 5000, 3, T0 + 60),
        ]
        assert select_credential(pool, T0).token_id == "t2"

    def test_all_exhausted_earliest_reset_wins(self):
        pool = [
            Credential("t1", 5000, 0, T0 + 600),
            Credential("t2", 5000, 0, T0 + 120),
        ]
        assert select_credential(pool, T0).token_id == "t2"

    def test_tie_breaks_to_lowest_token_id(self):
        pool = [
            Credential("t2", 5000, 7, None),
            Credential("t1", 5000, 7, None),
        ]
        assert select_credential(pool, T0).token_id == "t1"


class TestAcquire:
    def test_grants_until_exhausted_then_waits(self):
        clock = SimulatedClock(T0)
        pool = CredentialPool(["t1"], budget_per_hour=5)
        for _ in range(5):
            assert isinstance(pool.try_acquire(1, clock.now()), Grant)
        wait = pool.try_acquire(1, clock.now())
        assert wait == pytest.approx(WINDOW_SECONDS)

    def test_exhausted_credential_reports_time_to_reset(self):
        clock = SimulatedClock(T0)
        pool = CredentialPool(["t1"], budget_per_hour=10)
        pool.preconsume("t1", 10, T0 - (WINDOW_SECONDS - 120))
        wait = pool.try_acquire(1, clock.now())
        assert wait == pytest.approx(120.0)
        snapshot = pool.snapshot(clock.now())[0]
        assert snapshot.remaining == 0
        assert snapshot.reset_at == pytest.approx(T0 + 120.0)

    def test_unsatisfiable_cost_raises(self):
        pool = CredentialPool(["t1", "t2"], budget_per_hour=5000)
        with pytest.raises(UnsatisfiableCostError):
            pool.try_acquire(6000, T0)

    def test_blocking_acquire_sleeps_until_grant(self):
        clock = SimulatedClock(T0)
        pool = CredentialPool(["t1"], budget_per_hour=1)
        assert acquire_request_slot(pool, 1, clock).waited == 0.0
        grant = acquire_request_slot(pool, 1, clock)
        assert grant.waited == pytest.approx(WINDOW_SECONDS)
        assert clock.now() == pytest.approx(T0 + WINDOW_SECONDS)

    def test_15000_grants_in_first_hour_with_three_credentials(self):
        # Replay oracle: 3 x 5000/hour must absorb 15,000 unit requests at t0;
        # the 15,001st waits exactly one window.
        clock = SimulatedClock(T0)
        pool = CredentialPool(["t1", "t2", "t3"], budget_per_hour=5000)
        grants = []
        for _ in range(15000):
            got = pool.try_acquire(1, clock.now())
            assert isinstance(got, Grant)
            grants.append((got.granted_at, got.token_id, got.cost))
        assert clock.now() == T0  # nothing waited
        overflow = pool.try_acquire(1, clock.now())
        assert overflow == pytest.approx(WINDOW_SECONDS)
        per_token = {}
        for _, token, _cost in grants:
            per_token[token] = per_token.get(token, 0) + 1
        assert per_token == {"t1": 5000, "t2": 5000, "t3": 5000}

    def test_remaining_never_exceeds_budget(self):
        clock = SimulatedClock(T0)
        pool = CredentialPool(["t1", "t2"], budget_per_hour=50)
        rng = random.Random(7)
        for _ in range(400):
            acquire_request_slot(pool, rng.randint(1, 5), clock)
            for view in pool.snapshot(clock.now()):
                assert 0 <= view.remaining <= view.budget_per_hour
                if view.remaining < view.budget_per_hour:
                    assert view.reset_at > clock.now()


class TestSlidingWindowSafety:
    def test_random_workload_never_violates_budget(self):
        clock = SimulatedClock(T0)
        pool = CredentialPool(["a", "b"], budget_per_hour=40)
        rng = random.Random(13)
        grants = []
        for _ in range(500):
            if rng.random() < 0.3:
                clock.sleep(rng.uniform(0, 900))
            grant = acquire_request_slot(pool, rng.randint(1, 4), clock)
            grants.append((grant.granted_at, grant.token_id, grant.cost))
        assert brute_force_window_check(grants, 40)

    def test_throughput_tracks_theoretical_minimum(self):
        # 600 unit requests over 2 x 100/hour: ceil(600/200) = 3 hours.
        clock = SimulatedClock(T0)
        pool = CredentialPool(["a", "b"], budget_per_hour=100)
        last = T0
        for _ in range(600):
            last = acquire_request_slot(pool, 1, clock).granted_at
        assert last - T0 <= 3 * WINDOW_SECONDS * 1.05

    def test_concurrent_acquirers_never_overcommit(self):
        clock = SimulatedClock(T0)
        pool = CredentialPool(["a"], budget_per_hour=100)
        grants = []
        lock = threading.Lock()

        def worker():
            for _ in range(10):
                got = pool.try_acquire(1, clock.now())
                if isinstance(got, Grant):
                    with lock:
                        grants.append(got)

        threads = [threading.Thread(target=worker) for _ in range(20)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(grants) == 100  # exactly the budget, never more
