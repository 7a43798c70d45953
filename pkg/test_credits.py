import math
import time

import numpy as np
import pytest

from credits import (CreditError, ResourceKind, TokenBucket, accrue, burst_duration, charge, consume, cpu_bucket,
                     credit_cost, disk_bucket, drain_segments, effective_rate, throttle_time, validate_bucket)


def test_credit_cost_units():
    # One CPU credit is one vCPU-minute; one disk credit is one I/O
    assert credit_cost(ResourceKind.CPU, 60.0) == pytest.approx(1.0)
    assert credit_cost(ResourceKind.DISK_IO, 300.0) == 300.0


def test_cpu_bucket_factory():
    bucket = cpu_bucket(8, 0.4)
    assert bucket.baseline_rate == pytest.approx(3.2)
    assert bucket.earn_rate == pytest.approx(3.2 / 60)
    assert bucket.capacity == pytest.approx(24 * 3600 * 3.2 / 60)
    assert bucket.peak_rate == 8
    assert bucket.balance == 0.0
    assert cpu_bucket(8, 0.4, initial_balance=None).balance == bucket.capacity


def test_disk_bucket_factory():
    bucket = disk_bucket(100)
    assert bucket.baseline_rate == 300
    assert bucket.earn_rate == 300
    assert bucket.peak_rate == 3000
    assert bucket.capacity == 5.4e6
    assert bucket.balance == 5.4e6
    assert disk_bucket(100, zeroed=True).balance == 0.0


def test_peak_below_baseline_rejected():
    with pytest.raises(CreditError, match="below baseline_rate"):
        TokenBucket(balance=0, capacity=10, earn_rate=1, baseline_rate=5, peak_rate=2,
                    resource_kind=ResourceKind.DISK_IO)


def test_validate_bucket_lists_every_problem():
    bucket = disk_bucket(100)
    broken = object.__new__(TokenBucket)
    object.__setattr__(broken, "balance", -1.0)
    object.__setattr__(broken, "capacity", 0.0)
    object.__setattr__(broken, "earn_rate", 500.0)
    object.__setattr__(broken, "baseline_rate", 300.0)
    object.__setattr__(broken, "peak_rate", 100.0)
    object.__setattr__(broken, "resource_kind", ResourceKind.DISK_IO)
    problems = validate_bucket(broken)
    assert len(problems) == 4
    assert validate_bucket(bucket) == []


def test_earn_faster_than_baseline_cost_rejected():
    with pytest.raises(CreditError, match="earn_rate"):
        TokenBucket(balance=0, capacity=100, earn_rate=1.0, baseline_rate=3.2, peak_rate=8)


def test_accrue_clamps_at_capacity():
    bucket = cpu_bucket(8, 0.4)
    assert accrue(bucket, 60).balance == pytest.approx(3.2)
    assert accrue(bucket, 10 ** 7).balance == bucket.capacity
    with pytest.raises(CreditError):
        accrue(bucket, -1)


def test_effective_rate_throttles_empty_bucket():
    empty = cpu_bucket(8, 0.4)
    assert effective_rate(empty, 8.0) == pytest.approx(3.2)
    assert effective_rate(empty, 1.0) == 1.0
    full = cpu_bucket(8, 0.4, initial_balance=None)
    assert effective_rate(full, 10.0) == 8


def test_ebs_burst_example():
    volume = disk_bucket(100)
    assert burst_duration(volume, 3000) == pytest.approx(2000.0)
    after, segments = drain_segments(volume, 3000, 2500)
    assert after.balance == 0.0
    assert segments[0] == (pytest.approx(2000.0), 3000)
    assert segments[1] == (pytest.approx(500.0), 300)
    assert effective_rate(after, 3000) == 300


def test_consume_reports_mean_grant():
    volume = disk_bucket(100)
    after, granted = consume(volume, 3000, 4000)
    assert after.balance == 0.0
    assert granted == pytest.approx((2000 * 3000 + 2000 * 300) / 4000)


def test_consume_is_step_size_independent():
    start = cpu_bucket(8, 0.4, initial_balance=50.0)
    whole, _ = consume(start, 6.0, 3000)
    pieces = start
    for _ in range(300):
        pieces, _ = consume(pieces, 6.0, 10)
    assert pieces.balance == pytest.approx(whole.balance, abs=1e-9)


def test_throttled_bucket_stays_empty():
    empty = cpu_bucket(8, 0.4)
    after, granted = consume(empty, 8.0, 3600)
    assert after.balance == 0.0
    assert granted == pytest.approx(3.2)


def test_charge_reports_overdraft():
    empty = cpu_bucket(8, 0.4)
    after, overdraft = charge(empty, 8.0, 60)
    assert after.balance == 0.0
    assert overdraft == pytest.approx(8.0 - 3.2)
    rich = cpu_bucket(8, 0.4, initial_balance=100.0)
    after, overdraft = charge(rich, 8.0, 60)
    assert overdraft == 0.0
    assert after.balance == pytest.approx(100.0 - 4.8)


def test_throttle_time():
    assert throttle_time(disk_bucket(100), 3000) == pytest.approx(2000.0)
    assert throttle_time(disk_bucket(100), 200) is None
    assert throttle_time(disk_bucket(100, zeroed=True), 3000) is None
    assert math.isinf(burst_duration(disk_bucket(100), 300))


def _oracle_seconds(balance, earn, cost, limit):
    """Whole seconds until a 1 s stepped bucket is empty, or None within `limit`."""
    for second in range(1, limit + 1):
        balance += earn - cost
        if balance <= 0:
            return second
    return None


def test_burst_duration_matches_stepped_oracle():
    rng = np.random.default_rng(20240601)
    started = time.perf_counter()
    limit = 5000
    for _ in range(100):
        if rng.random() < 0.5:
            bucket = cpu_bucket(int(rng.integers(1, 17)), float(rng.uniform(0.05, 0.9)),
                                initial_balance=float(rng.uniform(0, 200)))
            demand = float(rng.uniform(0, bucket.peak_rate * 1.2))
            cost = min(demand, bucket.peak_rate) / 60.0
        else:
            bucket = disk_bucket(float(rng.uniform(10, 900)), initial_balance=float(rng.uniform(0, 2e6)))
            demand = float(rng.uniform(0, 3500))
            cost = min(demand, bucket.peak_rate)
        analytic = burst_duration(bucket, demand)
        oracle = _oracle_seconds(bucket.balance, bucket.earn_rate, cost, limit)
        if oracle is None:
            assert analytic > limit - 1
        else:
            assert abs(analytic - oracle) <= 1.0
    assert time.perf_counter() - started < 5.0
