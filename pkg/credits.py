"""
Token-bucket dynamics for credit-governed resources (burstable CPU, EBS-style disk I/O).

A bucket earns credits at a constant rate, spends them when the resource is served
above what the earn rate pays for, and serves at most the baseline rate once the
balance reaches zero. All functions are pure: they take a TokenBucket and return a
new one.

Credit units:
  cpu      one credit buys one vCPU at 100% for one minute
  disk_io  one credit buys one I/O operation
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

logger = logging.getLogger(__name__)

CPU_CREDIT_SECONDS = 60.0
CPU_CAPACITY_HOURS = 24.0

DISK_IOPS_PER_GB = 3.0
DISK_PEAK_IOPS = 3000.0
DISK_CAPACITY = 5.4e6

# Balances this close to zero (relative to capacity) are treated as empty
EMPTY_TOLERANCE = 1e-12


class CreditError(ValueError):
    """Raised when a bucket or an operation argument violates the bucket contract."""


class ResourceKind(str, Enum):
    CPU = "cpu"
    DISK_IO = "disk_io"


def credit_cost(kind, rate):
    """Credits per second spent while serving `rate` resource units per second."""
    if kind == ResourceKind.CPU:
        return rate / CPU_CREDIT_SECONDS
    return rate


@dataclass(frozen=True)
class TokenBucket:
    """
    Credit state of one resource of one VM.

    Attributes:
        balance: Current credits, 0 <= balance <= capacity
        capacity: Bucket cap
        earn_rate: Credits earned per second
        baseline_rate: Service rate guaranteed with an empty bucket
        peak_rate: Maximum service rate while credits last
        resource_kind: cpu or disk_io
    """
    balance: float
    capacity: float
    earn_rate: float
    baseline_rate: float
    peak_rate: float
    resource_kind: ResourceKind = ResourceKind.CPU

    def __post_init__(self):
        problems = validate_bucket(self)
        if problems:
            raise CreditError("; ".join(problems))

    @property
    def is_empty(self):
        return self.balance <= 0.0


def validate_bucket(bucket):
    """Return the list of contract violations of a bucket (empty when valid)."""
    problems = []
    if not bucket.capacity > 0:
        problems.append(f"capacity must be > 0 (got {bucket.capacity})")
    if bucket.earn_rate < 0:
        problems.append(f"earn_rate must be >= 0 (got {bucket.earn_rate})")
    if bucket.baseline_rate < 0:
        problems.append(f"baseline_rate must be >= 0 (got {bucket.baseline_rate})")
    if bucket.peak_rate < bucket.baseline_rate:
        problems.append(f"peak_rate {bucket.peak_rate} is below baseline_rate {bucket.baseline_rate}")
    if bucket.balance < 0 or bucket.balance > bucket.capacity:
        problems.append(f"balance {bucket.balance} outside [0, {bucket.capacity}]")
    baseline_cost = credit_cost(bucket.resource_kind, bucket.baseline_rate)
    if bucket.earn_rate > baseline_cost * (1 + 1e-12) + 1e-15:
        problems.append(
            f"earn_rate {bucket.earn_rate} exceeds the cost of baseline service ({baseline_cost})"
        )
    return problems


def _check_non_negative(name, value):
    if value < 0 or math.isnan(value):
        raise CreditError(f"{name} must be >= 0 (got {value})")


def _settle(bucket, balance):
    """Clamp a raw balance into the bucket and snap float residue at zero."""
    if balance <= bucket.capacity * EMPTY_TOLERANCE:
        balance = 0.0
    return replace(bucket, balance=min(bucket.capacity, balance))


def accrue(bucket, dt):
    """Add earned credits for `dt` idle seconds, clamped at capacity."""
    _check_non_negative("dt", dt)
    return replace(bucket, balance=min(bucket.capacity, bucket.balance + bucket.earn_rate * dt))


def effective_rate(bucket, demand):
    """
    Service granted right now for a demand.

    Up to peak_rate while the bucket holds credits; clamped to baseline_rate
    once it is empty.
    """
    _check_non_negative("demand", demand)
    if bucket.balance > 0:
        return min(demand, bucket.peak_rate)
    return min(demand, bucket.baseline_rate)


def drain_segments(bucket, demand, dt):
    """
    Integrate a constant demand over `dt` seconds.

    The step is split analytically at the instant the balance reaches zero, so a
    single long step gives the same result as many short ones.

    Args:
        bucket: Starting TokenBucket
        demand: Requested rate (resource units per second)
        dt: Step length in seconds

    Returns:
        (bucket after dt, [(segment_seconds, granted_rate), ...]) with at most two segments
    """
    _check_non_negative("demand", demand)
    _check_non_negative("dt", dt)
    if dt == 0:
        return bucket, []

    kind = bucket.resource_kind
    granted = effective_rate(bucket, demand)
    net = bucket.earn_rate - credit_cost(kind, granted)

    if bucket.balance <= 0 and demand > bucket.baseline_rate:
        # Throttled: baseline service exactly pays for itself
        return replace(bucket, balance=0.0), [(dt, granted)]

    if net >= 0 or bucket.balance <= 0:
        return _settle(bucket, bucket.balance + net * dt), [(dt, granted)]

    crossing = bucket.balance / -net
    if crossing >= dt:
        return _settle(bucket, bucket.balance + net * dt), [(dt, granted)]

    empty = replace(bucket, balance=0.0)
    after, tail = drain_segments(empty, demand, dt - crossing)
    return after, [(crossing, granted)] + tail


def consume(bucket, demand, dt):
    """
    Serve a constant demand for `dt` seconds.

    Returns:
        (bucket after dt, granted) where granted is the mean service rate over
        the step; it equals effective_rate at the start of the step unless the
        bucket ran empty inside it.
    """
    after, segments = drain_segments(bucket, demand, dt)
    if not segments:
        return after, effective_rate(bucket, demand)
    served = sum(seconds * rate for seconds, rate in segments)
    return after, served / dt


def charge(bucket, granted, dt):
    """
    Unlimited-mode accounting: the grant is forced, never throttled.

    Credits that would take the balance below zero are returned as overdraft
    (surplus credits the tenant is billed for).

    Returns:
        (bucket after dt, overdraft credits)
    """
    _check_non_negative("granted", granted)
    _check_non_negative("dt", dt)
    raw = bucket.balance + (bucket.earn_rate - credit_cost(bucket.resource_kind, granted)) * dt
    overdraft = -raw if raw < 0 else 0.0
    return _settle(bucket, max(raw, 0.0)), overdraft


def burst_duration(bucket, demand):
    """Seconds a constant demand can be served above what earnings pay for (math.inf if forever)."""
    _check_non_negative("demand", demand)
    cost = credit_cost(bucket.resource_kind, min(demand, bucket.peak_rate))
    if cost <= bucket.earn_rate:
        return math.inf
    return bucket.balance / (cost - bucket.earn_rate)


def throttle_time(bucket, demand):
    """
    Seconds until the granted rate for a constant demand drops, or None if it never does.

    Differs from burst_duration in that running the balance to zero only
    matters when the demand is above baseline.
    """
    if bucket.balance <= 0 or demand <= bucket.baseline_rate:
        return None
    duration = burst_duration(bucket, demand)
    return None if math.isinf(duration) else duration


def cpu_bucket(vcpu_count, baseline_fraction, initial_balance=0.0, capacity_hours=CPU_CAPACITY_HOURS,
               peak_fraction=1.0):
    """
    CPU bucket for a burstable VM.

    Earns baseline_fraction * vcpu_count credits per minute; holds capacity_hours
    worth of earnings.
    """
    baseline_rate = baseline_fraction * vcpu_count
    earn_rate = credit_cost(ResourceKind.CPU, baseline_rate)
    capacity = capacity_hours * 3600.0 * earn_rate
    if capacity <= 0:
        raise CreditError(f"cpu bucket needs a positive baseline (baseline_fraction={baseline_fraction})")
    balance = capacity if initial_balance is None else initial_balance
    return TokenBucket(
        balance=balance,
        capacity=capacity,
        earn_rate=earn_rate,
        baseline_rate=baseline_rate,
        peak_rate=peak_fraction * vcpu_count,
        resource_kind=ResourceKind.CPU,
    )


def disk_bucket(volume_gb, zeroed=False, initial_balance=None, peak_iops=DISK_PEAK_IOPS,
                capacity=DISK_CAPACITY, iops_per_gb=DISK_IOPS_PER_GB):
    """
    EBS-style I/O bucket for a volume.

    Baseline and earn rate are iops_per_gb per GB; volumes start full unless
    `zeroed` (or an explicit initial balance) says otherwise.
    """
    baseline_rate = iops_per_gb * volume_gb
    if zeroed:
        balance = 0.0
    elif initial_balance is not None:
        balance = initial_balance
    else:
        balance = capacity
    return TokenBucket(
        balance=balance,
        capacity=capacity,
        earn_rate=baseline_rate,
        baseline_rate=baseline_rate,
        peak_rate=peak_iops,
        resource_kind=ResourceKind.DISK_IO,
    )
