"""
Credit telemetry: coarse actual balance samples, utilization windows, and the
linear predictor that keeps the scheduler's credit snapshot fresh between samples.

The monitor mimics a metrics service: actual balances every actual period,
utilization-based predictions every prediction period.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

from credits import credit_cost, ResourceKind

logger = logging.getLogger(__name__)

DEFAULT_ACTUAL_PERIOD_S = 300.0
DEFAULT_PREDICT_PERIOD_S = 60.0


class TelemetryError(ValueError):
    """Raised when a snapshot update does not cover the cluster."""


class Provenance(str, Enum):
    ACTUAL = "actual"
    PREDICTED = "predicted"


@dataclass(frozen=True)
class CreditReading:
    cpu_credits: float = None
    disk_credits: float = 0.0


@dataclass(frozen=True)
class SnapshotEntry:
    """
    Credits of one node as the scheduler sees them.

    entry_time is the instant the values describe; source_time is the actual
    sample they were extrapolated from (equal to entry_time for actual entries).
    """
    cpu_credits: float
    disk_credits: float
    provenance: Provenance
    entry_time: float
    source_time: float

    def as_dict(self):
        return {
            "cpu_credits": self.cpu_credits,
            "disk_credits": self.disk_credits,
            "provenance": self.provenance.value,
            "entry_time": self.entry_time,
            "source_time": self.source_time,
        }


@dataclass(frozen=True)
class CreditSnapshot:
    entries: dict
    snapshot_time: float

    def age(self, node_id, now):
        return now - self.entries[node_id].entry_time

    def as_dict(self):
        return {node_id: self.entries[node_id].as_dict() for node_id in sorted(self.entries)}


@dataclass(frozen=True)
class UtilizationSample:
    node_id: str
    window_start: float
    window_end: float
    mean_cpu: float
    mean_iops: float

    def __post_init__(self):
        if not self.window_end > self.window_start:
            raise TelemetryError(f"Empty utilization window for {self.node_id}")
        if self.mean_cpu < 0 or self.mean_iops < 0:
            raise TelemetryError(f"Negative utilization for {self.node_id}")

    def rate_for(self, kind):
        return self.mean_cpu if kind == ResourceKind.CPU else self.mean_iops


def sample_actual(cluster, now):
    """Exact bucket balances of every node at `now`."""
    readings = {}
    for node_id in cluster.node_ids:
        node = cluster.nodes[node_id]
        readings[node_id] = CreditReading(
            cpu_credits=None if node.cpu_bucket is None else node.cpu_bucket.balance,
            disk_credits=node.disk_bucket.balance,
        )
    return readings


def predict_balance(last_actual, bucket_params, util, elapsed):
    """
    Extrapolate a balance from the last known value.

    Args:
        last_actual: Credits at the start of the window
        bucket_params: TokenBucket supplying earn_rate, capacity and kind
        util: UtilizationSample covering the elapsed interval
        elapsed: Seconds since last_actual

    Returns:
        clamp(last + (earn - cost(mean rate)) * elapsed, 0, capacity)
    """
    if elapsed < 0:
        raise TelemetryError(f"elapsed must be >= 0 (got {elapsed})")
    if elapsed == 0 or util is None:
        return last_actual
    kind = bucket_params.resource_kind
    value = last_actual + (bucket_params.earn_rate - credit_cost(kind, util.rate_for(kind))) * elapsed
    return min(bucket_params.capacity, max(0.0, value))


def refresh_snapshot(previous, inputs, now, provenance=Provenance.ACTUAL, prediction_period=DEFAULT_PREDICT_PERIOD_S):
    """
    Fold new readings into the scheduler's snapshot.

    Actual readings always overwrite. Predicted readings overwrite only entries
    at least one prediction period old.

    Args:
        previous: CreditSnapshot or None before the first actual sample
        inputs: node_id -> CreditReading, covering every node
        now: Simulated seconds
        provenance: Whether the readings are actual or predicted
        prediction_period: Minimum entry age for a predicted overwrite

    Returns:
        CreditSnapshot
    """
    provenance = Provenance(provenance)
    expected = set(previous.entries) if previous is not None else set(inputs)
    missing = sorted(expected - set(inputs))
    if missing:
        raise TelemetryError(f"Telemetry inputs missing nodes: {missing}")
    if previous is None and provenance == Provenance.PREDICTED:
        raise TelemetryError("A prediction needs a previous snapshot to extrapolate from")

    entries = dict(previous.entries) if previous is not None else {}
    for node_id, reading in inputs.items():
        if provenance == Provenance.ACTUAL:
            entries[node_id] = SnapshotEntry(reading.cpu_credits, reading.disk_credits,
                                             Provenance.ACTUAL, now, now)
            continue
        current = entries[node_id]
        if now - current.entry_time + 1e-9 < prediction_period:
            continue
        entries[node_id] = SnapshotEntry(reading.cpu_credits, reading.disk_credits,
                                         Provenance.PREDICTED, now, current.source_time)
    return CreditSnapshot(entries=entries, snapshot_time=now)


@dataclass
class Monitor:
    """
    Stateful telemetry loop owned by the engine.

    Tracks, per node, the cumulative usage counters at the snapshot entry time so
    the next prediction can use the mean utilization since that entry.
    """
    predict_period: float = DEFAULT_PREDICT_PERIOD_S
    actual_period: float = DEFAULT_ACTUAL_PERIOD_S
    noise_std: float = 0.0
    rng: object = None
    snapshot: CreditSnapshot = None
    usage_at_entry: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def observe_actual(self, cluster, usage, now):
        """
        Record an actual sample.

        Args:
            cluster: Cluster being observed
            usage: node_id -> (cumulative vCPU-seconds, cumulative disk ops)
            now: Simulated seconds
        """
        readings = sample_actual(cluster, now)
        if self.noise_std > 0:
            readings = self._with_noise(cluster, readings)
        self.snapshot = refresh_snapshot(self.snapshot, readings, now, Provenance.ACTUAL, self.predict_period)
        for node_id in readings:
            self.usage_at_entry[node_id] = usage[node_id]
        self.history.append(("actual", now, self.snapshot))
        return self.snapshot

    def observe_predicted(self, cluster, usage, now):
        """Extrapolate every stale entry from its entry time to `now`."""
        readings = {}
        for node_id in cluster.node_ids:
            node = cluster.nodes[node_id]
            entry = self.snapshot.entries[node_id]
            elapsed = now - entry.entry_time
            util = None
            if elapsed > 0:
                cpu_then, ops_then = self.usage_at_entry[node_id]
                cpu_now, ops_now = usage[node_id]
                util = UtilizationSample(
                    node_id=node_id,
                    window_start=entry.entry_time,
                    window_end=now,
                    mean_cpu=max(0.0, (cpu_now - cpu_then) / elapsed),
                    mean_iops=max(0.0, (ops_now - ops_then) / elapsed),
                )
            cpu = None
            if node.cpu_bucket is not None and entry.cpu_credits is not None:
                cpu = predict_balance(entry.cpu_credits, node.cpu_bucket, util, elapsed)
            disk = predict_balance(entry.disk_credits, node.disk_bucket, util, elapsed)
            readings[node_id] = CreditReading(cpu_credits=cpu, disk_credits=disk)

        previous = self.snapshot
        self.snapshot = refresh_snapshot(previous, readings, now, Provenance.PREDICTED, self.predict_period)
        for node_id, entry in self.snapshot.entries.items():
            if entry is not previous.entries[node_id]:
                self.usage_at_entry[node_id] = usage[node_id]
        self.history.append(("predicted", now, self.snapshot))
        return self.snapshot

    def _with_noise(self, cluster, readings):
        noisy = {}
        for node_id in sorted(readings):
            node = cluster.nodes[node_id]
            reading = readings[node_id]
            cpu = reading.cpu_credits
            if cpu is not None:
                cpu = min(node.cpu_bucket.capacity, max(0.0, cpu + float(self.rng.normal(0.0, self.noise_std))))
            disk = reading.disk_credits + float(self.rng.normal(0.0, self.noise_std))
            noisy[node_id] = CreditReading(cpu, min(node.disk_bucket.capacity, max(0.0, disk)))
        return noisy

    def max_staleness(self, now):
        if self.snapshot is None:
            return None
        return max(now - e.entry_time for e in self.snapshot.entries.values())
