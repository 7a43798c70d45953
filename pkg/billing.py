"""
Cost accounting for simulated runs.

Instances are billed per hour by class. Unlimited-mode burstable nodes also pay
for surplus credits: CPU use above baseline, averaged per instance over 24 hours
(or the instance lifetime when shorter). Headroom on other nodes never offsets it.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from cluster import InstanceClass

logger = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0
SURPLUS_WINDOW_S = 24 * SECONDS_PER_HOUR
PARITY_USAGE = 0.525

# Hourly on-demand prices of an 8-vCPU burstable / general-purpose pair
DEFAULT_BURSTABLE_PRICE = 0.3328
DEFAULT_GENERAL_PRICE = 0.384
DEFAULT_BASELINE_FRACTION = 0.4
DEFAULT_VCPU_COUNT = 8
DEFAULT_STORAGE_PRICE = 0.10


class BillingError(ValueError):
    """Raised for unknown instance classes, negative durations and empty usage histories."""


@dataclass(frozen=True)
class PricingTable:
    """
    Prices used for a cost report.

    Attributes:
        hourly: instance class -> money per hour
        surplus_per_vcpu_hour: money per vCPU-hour of above-baseline usage
        storage_per_gb_month: informational volume price
        managed_multiplier: premium of a managed service over raw instances (reported separately)
    """
    hourly: dict
    surplus_per_vcpu_hour: float
    storage_per_gb_month: float = DEFAULT_STORAGE_PRICE
    managed_multiplier: float = 1.0

    def __post_init__(self):
        prices = list(self.hourly.values()) + [self.surplus_per_vcpu_hour, self.storage_per_gb_month,
                                               self.managed_multiplier]
        if any(p < 0 or math.isnan(p) for p in prices):
            raise BillingError("All prices must be >= 0")

    @classmethod
    def calibrated(cls, burstable_price=DEFAULT_BURSTABLE_PRICE, general_price=DEFAULT_GENERAL_PRICE,
                   baseline_fraction=DEFAULT_BASELINE_FRACTION, vcpu_count=DEFAULT_VCPU_COUNT,
                   parity_usage=PARITY_USAGE, **kwargs):
        """
        Derive the surplus price from the parity anchor.

        A burstable node averaging `parity_usage` over the window costs exactly
        one general-purpose node for the same window.
        """
        if parity_usage <= baseline_fraction:
            raise BillingError("parity usage must be above the baseline fraction")
        surplus = (general_price - burstable_price) / ((parity_usage - baseline_fraction) * vcpu_count)
        hourly = {
            InstanceClass.BURSTABLE: burstable_price,
            InstanceClass.BURSTABLE_UNLIMITED: burstable_price,
            InstanceClass.GENERAL_PURPOSE: general_price,
        }
        return cls(hourly=hourly, surplus_per_vcpu_hour=surplus, **kwargs)

    def price_of(self, instance_class):
        try:
            return self.hourly[InstanceClass(instance_class)]
        except (KeyError, ValueError):
            raise BillingError(f"No hourly price for instance class {instance_class}")


def instance_cost(pricing, instance_class, duration_s):
    """Hourly price times duration in hours."""
    if duration_s < 0:
        raise BillingError(f"duration must be >= 0 (got {duration_s})")
    return pricing.price_of(instance_class) * duration_s / SECONDS_PER_HOUR


def unlimited_surplus(usage_history, baseline_fraction, vcpu_count, window_s=SURPLUS_WINDOW_S):
    """
    Surplus vCPU-hours billed to one unlimited instance.

    The lifetime is cut into consecutive averaging windows (the last one may be
    shorter); each window bills max(0, mean usage - baseline) * vCPUs * hours.

    Args:
        usage_history: [(seconds, mean CPU utilization fraction), ...] covering the lifetime
        baseline_fraction: Baseline as a fraction of the instance's vCPUs
        vcpu_count: vCPUs of the instance
        window_s: Averaging window

    Returns:
        Billed surplus in vCPU-hours
    """
    pieces = [(float(s), float(u)) for s, u in usage_history if s > 0]
    if not pieces:
        raise BillingError("Usage history is empty")

    surplus = 0.0
    window_used, window_usage = 0.0, 0.0
    for seconds, util in pieces:
        while seconds > 0:
            take = min(seconds, window_s - window_used)
            window_used += take
            window_usage += util * take
            seconds -= take
            if window_used >= window_s:
                surplus += _window_surplus(window_usage, window_used, baseline_fraction, vcpu_count)
                window_used, window_usage = 0.0, 0.0
    if window_used > 0:
        surplus += _window_surplus(window_usage, window_used, baseline_fraction, vcpu_count)
    return surplus


def _window_surplus(usage_seconds, window_seconds, baseline_fraction, vcpu_count):
    mean_usage = usage_seconds / window_seconds
    return max(0.0, mean_usage - baseline_fraction) * vcpu_count * window_seconds / SECONDS_PER_HOUR


def usage_pieces(node_rows, start_s, end_s):
    """
    Per-window (seconds, mean utilization) pieces of one node clipped to [start_s, end_s].

    Args:
        node_rows: DataFrame of one node's rows (time, cpu_seconds) sorted by time
        start_s, end_s: Billing interval

    Returns:
        List of (seconds, mean granted vCPUs)
    """
    times = node_rows["time"].to_numpy(dtype=float)
    used = node_rows["cpu_seconds"].to_numpy(dtype=float)
    if len(times) == 0 or end_s <= start_s:
        return []
    cuts = np.unique(np.concatenate([[start_s, end_s], times[(times > start_s) & (times < end_s)]]))
    cumulative = np.interp(cuts, times, used)
    return [(float(b - a), float((cb - ca) / (b - a))) for a, b, ca, cb in zip(cuts, cuts[1:], cumulative, cumulative[1:])]


@dataclass
class CostReport:
    nodes: pd.DataFrame
    billed_hours: float
    instance_total: float
    surplus_total: float
    managed_total: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def total(self):
        return self.instance_total + self.surplus_total

    def to_dict(self):
        return {
            "billed_hours": self.billed_hours,
            "instance_total": self.instance_total,
            "surplus_total": self.surplus_total,
            "total": self.total,
            "managed_total": self.managed_total,
            "nodes": self.nodes.to_dict(orient="records"),
            "notes": list(self.notes),
        }


def scenario_cost(trace, pricing, instance_classes=None, time_scale=1.0):
    """
    Cost of a run: every node billed over the makespan, plus surplus for unlimited nodes.

    Args:
        trace: SimTrace
        pricing: PricingTable
        instance_classes: Optional node_id -> InstanceClass overrides (default: as simulated)
        time_scale: Billed seconds per simulated second

    Returns:
        CostReport
    """
    columns = ["node_id", "instance_class", "hours", "instance_cost", "surplus_vcpu_hours", "surplus_cost", "total"]
    makespan = trace.makespan_s
    if makespan <= 0:
        return CostReport(pd.DataFrame([], columns=columns), 0.0, 0.0, 0.0)

    start = min(r.submit_us for r in trace.jobs.values() if r.submit_us is not None) / 1e6
    end = start + makespan
    rows_by_node = {node_id: group.sort_values("time") for node_id, group in trace.node_frame().groupby("node_id")}
    billed_s = makespan * time_scale
    window_s = SURPLUS_WINDOW_S
    instance_classes = instance_classes or {}

    rows = []
    for info in trace.nodes:
        node_id = info["node_id"]
        klass = InstanceClass(instance_classes.get(node_id, info["instance_class"]))
        cost = instance_cost(pricing, klass, billed_s)
        surplus_hours = 0.0
        if klass == InstanceClass.BURSTABLE_UNLIMITED:
            pieces = usage_pieces(rows_by_node[node_id], start, end)
            scaled = [(s * time_scale, u / info["vcpu_count"]) for s, u in pieces]
            surplus_hours = unlimited_surplus(scaled, info["baseline_fraction"], info["vcpu_count"], window_s)
        surplus_cost = surplus_hours * pricing.surplus_per_vcpu_hour
        rows.append({
            "node_id": node_id,
            "instance_class": klass.value,
            "hours": billed_s / SECONDS_PER_HOUR,
            "instance_cost": cost,
            "surplus_vcpu_hours": surplus_hours,
            "surplus_cost": surplus_cost,
            "total": cost + surplus_cost,
        })
    nodes = pd.DataFrame(rows, columns=columns)
    instance_total = float(nodes["instance_cost"].sum())
    surplus_total = float(nodes["surplus_cost"].sum())
    report = CostReport(
        nodes=nodes,
        billed_hours=billed_s / SECONDS_PER_HOUR,
        instance_total=instance_total,
        surplus_total=surplus_total,
        managed_total=instance_total * pricing.managed_multiplier,
    )
    if surplus_total > 0:
        report.notes.append(f"{int((nodes['surplus_cost'] > 0).sum())} unlimited nodes billed surplus credits")
    logger.info(f"Cost of {trace.scenario_name}: {report.total:.4f} (surplus {surplus_total:.4f})")
    return report


def cost_ratio(report_a, report_b):
    """Total cost of b relative to a."""
    if report_a.total == 0:
        return 1.0 if report_b.total == 0 else math.inf
    return report_b.total / report_a.total
