"""
The simulated cluster: VMs with task slots, attached token buckets and
running-task bookkeeping.

NodeState is an immutable value; the engine owns a Cluster that swaps node
values as tasks are assigned and released and as buckets are integrated.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

from credits import ResourceKind, charge, consume, effective_rate, throttle_time

logger = logging.getLogger(__name__)

RESOURCES = ("cpu", "disk", "network")


class ClusterError(Exception):
    """Base class for cluster bookkeeping errors."""


class NoFreeSlotError(ClusterError):
    pass


class DuplicateTaskError(ClusterError):
    pass


class UnknownTaskError(ClusterError):
    pass


class InstanceClass(str, Enum):
    BURSTABLE = "burstable"
    GENERAL_PURPOSE = "general_purpose"
    BURSTABLE_UNLIMITED = "burstable_unlimited"

    @property
    def has_cpu_bucket(self):
        return self != InstanceClass.GENERAL_PURPOSE


@dataclass(frozen=True)
class ResourceVector:
    """Per-resource quantity: cpu in vCPUs, disk in IOPS, network in units/s (or work in the matching unit-seconds)."""
    cpu: float = 0.0
    disk: float = 0.0
    network: float = 0.0

    def __add__(self, other):
        return ResourceVector(self.cpu + other.cpu, self.disk + other.disk, self.network + other.network)

    def scaled(self, factor):
        return ResourceVector(self.cpu * factor, self.disk * factor, self.network * factor)

    def get(self, resource):
        return getattr(self, resource)

    def as_dict(self):
        return {"cpu": self.cpu, "disk": self.disk, "network": self.network}

    @classmethod
    def from_dict(cls, data):
        return cls(**{r: float(data.get(r, 0.0)) for r in RESOURCES})


ZERO = ResourceVector()


@dataclass(frozen=True)
class NodeState:
    """
    One simulated VM.

    `running` maps task_id to the task's per-resource demand.
    cpu_bucket is None for general-purpose instances, which run at a fixed
    peak of vcpu_count.
    """
    node_id: str
    vcpu_count: int
    slot_count: int
    disk_bucket: object
    instance_class: InstanceClass = InstanceClass.BURSTABLE
    cpu_bucket: object = None
    running: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.vcpu_count < 1:
            raise ClusterError(f"Node {self.node_id}: vcpu_count must be >= 1")
        if self.slot_count < 1:
            raise ClusterError(f"Node {self.node_id}: slot_count must be >= 1")
        if self.instance_class.has_cpu_bucket and self.cpu_bucket is None:
            raise ClusterError(f"Node {self.node_id}: {self.instance_class.value} instances need a cpu bucket")
        if not self.instance_class.has_cpu_bucket and self.cpu_bucket is not None:
            raise ClusterError(f"Node {self.node_id}: general-purpose instances carry no cpu bucket")
        if len(self.running) > self.slot_count:
            raise ClusterError(f"Node {self.node_id}: {len(self.running)} tasks on {self.slot_count} slots")


def free_slots(node):
    return node.slot_count - len(node.running)


def assign_task(node, task):
    """Place a task (anything with task_id and demand) on a node."""
    if task.task_id in node.running:
        raise DuplicateTaskError(f"Task {task.task_id} already running on {node.node_id}")
    if free_slots(node) < 1:
        raise NoFreeSlotError(f"No free slot on {node.node_id} for task {task.task_id}")
    running = dict(node.running)
    running[task.task_id] = task.demand
    return replace(node, running=running)


def release_task(node, task_id):
    if task_id not in node.running:
        raise UnknownTaskError(f"Task {task_id} is not running on {node.node_id}")
    running = dict(node.running)
    del running[task_id]
    return replace(node, running=running)


def aggregate_demand(node):
    """Componentwise sum of the demands of the running tasks."""
    total = ZERO
    for demand in node.running.values():
        total = total + demand
    return total


def cpu_bucket_governs(node):
    """True when the CPU grant follows the token-bucket throttle law."""
    return node.instance_class == InstanceClass.BURSTABLE


def node_grant(node, demand=None):
    """Granted node-level rates for a demand (default: the running tasks' aggregate)."""
    demand = aggregate_demand(node) if demand is None else demand
    if cpu_bucket_governs(node):
        cpu = effective_rate(node.cpu_bucket, demand.cpu)
    elif node.cpu_bucket is not None:
        cpu = min(demand.cpu, node.cpu_bucket.peak_rate)
    else:
        cpu = min(demand.cpu, float(node.vcpu_count))
    disk = effective_rate(node.disk_bucket, demand.disk)
    # Network is not credit-governed in this model
    return ResourceVector(cpu, disk, demand.network)


def next_rate_change(node):
    """Seconds until the node's grant drops at constant demand, or None."""
    demand = aggregate_demand(node)
    candidates = [throttle_time(node.disk_bucket, demand.disk)]
    if cpu_bucket_governs(node):
        candidates.append(throttle_time(node.cpu_bucket, demand.cpu))
    candidates = [c for c in candidates if c is not None]
    return min(candidates) if candidates else None


def advance_buckets(node, dt):
    """
    Integrate both buckets over `dt` seconds at the current demand.

    Returns:
        (node after dt, served ResourceVector of unit-seconds, overdraft credits)
    """
    demand = aggregate_demand(node)
    overdraft = 0.0
    cpu_bucket = node.cpu_bucket
    if cpu_bucket_governs(node):
        cpu_bucket, cpu_rate = consume(cpu_bucket, demand.cpu, dt)
    elif cpu_bucket is not None:
        cpu_rate = min(demand.cpu, cpu_bucket.peak_rate)
        cpu_bucket, overdraft = charge(cpu_bucket, cpu_rate, dt)
    else:
        cpu_rate = min(demand.cpu, float(node.vcpu_count))
    disk_bucket, disk_rate = consume(node.disk_bucket, demand.disk, dt)
    served = ResourceVector(cpu_rate * dt, disk_rate * dt, demand.network * dt)
    return replace(node, cpu_bucket=cpu_bucket, disk_bucket=disk_bucket), served, overdraft


def grant_plan(node):
    """
    Piecewise-constant node grant from now on, assuming the running set does not change.

    Returns:
        [(offset_seconds, ResourceVector grant), ...] starting at offset 0
    """
    pieces = []
    offset = 0.0
    probe = node
    while True:
        pieces.append((offset, node_grant(probe)))
        tau = next_rate_change(probe)
        if tau is None:
            return pieces
        probe, _, _ = advance_buckets(probe, tau)
        offset += tau
        if len(pieces) > 2 * len(RESOURCES):
            logger.warning(f"Grant plan for {node.node_id} did not settle; truncating")
            return pieces


def task_shares(node, grant):
    """
    Split a node grant among running tasks in proportion to their demands.

    Returns:
        dict task_id -> granted ResourceVector
    """
    total = aggregate_demand(node)
    ratios = {}
    for resource in RESOURCES:
        wanted = total.get(resource)
        ratios[resource] = grant.get(resource) / wanted if wanted > 0 else 0.0
    return {
        task_id: ResourceVector(
            demand.cpu * ratios["cpu"],
            demand.disk * ratios["disk"],
            demand.network * ratios["network"],
        )
        for task_id, demand in node.running.items()
    }


class Cluster:
    """Owner of all node values; enforces that a task runs on at most one node."""

    def __init__(self, nodes):
        self.nodes = {}
        self.placement = {}
        for node in nodes:
            if node.node_id in self.nodes:
                raise ClusterError(f"Duplicate node id: {node.node_id}")
            self.nodes[node.node_id] = node

    @property
    def node_ids(self):
        return sorted(self.nodes)

    def free_slot_map(self):
        return {node_id: free_slots(self.nodes[node_id]) for node_id in self.node_ids}

    def assign(self, node_id, task):
        if task.task_id in self.placement:
            raise DuplicateTaskError(
                f"Task {task.task_id} already running on {self.placement[task.task_id]}"
            )
        if node_id not in self.nodes:
            raise ClusterError(f"Unknown node: {node_id}")
        self.nodes[node_id] = assign_task(self.nodes[node_id], task)
        self.placement[task.task_id] = node_id

    def release(self, task_id):
        node_id = self.placement.pop(task_id, None)
        if node_id is None:
            raise UnknownTaskError(f"Task {task_id} is not running on any node")
        self.nodes[node_id] = release_task(self.nodes[node_id], task_id)
        return node_id

    def balance(self, node_id, kind):
        node = self.nodes[node_id]
        bucket = node.cpu_bucket if kind == ResourceKind.CPU else node.disk_bucket
        return None if bucket is None else bucket.balance

    def total_cpu_credits(self):
        return math.fsum(n.cpu_bucket.balance for n in self.nodes.values() if n.cpu_bucket is not None)
