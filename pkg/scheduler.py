"""
Placement policies.

cash           credit-aware three-phase placement against a descending-credit node ordering
random_order   stock behaviour: nodes visited in a fresh seeded shuffle every pass
arrival_order  nodes visited in node_id order

Policies are pure functions: a queue snapshot and free-slot counts in, a
ScheduleDecision out.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from workload import Annotation, BurstBasis

logger = logging.getLogger(__name__)

DEFAULT_PASS_PERIOD_S = 1.0
DEFAULT_SORT_PERIOD_S = 60.0


class Policy(str, Enum):
    CASH = "cash"
    RANDOM_ORDER = "random_order"
    ARRIVAL_ORDER = "arrival_order"


class Phase(str, Enum):
    BURST = "burst_phase"
    NETWORK = "network_phase"
    RESIDUAL = "residual_phase"


@dataclass(frozen=True)
class NodeOrdering:
    node_ids: tuple
    ordering_time: float
    basis: BurstBasis


@dataclass(frozen=True)
class Assignment:
    task_id: str
    node_id: str
    phase: Phase


@dataclass(frozen=True)
class ScheduleDecision:
    assignments: tuple = ()
    # Tasks flagged both burst and network that were placed in the burst phase
    dual_flagged: tuple = ()

    def node_counts(self):
        counts = {}
        for a in self.assignments:
            counts[a.node_id] = counts.get(a.node_id, 0) + 1
        return counts

    def as_records(self):
        return [[a.task_id, a.node_id, a.phase.value] for a in self.assignments]


def _credit_of(entry, basis):
    value = entry.cpu_credits if basis == BurstBasis.CPU else entry.disk_credits
    # Nodes without a bucket for the basis have nothing to spend
    return 0.0 if value is None else value


def sort_nodes(credit_snapshot, basis):
    """Order nodes by descending credit balance on `basis`; ties by ascending node_id."""
    basis = BurstBasis(basis)
    entries = credit_snapshot.entries
    ordered = sorted(entries, key=lambda node_id: (-_credit_of(entries[node_id], basis), node_id))
    return NodeOrdering(node_ids=tuple(ordered), ordering_time=credit_snapshot.snapshot_time, basis=basis)


@dataclass
class _SlotBook:
    free: dict
    assignments: list = field(default_factory=list)

    def take(self, task, node_id, phase):
        self.free[node_id] -= 1
        self.assignments.append(Assignment(task.task_id, node_id, phase))


def cash_schedule_pass(queue, ordering, free_slots):
    """
    One credit-aware scheduling pass.

    Phase 1 walks the ordering (most credits first) and fills each node with
    burst tasks of the run's basis. Phase 2 walks the ordering backwards in
    rounds, giving each node with a free slot at most one network task per
    round. Phase 3 puts everything else on the remaining slots in node_id
    order. Tasks flagged both burst and network go to phase 1.

    Args:
        queue: Pending TaskSpecs in pooled queue (FIFO) order
        ordering: NodeOrdering from the last sort
        free_slots: node_id -> free slots at pass start

    Returns:
        ScheduleDecision
    """
    burst_flag = ordering.basis.annotation
    book = _SlotBook(free={n: free_slots.get(n, 0) for n in free_slots})
    burst = [t for t in queue if burst_flag in t.annotation]
    network = [t for t in queue if Annotation.NETWORK in t.annotation and burst_flag not in t.annotation]
    residual = [t for t in queue if burst_flag not in t.annotation and Annotation.NETWORK not in t.annotation]
    dual = tuple(t.task_id for t in burst if Annotation.NETWORK in t.annotation)

    placed_dual = []
    burst_iter = iter(burst)
    pending = next(burst_iter, None)
    for node_id in ordering.node_ids:
        while pending is not None and book.free.get(node_id, 0) > 0:
            book.take(pending, node_id, Phase.BURST)
            if pending.task_id in dual:
                placed_dual.append(pending.task_id)
            pending = next(burst_iter, None)
        if pending is None:
            break

    reverse = [n for n in reversed(ordering.node_ids) if n in book.free]
    waiting = list(network)
    while waiting and any(book.free[n] > 0 for n in reverse):
        for node_id in reverse:
            if not waiting:
                break
            if book.free[node_id] > 0:
                book.take(waiting.pop(0), node_id, Phase.NETWORK)

    leftovers = iter(residual)
    pending = next(leftovers, None)
    for node_id in sorted(book.free):
        while pending is not None and book.free[node_id] > 0:
            book.take(pending, node_id, Phase.RESIDUAL)
            pending = next(leftovers, None)
        if pending is None:
            break

    if placed_dual:
        logger.warning(f"Placed {len(placed_dual)} burst+network tasks in the burst phase: {placed_dual[:5]}")
    return ScheduleDecision(assignments=tuple(book.assignments), dual_flagged=tuple(placed_dual))


def baseline_schedule_pass(queue, nodes, policy, seed=None):
    """
    Credit-oblivious pass: tasks in queue order fill nodes in the policy's visit order.

    Args:
        queue: Pending TaskSpecs in queue order
        nodes: node_id -> free slots at pass start
        policy: random_order or arrival_order
        seed: int or numpy Generator driving the random_order shuffle

    Returns:
        ScheduleDecision with every assignment tagged residual_phase
    """
    policy = Policy(policy)
    order = sorted(nodes)
    if policy == Policy.RANDOM_ORDER:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        order = [order[i] for i in rng.permutation(len(order))]
    elif policy != Policy.ARRIVAL_ORDER:
        raise ValueError(f"{policy.value} is not a baseline policy")

    book = _SlotBook(free=dict(nodes))
    tasks = iter(queue)
    pending = next(tasks, None)
    for node_id in order:
        while pending is not None and book.free[node_id] > 0:
            book.take(pending, node_id, Phase.RESIDUAL)
            pending = next(tasks, None)
        if pending is None:
            break
    return ScheduleDecision(assignments=tuple(book.assignments))


def schedule_pass(policy, queue, free_slots, ordering=None, rng=None):
    """Dispatch one pass to the configured policy."""
    policy = Policy(policy)
    if not queue or not any(v > 0 for v in free_slots.values()):
        return ScheduleDecision()
    if policy == Policy.CASH:
        if ordering is None:
            raise ValueError("cash needs a node ordering")
        return cash_schedule_pass(queue, ordering, free_slots)
    return baseline_schedule_pass(queue, free_slots, policy, rng)
