import time
from dataclasses import dataclass

import numpy as np
import pytest

from scheduler import (Phase, Policy, ScheduleDecision, baseline_schedule_pass, cash_schedule_pass, schedule_pass,
                       sort_nodes)
from telemetry import CreditSnapshot, Provenance, SnapshotEntry
from workload import Annotation, BurstBasis


@dataclass(frozen=True)
class QueuedTask:
    task_id: str
    annotation: frozenset


def snapshot(credits, basis=BurstBasis.CPU):
    entries = {}
    for node_id, value in credits.items():
        cpu, disk = (value, 0.0) if basis == BurstBasis.CPU else (None, value)
        entries[node_id] = SnapshotEntry(cpu, disk, Provenance.ACTUAL, 0.0, 0.0)
    return CreditSnapshot(entries=entries, snapshot_time=0.0)


def task(task_id, *flags):
    return QueuedTask(task_id, frozenset(flags))


def test_sort_nodes_descending_with_id_tiebreak():
    ordering = sort_nodes(snapshot({"n2": 5.0, "n0": 1.0, "n1": 5.0}), BurstBasis.CPU)
    assert ordering.node_ids == ("n1", "n2", "n0")


def test_sort_nodes_treats_missing_bucket_as_empty():
    snap = CreditSnapshot(entries={
        "gp": SnapshotEntry(None, 10.0, Provenance.ACTUAL, 0.0, 0.0),
        "b": SnapshotEntry(2.0, 10.0, Provenance.ACTUAL, 0.0, 0.0),
    }, snapshot_time=0.0)
    assert sort_nodes(snap, BurstBasis.CPU).node_ids == ("b", "gp")


def test_burst_tasks_fill_richest_node_first():
    ordering = sort_nodes(snapshot({"rich": 100.0, "poor": 0.0}), BurstBasis.CPU)
    queue = [task(f"m{i}", Annotation.BURST_CPU) for i in range(3)]
    decision = cash_schedule_pass(queue, ordering, {"rich": 2, "poor": 2})
    assert [(a.task_id, a.node_id) for a in decision.assignments] == [("m0", "rich"), ("m1", "rich"), ("m2", "poor")]
    assert all(a.phase == Phase.BURST for a in decision.assignments)


def test_network_tasks_spread_from_poorest_node():
    ordering = sort_nodes(snapshot({"a": 3.0, "b": 2.0, "c": 1.0}), BurstBasis.CPU)
    queue = [task(f"s{i}", Annotation.NETWORK) for i in range(4)]
    decision = cash_schedule_pass(queue, ordering, {"a": 2, "b": 2, "c": 2})
    assert [a.node_id for a in decision.assignments] == ["c", "b", "a", "c"]


def test_dual_flagged_tasks_go_to_burst_phase():
    ordering = sort_nodes(snapshot({"a": 3.0, "b": 1.0}), BurstBasis.CPU)
    queue = [task("x", Annotation.BURST_CPU, Annotation.NETWORK)]
    decision = cash_schedule_pass(queue, ordering, {"a": 1, "b": 1})
    assert decision.assignments[0].node_id == "a"
    assert decision.assignments[0].phase == Phase.BURST
    assert decision.dual_flagged == ("x",)


def test_other_basis_burst_flag_is_residual():
    ordering = sort_nodes(snapshot({"a": 0.0, "b": 9.0}, BurstBasis.DISK), BurstBasis.DISK)
    decision = cash_schedule_pass([task("c", Annotation.BURST_CPU)], ordering, {"a": 1, "b": 1})
    assert (decision.assignments[0].node_id, decision.assignments[0].phase) == ("a", Phase.RESIDUAL)


def test_random_order_is_seeded():
    free = {f"n{i}": 1 for i in range(6)}
    queue = [task(f"t{i}") for i in range(3)]
    a = baseline_schedule_pass(queue, free, Policy.RANDOM_ORDER, np.random.default_rng(5))
    b = baseline_schedule_pass(queue, free, Policy.RANDOM_ORDER, np.random.default_rng(5))
    assert a == b
    assert all(x.phase == Phase.RESIDUAL for x in a.assignments)


def test_arrival_order_fills_in_node_id_order():
    decision = baseline_schedule_pass([task("t0"), task("t1"), task("t2")], {"n1": 2, "n0": 1}, Policy.ARRIVAL_ORDER)
    assert [a.node_id for a in decision.assignments] == ["n0", "n1", "n1"]


def test_single_node_policies_agree():
    queue = [task("m", Annotation.BURST_CPU), task("s", Annotation.NETWORK), task("r")]
    ordering = sort_nodes(snapshot({"only": 4.0}), BurstBasis.CPU)
    cash = cash_schedule_pass(queue, ordering, {"only": 3})
    baseline = baseline_schedule_pass(queue, {"only": 3}, Policy.RANDOM_ORDER, np.random.default_rng(1))
    assert {a.task_id: a.node_id for a in cash.assignments} == {a.task_id: a.node_id for a in baseline.assignments}


def test_schedule_pass_short_circuits():
    assert schedule_pass(Policy.CASH, [], {"a": 1}) == ScheduleDecision()
    assert schedule_pass(Policy.RANDOM_ORDER, [task("t")], {"a": 0}) == ScheduleDecision()
    with pytest.raises(ValueError):
        schedule_pass(Policy.CASH, [task("t")], {"a": 1}, ordering=None)


def reference_cash(queue, ordering, free, basis):
    """Straight transcription of the three placement phases."""
    flag = Annotation.BURST_CPU if basis == BurstBasis.CPU else Annotation.BURST_DISK
    free = dict(free)
    placed = []

    burst = [t for t in queue if flag in t.annotation]
    for node in ordering:
        while free[node] > 0 and burst:
            placed.append((burst.pop(0).task_id, node, "burst_phase"))
            free[node] -= 1

    network = [t for t in queue if Annotation.NETWORK in t.annotation and flag not in t.annotation]
    while network and sum(free.values()) > 0:
        for node in reversed(ordering):
            if network and free[node] > 0:
                placed.append((network.pop(0).task_id, node, "network_phase"))
                free[node] -= 1

    rest = [t for t in queue if flag not in t.annotation and Annotation.NETWORK not in t.annotation]
    for node in sorted(free):
        while free[node] > 0 and rest:
            placed.append((rest.pop(0).task_id, node, "residual_phase"))
            free[node] -= 1
    return placed


def test_cash_matches_reference_on_random_instances():
    rng = np.random.default_rng(1234)
    flags = [Annotation.BURST_CPU, Annotation.BURST_DISK, Annotation.NETWORK]
    started = time.perf_counter()
    for _ in range(1000):
        basis = BurstBasis.CPU if rng.random() < 0.5 else BurstBasis.DISK
        node_ids = [f"n{i}" for i in range(int(rng.integers(1, 5)))]
        credits = {n: float(rng.integers(0, 4)) for n in node_ids}
        free = {n: int(rng.integers(0, 4)) for n in node_ids}
        queue = [
            task(f"t{k}", *[f for f in flags if rng.random() < 0.35])
            for k in range(int(rng.integers(0, 11)))
        ]
        ordering = sort_nodes(snapshot(credits, basis), basis)
        decision = cash_schedule_pass(queue, ordering, free)
        got = [(a.task_id, a.node_id, a.phase.value) for a in decision.assignments]
        assert got == reference_cash(queue, list(ordering.node_ids), free, basis)
    assert time.perf_counter() - started < 10.0


def test_dual_flagged_placement_is_logged_as_warning(caplog):
    ordering = sort_nodes(snapshot({"a": 3.0}), BurstBasis.CPU)
    queue = [task("x", Annotation.BURST_CPU, Annotation.NETWORK), task("y", Annotation.NETWORK)]
    with caplog.at_level("WARNING", logger="scheduler"):
        cash_schedule_pass(queue, ordering, {"a": 2})
    warnings = [r for r in caplog.records if r.levelname == "WARNING"]
    assert len(warnings) == 1
    assert "['x']" in warnings[0].getMessage()
