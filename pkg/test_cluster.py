import pytest

from cluster import (Cluster, ClusterError, DuplicateTaskError, InstanceClass, NoFreeSlotError, NodeState,
                     ResourceVector, UnknownTaskError, advance_buckets, aggregate_demand, assign_task, free_slots,
                     grant_plan, node_grant, release_task, task_shares)
from credits import cpu_bucket, disk_bucket


class FakeTask:
    def __init__(self, task_id, cpu=0.0, disk=0.0, network=0.0):
        self.task_id = task_id
        self.demand = ResourceVector(cpu, disk, network)


def burstable_node(node_id="node-00", credits=0.0, slots=4, instance_class=InstanceClass.BURSTABLE):
    return NodeState(node_id=node_id, vcpu_count=8, slot_count=slots, disk_bucket=disk_bucket(100),
                     instance_class=instance_class, cpu_bucket=cpu_bucket(8, 0.4, initial_balance=credits))


def test_general_purpose_node_has_no_cpu_bucket():
    with pytest.raises(ClusterError):
        NodeState("gp-00", 8, 8, disk_bucket(100), InstanceClass.GENERAL_PURPOSE, cpu_bucket(8, 0.4))
    with pytest.raises(ClusterError):
        NodeState("b-00", 8, 8, disk_bucket(100), InstanceClass.BURSTABLE, None)


def test_assign_and_release():
    node = burstable_node(slots=1)
    node = assign_task(node, FakeTask("t1", cpu=1.0))
    assert free_slots(node) == 0
    with pytest.raises(NoFreeSlotError):
        assign_task(node, FakeTask("t2"))
    roomy = assign_task(burstable_node(slots=2), FakeTask("t1"))
    with pytest.raises(DuplicateTaskError):
        assign_task(roomy, FakeTask("t1"))
    node = release_task(node, "t1")
    assert free_slots(node) == 1
    with pytest.raises(UnknownTaskError):
        release_task(node, "t1")


def test_aggregate_demand_and_proportional_shares():
    node = burstable_node()
    node = assign_task(node, FakeTask("a", cpu=3.0, disk=100))
    node = assign_task(node, FakeTask("b", cpu=1.0, disk=50))
    total = aggregate_demand(node)
    assert total.cpu == 4.0 and total.disk == 150
    grant = node_grant(node)
    assert grant.cpu == pytest.approx(3.2)
    shares = task_shares(node, grant)
    assert shares["a"].cpu == pytest.approx(2.4)
    assert shares["b"].cpu == pytest.approx(0.8)


def test_throttle_law_for_single_task():
    node = assign_task(burstable_node(), FakeTask("t", cpu=1.0))
    # 1 vCPU is under the 3.2 vCPU baseline of an 8 vCPU node
    assert node_grant(node).cpu == 1.0
    node = assign_task(burstable_node(), FakeTask("t", cpu=8.0))
    assert node_grant(node).cpu == pytest.approx(3.2)


def test_unlimited_node_never_throttles():
    node = assign_task(burstable_node(instance_class=InstanceClass.BURSTABLE_UNLIMITED), FakeTask("t", cpu=8.0))
    assert node_grant(node).cpu == 8.0
    after, served, overdraft = advance_buckets(node, 60)
    assert served.cpu == pytest.approx(480.0)
    assert overdraft == pytest.approx(8.0 - 3.2)
    assert after.cpu_bucket.balance == 0.0


def test_grant_plan_splits_at_throttle_instant():
    node = assign_task(burstable_node(credits=10.0), FakeTask("t", cpu=8.0))
    plan = grant_plan(node)
    assert len(plan) == 2
    offset, grant = plan[1]
    # 10 credits drain at (8 - 3.2) / 60 per second
    assert offset == pytest.approx(10.0 / (4.8 / 60))
    assert plan[0][1].cpu == 8.0
    assert grant.cpu == pytest.approx(3.2)


def test_cluster_rejects_task_on_two_nodes():
    cluster = Cluster([burstable_node("n-00"), burstable_node("n-01")])
    task = FakeTask("t", cpu=1.0)
    cluster.assign("n-00", task)
    with pytest.raises(DuplicateTaskError):
        cluster.assign("n-01", task)
    assert cluster.release("t") == "n-00"
    with pytest.raises(UnknownTaskError):
        cluster.release("t")


def test_cluster_bookkeeping():
    cluster = Cluster([burstable_node("n-01", credits=5.0), burstable_node("n-00", credits=7.0)])
    assert cluster.node_ids == ["n-00", "n-01"]
    assert cluster.free_slot_map() == {"n-00": 4, "n-01": 4}
    assert cluster.total_cpu_credits() == pytest.approx(12.0)
    with pytest.raises(ClusterError):
        Cluster([burstable_node("n-00"), burstable_node("n-00")])


@pytest.mark.parametrize("instance_class", [InstanceClass.BURSTABLE, InstanceClass.BURSTABLE_UNLIMITED])
def test_balances_stay_within_bucket_bounds(instance_class):
    node = burstable_node(credits=50.0, instance_class=instance_class)
    node = assign_task(node, FakeTask("cpu", cpu=6.0))
    node = assign_task(node, FakeTask("io", disk=2500.0))
    for dt in (0.5, 7.0, 60.0, 600.0, 3600.0, 0.0, 86400.0):
        node, served, overdraft = advance_buckets(node, dt)
        for bucket in (node.cpu_bucket, node.disk_bucket):
            assert 0.0 <= bucket.balance <= bucket.capacity
        assert overdraft >= 0.0
    assert node.disk_bucket.balance == 0.0

    node = release_task(release_task(node, "cpu"), "io")
    for dt in (60.0, 2 * 86400.0, 86400.0):
        node, _, _ = advance_buckets(node, dt)
        for bucket in (node.cpu_bucket, node.disk_bucket):
            assert 0.0 <= bucket.balance <= bucket.capacity
    assert node.cpu_bucket.balance == node.cpu_bucket.capacity
    assert node.disk_bucket.balance == node.disk_bucket.capacity
