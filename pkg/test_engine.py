import pytest

from engine import EventKind, Simulation, metrics, run, to_us
from scenario import scenario_from_dict


def node_group(prefix="node", count=1, vcpu=8, slots=8, credits=0.0, instance_class="burstable"):
    group = {
        "prefix": prefix,
        "count": count,
        "instance_class": instance_class,
        "vcpu_count": vcpu,
        "slot_count": slots,
        "disk": {"volume_gb": 100.0},
    }
    if instance_class != "general_purpose":
        group["cpu"] = {"baseline_fraction": 0.4, "initial_credits": credits}
    return group


def job(job_id, tasks=1, cpu=1.0, seconds=100.0, kind="generic", after=()):
    return {
        "job_id": job_id,
        "after": list(after),
        "vertices": [{
            "vertex_id": "v1",
            "kind": kind,
            "tasks": tasks,
            "demand": {"cpu": cpu},
            "work": {"cpu": cpu * seconds},
        }],
    }


def scenario(fleet, jobs, seed=1, horizon_s=20000.0, policy="cash", **extra):
    document = {
        "name": "engine-test",
        "seed": seed,
        "horizon_s": horizon_s,
        "fleet": fleet,
        "workload": {"jobs": jobs},
        "scheduler": {"policy": policy},
    }
    document.update(extra)
    return scenario_from_dict(document)


def test_throttled_task_runs_at_baseline():
    # One vCPU with no credits serves 0.4 vCPU
    s = scenario([node_group(vcpu=1, slots=1)], [job("j", cpu=1.0, seconds=100.0)])
    trace = run(s)
    record = trace.tasks["j/v1/0000"]
    assert record.start_us == 0
    assert record.elapsed_us == to_us(100.0 / 0.4)
    assert trace.complete


def test_unthrottled_task_runs_at_demand():
    s = scenario([node_group(vcpu=8, slots=8)], [job("j", cpu=1.0, seconds=100.0)])
    assert run(s).tasks["j/v1/0000"].elapsed_us == to_us(100.0)


def test_task_slows_when_credits_run_out():
    # 8 vCPU demand on 10 credits: full speed for 125 s, then 40%
    s = scenario([node_group(vcpu=8, slots=1, credits=10.0)], [job("j", cpu=8.0, seconds=300.0)])
    record = run(s).tasks["j/v1/0000"]
    burst_s = 10.0 / ((8.0 - 3.2) / 60.0)
    expected = burst_s + (300.0 - burst_s) * 8.0 / 3.2
    assert record.elapsed_us == pytest.approx(to_us(expected), abs=2)


def test_job_chain_waits_for_predecessor():
    s = scenario([node_group()], [job("a", seconds=50.0), job("b", seconds=50.0, after=("a",))])
    trace = run(s)
    assert trace.jobs["b"].submit_us == trace.jobs["a"].complete_us
    assert trace.makespan_s == pytest.approx(100.0)


def test_identical_scenarios_give_identical_digests():
    fleet = [node_group(count=3, credits=20.0)]
    jobs = [job("a", tasks=12, cpu=0.9, seconds=400.0, kind="root_input"), job("b", tasks=5, cpu=0.3)]
    first = run(scenario(fleet, jobs, policy="random_order"))
    second = run(scenario(fleet, jobs, policy="random_order"))
    assert first.digest() == second.digest()
    assert first.event_lines() == second.event_lines()


def test_probe_events_do_not_change_outcomes():
    fleet = [node_group(count=2, credits=30.0, slots=4)]
    jobs = [job("a", tasks=6, cpu=3.0, seconds=500.0, kind="root_input")]
    plain = run(scenario(fleet, jobs))
    probed = Simulation(scenario(fleet, jobs))
    for t in (0.5, 17.25, 61.0, 333.333, 1234.5):
        probed.add_probe(t)
    probed_trace = probed.run()
    assert plain.tasks.keys() == probed_trace.tasks.keys()
    for task_id, record in plain.tasks.items():
        assert abs(record.complete_us - probed_trace.tasks[task_id].complete_us) <= 2
    end_plain = plain.node_frame().groupby("node_id").last()
    end_probed = probed_trace.node_frame().groupby("node_id").last()
    assert end_plain["cpu_credits"].to_list() == pytest.approx(end_probed["cpu_credits"].to_list(), abs=1e-9)


def test_step_returns_scheduled_events():
    sim = Simulation(scenario([node_group()], [job("a")]))
    kinds = []
    while not sim.done:
        kinds.extend(e.kind for e in sim.step())
    assert EventKind.TASK_COMPLETE in kinds


def test_predictions_match_true_balances():
    fleet = [node_group(count=2, credits=40.0, slots=4), node_group(prefix="gp", instance_class="general_purpose")]
    jobs = [
        job("a", tasks=4, cpu=1.5, seconds=900.0, kind="root_input"),
        job("b", tasks=3, cpu=0.5, seconds=1500.0),
    ]
    trace = run(scenario(fleet, jobs))
    rows = trace.node_frame().set_index(["time", "node_id"])
    checked = 0
    for event in trace.events:
        if event["kind"] != EventKind.TELEMETRY_PREDICT.value:
            continue
        t = event["t_us"] / 1e6
        for node_id, entry in event["snapshot"].items():
            if entry["provenance"] != "predicted" or entry["entry_time"] != t:
                continue
            true = rows.loc[(t, node_id)]
            if entry["cpu_credits"] is not None:
                assert entry["cpu_credits"] == pytest.approx(true["cpu_credits"], rel=1e-9, abs=1e-9)
            assert entry["disk_credits"] == pytest.approx(true["disk_credits"], rel=1e-9, abs=1e-9)
            checked += 1
    assert checked > 0


def test_horizon_stops_an_unfinished_run():
    s = scenario([node_group(vcpu=1, slots=1)], [job("j", cpu=1.0, seconds=1000.0)], horizon_s=600.0)
    trace = run(s)
    assert not trace.complete
    report = metrics(trace)
    assert report.tasks_live == 1
    assert report.tasks_completed == 0


def test_metrics_sum_task_durations_per_phase():
    jobs = [{
        "job_id": "mr",
        "vertices": [
            {"vertex_id": "v1-map", "kind": "root_input", "tasks": 4, "demand": {"cpu": 0.5}, "work": {"cpu": 50.0}},
            {"vertex_id": "v2-shuffle", "kind": "shuffle", "tasks": 1, "upstream": ["v1-map"],
             "demand": {"network": 10.0}, "work": {"network": 500.0}},
            {"vertex_id": "v3-reduce", "kind": "generic", "tasks": 1, "upstream": ["v1-map", "v2-shuffle"],
             "demand": {"cpu": 1.0}, "work": {"cpu": 20.0}},
        ],
    }]
    report = metrics(run(scenario([node_group(slots=8)], jobs)))
    assert report.elapsed("map") == pytest.approx(400.0)
    assert report.elapsed("shuffle") == pytest.approx(50.0)
    assert report.elapsed("reduce") == pytest.approx(20.0)
    assert report.total_task_elapsed_s == pytest.approx(470.0)
    assert report.complete
    assert list(report.phase_elapsed.columns) == ["phase", "cumulative_elapsed_s", "task_count"]


def test_scheduler_never_sees_a_snapshot_older_than_the_prediction_period(caplog):
    fleet = [node_group(count=3, credits=15.0, slots=4), node_group(prefix="gp", instance_class="general_purpose")]
    jobs = [
        job("a", tasks=10, cpu=2.0, seconds=700.0, kind="root_input"),
        job("b", tasks=6, cpu=0.5, seconds=400.0, after=("a",)),
    ]
    with caplog.at_level("WARNING", logger="engine"):
        trace = run(scenario(fleet, jobs))
    ages = [e["snapshot_age_s"] for e in trace.events if e["kind"] == EventKind.SCHEDULER_PASS.value]
    assert ages
    assert max(ages) <= 60.0
    assert "snapshot" not in caplog.text


def test_stale_snapshot_is_logged(caplog):
    sim = Simulation(scenario([node_group(count=2)], [], horizon_s=600.0))
    sim.monitor.predict_period = 1e9
    with caplog.at_level("WARNING", logger="engine"):
        sim.run()
    assert "credit snapshot is 120.0s old" in caplog.text


def test_empty_workload_only_samples_until_the_horizon():
    trace = run(scenario([node_group(count=2)], [], horizon_s=1200.0))
    kinds = {e["kind"] for e in trace.events}
    assert kinds <= {
        EventKind.TELEMETRY_ACTUAL.value,
        EventKind.TELEMETRY_PREDICT.value,
        EventKind.NODE_SORT.value,
        EventKind.HORIZON.value,
    }
    assert trace.events[-1]["kind"] == EventKind.HORIZON.value
    assert trace.end_us == to_us(1200.0)
    assert trace.tasks == {}
    assert metrics(trace).makespan_s == 0.0
