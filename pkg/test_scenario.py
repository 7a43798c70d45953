import pytest

from presets import PRESETS, preset_scenario
from scenario import ScenarioError, parse_scenario, serialize_scenario
from scheduler import Policy
from workload import OrderingPolicy

MINIMAL = """
name: minimal
seed: 7
fleet:
  - prefix: node
    count: 1
    instance_class: burstable
    vcpu_count: 8
    slot_count: 8
    cpu: {baseline_fraction: 0.4, initial_credits: 0}
    disk: {volume_gb: 100}
"""


def test_minimal_scenario_parses():
    scenario = parse_scenario(MINIMAL)
    assert scenario.seed == 7
    assert [n.node_id for n in scenario.build_nodes()] == ["node-00"]
    assert scenario.build_stream().jobs == ()
    assert scenario.scheduler.policy == Policy.CASH


def test_missing_seed_is_an_error():
    with pytest.raises(ScenarioError) as info:
        parse_scenario(MINIMAL.replace("seed: 7\n", ""))
    assert ("seed", "required (runs must be reproducible)") in info.value.violations


def test_peak_below_baseline_names_the_node():
    text = MINIMAL.replace("initial_credits: 0}", "initial_credits: 0, peak_fraction: 0.2}")
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    (path, message), = info.value.violations
    assert path == "fleet[0]"
    assert "node-00" in message and "peak_rate" in message


def test_every_violation_is_reported():
    text = """
name: broken
fleet:
  - prefix: node
    instance_class: mainframe
    vcpu_count: 0
workload:
  entries:
    - preset: terasort
scheduler:
  policy: fastest
telemetry:
  predict_period_s: -1
colour: blue
"""
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    paths = {path for path, _ in info.value.violations}
    assert {"seed", "fleet[0].instance_class", "fleet[0].vcpu_count", "workload.entries[0].preset",
            "scheduler.policy", "telemetry.predict_period_s", "colour"} <= paths


def test_syntax_error_is_reported():
    with pytest.raises(ScenarioError) as info:
        parse_scenario("seed: [1, 2")
    assert info.value.violations[0][0] == "<document>"


def test_seed_and_policy_overrides():
    scenario = parse_scenario(MINIMAL, seed=99, policy="random_order")
    assert scenario.seed == 99
    assert scenario.scheduler.policy == Policy.RANDOM_ORDER


def test_round_trip_is_identical():
    text = MINIMAL + """
workload:
  ordering: cpu_intensive_last
  sequential: true
  entries:
    - preset: sql_agg_like
      scale: 0.5
      overrides: {jobs: 1, map: {tasks: 10, cpu: [0.8, 0.9]}}
    - preset: pagerank_like
  jobs:
    - job_id: custom
      vertices:
        - {vertex_id: v1, kind: root_input, tasks: 2, demand: {cpu: 1.0}, work: {cpu: 60.0}}
        - {vertex_id: v2, tasks: 1, upstream: [v1], annotation: [network], demand: {network: 5.0}, work: {network: 50.0}}
"""
    scenario = parse_scenario(text)
    assert scenario.workload.ordering == OrderingPolicy.CPU_INTENSIVE_LAST
    again = parse_scenario(serialize_scenario(scenario))
    assert again == scenario
    assert again.digest() == scenario.digest()


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip(name):
    scenario = preset_scenario(name, seed=5)
    assert parse_scenario(serialize_scenario(scenario)) == scenario


def test_workload_digest_ignores_ordering_and_policy():
    naive = preset_scenario("cpu_exp1_naive")
    cash = preset_scenario("cpu_exp4_cash")
    assert naive.digest() != cash.digest()
    assert naive.workload_digest() == cash.workload_digest()
    assert naive.workload_digest() != preset_scenario("cpu_exp1_naive", seed=1).workload_digest()


def test_pricing_table_follows_the_fleet():
    scenario = parse_scenario(MINIMAL + "pricing: {surplus_per_vcpu_hour: 0.05, unlimited_hourly: 0.4}\n")
    table = scenario.pricing_table()
    assert table.surplus_per_vcpu_hour == 0.05
    assert table.price_of("burstable_unlimited") == 0.4
