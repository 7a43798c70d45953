"""
Shipped experiment presets.

Fleet sizes and workloads are desk-scale analogs of the published
experiments, not replicas: 10-node fleets, a few hours of simulated time.
"""

import copy
import logging

from scenario import scenario_from_dict
from workload import WorkloadError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42
CPU_HORIZON_S = 4 * 3600.0
DISK_HORIZON_S = 6 * 3600.0

CPU_ENTRIES = [{"preset": "sql_agg_like"}, {"preset": "pagerank_like"}, {"preset": "kmeans_like"}]

# Map-heavy single job used to drain the credit-poor nodes
SKEWED_ENTRY = {
    "preset": "sql_agg_like",
    "overrides": {
        "jobs": 1,
        "map": {"tasks": 56, "cpu": [0.85, 0.95], "seconds": [300.0, 420.0]},
        "reduce": {"seconds": [30.0, 60.0]},
    },
}


def _burstable_group(prefix, count, instance_class="burstable", initial_credits=0.0):
    return {
        "prefix": prefix,
        "count": count,
        "instance_class": instance_class,
        "vcpu_count": 8,
        "slot_count": 8,
        "cpu": {"baseline_fraction": 0.4, "initial_credits": initial_credits},
        "disk": {"volume_gb": 200.0},
    }


def _cpu_scenario(name, description, ordering, policy, instance_class="burstable"):
    return {
        "name": name,
        "description": description,
        "horizon_s": CPU_HORIZON_S,
        "fleet": [_burstable_group("node", 10, instance_class)],
        "workload": {"ordering": ordering, "sequential": True, "entries": copy.deepcopy(CPU_ENTRIES)},
        "scheduler": {"policy": policy, "basis": "cpu"},
    }


def _skewed_scenario(name, description, instance_class, policy):
    return {
        "name": name,
        "description": description,
        "horizon_s": CPU_HORIZON_S,
        "fleet": [
            _burstable_group("poor", 3, instance_class, initial_credits=0.0),
            _burstable_group("rich", 7, instance_class, initial_credits=None),
        ],
        "workload": {"entries": [copy.deepcopy(SKEWED_ENTRY)]},
        "scheduler": {"policy": policy, "basis": "cpu"},
    }


def _disk_scenario(name, description, node_count, scale):
    return {
        "name": name,
        "description": description,
        "horizon_s": DISK_HORIZON_S,
        "fleet": [{
            "prefix": "node",
            "count": node_count,
            "instance_class": "general_purpose",
            "vcpu_count": 8,
            "slot_count": 8,
            "disk": {"volume_gb": 170.0, "zeroed": True},
        }],
        "workload": {"sequential": False, "entries": [{"preset": "tpcds_like_q", "scale": scale}]},
        "scheduler": {"policy": "cash", "basis": "disk"},
    }


PRESETS = {
    "cpu_exp1_naive": lambda: _cpu_scenario(
        "cpu_exp1_naive", "CPU-heavy job first on zero-credit burstable nodes, stock random placement",
        "cpu_intensive_first", "random_order"),
    "cpu_exp2_reordered": lambda: _cpu_scenario(
        "cpu_exp2_reordered", "CPU-heavy job last so lighter jobs bank credits first, stock random placement",
        "cpu_intensive_last", "random_order"),
    "cpu_exp3_unlimited": lambda: _cpu_scenario(
        "cpu_exp3_unlimited", "CPU-heavy job first on unlimited-mode burstable nodes, stock random placement",
        "cpu_intensive_first", "random_order", instance_class="burstable_unlimited"),
    "cpu_exp4_cash": lambda: _cpu_scenario(
        "cpu_exp4_cash", "Reordered workload with credit-aware placement",
        "cpu_intensive_last", "cash"),
    "cpu_skewed_cash": lambda: _skewed_scenario(
        "cpu_skewed_cash", "Map-heavy job on 3 credit-poor and 7 credit-rich nodes, credit-aware placement",
        "burstable", "cash"),
    "cpu_skewed_unlimited": lambda: _skewed_scenario(
        "cpu_skewed_unlimited", "Same skewed fleet in unlimited mode, nodes filled in id order",
        "burstable_unlimited", "arrival_order"),
    "disk_2vm": lambda: _disk_scenario(
        "disk_2vm", "Three parallel query streams on 2 nodes with wiped disk credits", 2, 0.25),
    "disk_10vm": lambda: _disk_scenario(
        "disk_10vm", "Three parallel query streams on 10 nodes with wiped disk credits", 10, 1.0),
    "disk_20vm": lambda: _disk_scenario(
        "disk_20vm", "Three parallel query streams on 20 nodes with wiped disk credits", 20, 2.0),
}


def preset_document(name, seed=None, policy=None):
    """Plain scenario document of a preset, with optional seed and policy overrides."""
    if name not in PRESETS:
        raise WorkloadError(f"Unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    document = PRESETS[name]()
    document["seed"] = DEFAULT_SEED if seed is None else seed
    if policy is not None:
        document["scheduler"]["policy"] = policy
    return document


def preset_scenario(name, seed=None, policy=None):
    """Validated Scenario for a shipped preset."""
    scenario = scenario_from_dict(preset_document(name, seed, policy))
    logger.debug(f"Loaded preset {name} (seed={scenario.seed}, policy={scenario.scheduler.policy.value})")
    return scenario


def describe_presets():
    return [(name, PRESETS[name]()["description"]) for name in PRESETS]
