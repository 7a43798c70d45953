"""
Experiment harness: run a scenario, write its artifact bundle, compare bundles.

Bundle layout (one directory per run):
    events.jsonl        event log, one JSON object per processed event
    node_metrics.csv    time, node_id, cpu_credits, disk_credits, cpu_util, granted_iops, ...
    phase_elapsed.csv   phase, cumulative_elapsed_s, task_count
    credit_std.csv      time, cpu_credit_std, disk_credit_std
    jobs.csv            per-job submit/complete/completion time
    tasks.csv           per-task placement and timing
    summary.json        headline metrics
    cost.json           cost report
    scenario.yaml       canonical scenario
    manifest.json       digests and file list
"""

import json
import logging
import math
import os
from dataclasses import dataclass

import pandas as pd
from sqlalchemy.exc import SQLAlchemyError

from billing import scenario_cost
from engine import metrics, run
from models import RunRecord, database_url, get_session
from scenario import serialize_scenario

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
BUNDLE_FILES = ["events.jsonl", "node_metrics.csv", "phase_elapsed.csv", "credit_std.csv", "jobs.csv",
                "tasks.csv", "summary.json", "cost.json", "scenario.yaml"]

# metric -> whether a larger value is better
COMPARED_METRICS = {
    "makespan_s": False,
    "total_task_elapsed_s": False,
    "map_elapsed_s": False,
    "shuffle_elapsed_s": False,
    "reduce_elapsed_s": False,
    "mean_job_completion_s": False,
    "mean_cpu_credit_std": False,
    "mean_disk_credit_std": False,
    "avg_granted_iops": True,
    "total_cost": False,
}


class ExperimentError(OSError):
    """Bundle I/O failure; carries the offending path."""

    def __init__(self, message, path):
        super().__init__(f"{message}: {path}")
        self.path = str(path)


class IncompatibleBundlesError(ValueError):
    """Raised when two bundles did not run the same workload."""


@dataclass
class Bundle:
    path: str
    manifest: dict
    summary: dict
    cost: dict
    phase_elapsed: pd.DataFrame
    trace: object = None
    report: object = None


def _write(path, writer):
    try:
        writer(path)
    except OSError as e:
        raise ExperimentError(f"Could not write {os.path.basename(path)} ({e.strerror or e})", path)


def _write_text(path, text):
    def writer(target):
        with open(target, "w", encoding="utf-8") as f:
            f.write(text)
    _write(path, writer)


def _write_json(path, data):
    _write_text(path, json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def _write_csv(path, frame):
    _write(path, lambda target: frame.to_csv(target, index=False))


def run_experiment(scenario, out_dir, preset=None, registry_url=None, register=True):
    """
    Run a scenario and write its bundle.

    Args:
        scenario: Validated Scenario
        out_dir: Bundle directory (created if needed)
        preset: Preset name recorded in the manifest, if the scenario came from one
        registry_url: SQLAlchemy URL of the run registry (default: DATABASE_URL or runs.db beside the bundle)
        register: Record the run in the registry

    Returns:
        Bundle

    Raises:
        ExperimentError when the directory or any file cannot be written
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise ExperimentError(f"Could not create bundle directory ({e.strerror or e})", out_dir)
    if not os.access(out_dir, os.W_OK):
        raise ExperimentError("Bundle directory is not writable", out_dir)

    logger.info(f"Running {scenario.name} (policy {scenario.scheduler.policy.value}, seed {scenario.seed})")
    trace = run(scenario)
    report = metrics(trace)
    cost = scenario_cost(trace, scenario.pricing_table(), time_scale=scenario.time_scale)

    summary = report.summary()
    summary["total_cost"] = cost.total
    job_times = report.jobs["completion_time_s"].dropna()
    summary["mean_job_completion_s"] = float(job_times.mean()) if len(job_times) else 0.0

    event_lines = trace.event_lines()
    files = list(BUNDLE_FILES)
    if scenario.output.write_events:
        _write_text(os.path.join(out_dir, "events.jsonl"), "".join(line + "\n" for line in event_lines))
    else:
        files.remove("events.jsonl")
    _write_csv(os.path.join(out_dir, "node_metrics.csv"), trace.node_frame())
    _write_csv(os.path.join(out_dir, "phase_elapsed.csv"), report.phase_elapsed)
    _write_csv(os.path.join(out_dir, "credit_std.csv"), report.credit_std)
    _write_csv(os.path.join(out_dir, "jobs.csv"), report.jobs)
    _write_csv(os.path.join(out_dir, "tasks.csv"), trace.task_frame())
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    _write_json(os.path.join(out_dir, "cost.json"), cost.to_dict())
    _write_text(os.path.join(out_dir, "scenario.yaml"), serialize_scenario(scenario))

    manifest = {
        "scenario_name": scenario.name,
        "preset": preset,
        "policy": scenario.scheduler.policy.value,
        "basis": scenario.scheduler.basis.value,
        "seed": scenario.seed,
        "scenario_digest": scenario.digest(),
        "workload_digest": scenario.workload_digest(),
        "event_log_digest": trace.digest(),
        "event_count": len(event_lines),
        "complete": trace.complete,
        "makespan_s": report.makespan_s,
        "total_cost": cost.total,
        "files": files,
    }
    _write_json(os.path.join(out_dir, MANIFEST), manifest)
    logger.info(f"Bundle written to {out_dir} (events {manifest['event_log_digest'][:12]})")

    if register:
        _register(manifest, out_dir, registry_url)

    return Bundle(path=str(out_dir), manifest=manifest, summary=summary, cost=cost.to_dict(),
                  phase_elapsed=report.phase_elapsed, trace=trace, report=report)


def _register(manifest, out_dir, registry_url):
    url = registry_url or database_url(os.path.dirname(os.path.abspath(out_dir)))
    try:
        session = get_session(url)
        try:
            RunRecord.record(session, manifest, os.path.abspath(out_dir))
        finally:
            session.close()
        logger.info(f"Recorded run {manifest['scenario_name']} in the registry")
    except SQLAlchemyError as e:
        logger.warning(f"Could not record run in registry {url}: {e}")


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ExperimentError("Bundle file is missing", path)
    except (OSError, json.JSONDecodeError) as e:
        raise ExperimentError(f"Could not read bundle file ({e})", path)


def load_bundle(path):
    """Read a bundle directory written by run_experiment."""
    if not os.path.isdir(path):
        raise ExperimentError("Not a bundle directory", path)
    phase_path = os.path.join(path, "phase_elapsed.csv")
    try:
        phase_elapsed = pd.read_csv(phase_path)
    except (OSError, pd.errors.ParserError) as e:
        raise ExperimentError(f"Could not read bundle file ({e})", phase_path)
    return Bundle(
        path=str(path),
        manifest=_read_json(os.path.join(path, MANIFEST)),
        summary=_read_json(os.path.join(path, "summary.json")),
        cost=_read_json(os.path.join(path, "cost.json")),
        phase_elapsed=phase_elapsed,
    )


def _ratio(a, b):
    if a == 0:
        return 1.0 if b == 0 else math.inf
    return b / a


def _direction(a, b, higher_is_better):
    if math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12):
        return "unchanged"
    better = b > a if higher_is_better else b < a
    return "improvement" if better else "regression"


def compare(bundle_a, bundle_b):
    """
    Side-by-side metrics of two runs of the same workload.

    Args:
        bundle_a: Reference Bundle or bundle directory
        bundle_b: Candidate Bundle or bundle directory

    Returns:
        DataFrame with columns metric, a, b, ratio (b / a), difference (b - a), direction
        (improvement / regression / unchanged, from b's point of view)
    """
    if not isinstance(bundle_a, Bundle):
        bundle_a = load_bundle(bundle_a)
    if not isinstance(bundle_b, Bundle):
        bundle_b = load_bundle(bundle_b)
    digest_a = bundle_a.manifest.get("workload_digest")
    digest_b = bundle_b.manifest.get("workload_digest")
    if digest_a != digest_b:
        raise IncompatibleBundlesError(
            f"Bundles ran different workloads ({bundle_a.path}: {str(digest_a)[:12]}, "
            f"{bundle_b.path}: {str(digest_b)[:12]})")

    rows = []
    for metric, higher_is_better in COMPARED_METRICS.items():
        a = float(bundle_a.summary.get(metric, 0.0) or 0.0)
        b = float(bundle_b.summary.get(metric, 0.0) or 0.0)
        rows.append({
            "metric": metric,
            "a": a,
            "b": b,
            "ratio": _ratio(a, b),
            "difference": b - a,
            "direction": _direction(a, b, higher_is_better),
        })
    return pd.DataFrame(rows, columns=["metric", "a", "b", "ratio", "difference", "direction"])
