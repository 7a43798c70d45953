"""
Deterministic discrete-event simulation core.

Time is kept as integer microseconds. Between two events every node's demand is
constant, so buckets and task progress are integrated in closed form (split at
the instants where a bucket runs empty). Events are ordered by
(timestamp, sequence number).

Usage:
    from scenario import parse_scenario
    trace = run(parse_scenario(open("scenario.yaml").read()))
    report = metrics(trace)
"""

import hashlib
import heapq
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from cluster import Cluster, advance_buckets, grant_plan, task_shares
from randomness import make_rng
from scheduler import Policy, schedule_pass, sort_nodes
from telemetry import Monitor
from workload import DagProgress, Stage, TaskRun, annotate_dag, ready_tasks, task_progress, time_to_finish

logger = logging.getLogger(__name__)

US_PER_S = 1_000_000
# A recomputed completion this close to the scheduled one keeps the existing event
COMPLETION_SLACK_US = 2


class EventKind(str, Enum):
    JOB_SUBMIT = "job_submit"
    TASKS_READY = "tasks_ready"
    SCHEDULER_PASS = "scheduler_pass"
    NODE_SORT = "node_sort"
    TELEMETRY_ACTUAL = "telemetry_actual"
    TELEMETRY_PREDICT = "telemetry_predict"
    TASK_COMPLETE = "task_complete"
    HORIZON = "horizon"
    PROBE = "probe"


@dataclass(order=True, frozen=True)
class SimEvent:
    timestamp: int
    sequence: int
    kind: EventKind = field(compare=False)
    payload: dict = field(compare=False, default_factory=dict)


def to_us(seconds):
    return int(round(seconds * US_PER_S))


def to_s(micros):
    return micros / US_PER_S


@dataclass
class TaskRecord:
    task_id: str
    job_id: str
    vertex_id: str
    stage: str
    annotation: tuple
    ready_us: int
    start_us: int = None
    complete_us: int = None
    node_id: str = None
    phase: str = None

    @property
    def elapsed_us(self):
        if self.start_us is None or self.complete_us is None:
            return None
        return self.complete_us - self.start_us


@dataclass
class JobRecord:
    job_id: str
    group: str
    task_count: int
    submit_us: int = None
    complete_us: int = None


@dataclass
class SimTrace:
    """Everything a run produced; a pure function of the scenario."""
    scenario_name: str
    seed: int
    policy: str
    nodes: list
    events: list = field(default_factory=list)
    node_rows: list = field(default_factory=list)
    tasks: dict = field(default_factory=dict)
    jobs: dict = field(default_factory=dict)
    complete: bool = False
    end_us: int = 0

    def event_lines(self):
        return [json.dumps(record, sort_keys=True, separators=(",", ":")) for record in self.events]

    def digest(self):
        sha = hashlib.sha256()
        for line in self.event_lines():
            sha.update(line.encode("utf-8"))
            sha.update(b"\n")
        return sha.hexdigest()

    def node_frame(self):
        columns = ["time", "node_id", "cpu_credits", "disk_credits", "cpu_util", "granted_iops",
                   "cpu_seconds", "disk_ops", "surplus_credits"]
        return pd.DataFrame(self.node_rows, columns=columns)

    def task_frame(self):
        rows = []
        for record in self.tasks.values():
            rows.append({
                "task_id": record.task_id,
                "job_id": record.job_id,
                "vertex_id": record.vertex_id,
                "stage": record.stage,
                "phase": record.phase,
                "node_id": record.node_id,
                "ready_s": to_s(record.ready_us),
                "start_s": None if record.start_us is None else to_s(record.start_us),
                "complete_s": None if record.complete_us is None else to_s(record.complete_us),
                "elapsed_us": record.elapsed_us,
            })
        columns = ["task_id", "job_id", "vertex_id", "stage", "phase", "node_id",
                   "ready_s", "start_s", "complete_s", "elapsed_us"]
        return pd.DataFrame(rows, columns=columns)

    def job_frame(self):
        rows = []
        for record in self.jobs.values():
            submit = None if record.submit_us is None else to_s(record.submit_us)
            complete = None if record.complete_us is None else to_s(record.complete_us)
            rows.append({
                "job_id": record.job_id,
                "group": record.group,
                "task_count": record.task_count,
                "submit_s": submit,
                "complete_s": complete,
                "completion_time_s": None if complete is None else complete - submit,
            })
        columns = ["job_id", "group", "task_count", "submit_s", "complete_s", "completion_time_s"]
        return pd.DataFrame(rows, columns=columns)

    @property
    def makespan_s(self):
        submits = [r.submit_us for r in self.jobs.values() if r.submit_us is not None]
        completes = [r.complete_us for r in self.jobs.values() if r.complete_us is not None]
        if not submits or not completes:
            return 0.0
        return to_s(max(completes) - min(submits))


class Simulation:
    """
    One run of a scenario.

    step() processes a single event; run() drives step() until every job is
    complete or the horizon is reached.
    """

    def __init__(self, scenario):
        self.scenario = scenario
        self.cluster = Cluster(scenario.build_nodes())
        self.basis = scenario.scheduler.basis
        self.policy = Policy(scenario.scheduler.policy)
        stream = scenario.build_stream()
        self.jobs = {job.job_id: job for job in stream.jobs}
        self.dags = {job.job_id: annotate_dag(job.dag, self.basis) for job in stream.jobs}

        self.pass_period_us = to_us(scenario.scheduler.pass_period_s)
        self.sort_period_us = to_us(scenario.scheduler.sort_period_s)
        self.actual_period_us = to_us(scenario.telemetry.actual_period_s)
        self.predict_period_us = to_us(scenario.telemetry.predict_period_s)
        self.horizon_us = to_us(scenario.horizon_s)

        self.monitor = Monitor(
            predict_period=scenario.telemetry.predict_period_s,
            actual_period=scenario.telemetry.actual_period_s,
            noise_std=scenario.telemetry.noise_std,
            rng=make_rng(scenario.seed, "telemetry"),
        )
        self.scheduler_rng = make_rng(scenario.seed, "scheduler")

        self.now_us = 0
        self._heap = []
        self._sequence = 0
        self._emitted = []
        self.pending = []
        self.specs = {}
        self.runs = {}
        self.completion = {}
        self.progress = {}
        self.ordering = None
        self.pass_at_us = None
        self.done = False

        self.waiting_on = {job.job_id: set(job.after) for job in stream.jobs}
        self.dependents = {job.job_id: [] for job in stream.jobs}
        for job in stream.jobs:
            for before in job.after:
                self.dependents[before].append(job.job_id)

        self.cpu_seconds = {n: 0.0 for n in self.cluster.node_ids}
        self.disk_ops = {n: 0.0 for n in self.cluster.node_ids}
        self.surplus = {n: 0.0 for n in self.cluster.node_ids}
        self._last_row = {}

        self.trace = SimTrace(
            scenario_name=scenario.name,
            seed=scenario.seed,
            policy=self.policy.value,
            nodes=[self._node_info(self.cluster.nodes[n]) for n in self.cluster.node_ids],
        )
        for job in stream.jobs:
            self.trace.jobs[job.job_id] = JobRecord(job.job_id, job.group, self.dags[job.job_id].task_count)
        self._bootstrap()

    @staticmethod
    def _node_info(node):
        baseline_fraction = None
        cpu_capacity = None
        if node.cpu_bucket is not None:
            baseline_fraction = node.cpu_bucket.baseline_rate / node.vcpu_count
            cpu_capacity = node.cpu_bucket.capacity
        return {
            "node_id": node.node_id,
            "instance_class": node.instance_class.value,
            "vcpu_count": node.vcpu_count,
            "slot_count": node.slot_count,
            "baseline_fraction": baseline_fraction,
            "cpu_capacity": cpu_capacity,
            "disk_capacity": node.disk_bucket.capacity,
        }

    def _bootstrap(self):
        self._push(0, EventKind.TELEMETRY_ACTUAL)
        self._push(0, EventKind.NODE_SORT)
        if self.predict_period_us < self.horizon_us:
            self._push(self.predict_period_us, EventKind.TELEMETRY_PREDICT)
        for job in self.jobs.values():
            if not job.after:
                self._push(to_us(job.submit_time), EventKind.JOB_SUBMIT, job_id=job.job_id)
        self._push(self.horizon_us, EventKind.HORIZON)
        self._record_nodes()
        self._emitted = []

    def _push(self, timestamp_us, kind, **payload):
        event = SimEvent(timestamp_us, self._sequence, kind, payload)
        self._sequence += 1
        heapq.heappush(self._heap, event)
        self._emitted.append(event)
        return event

    def add_probe(self, seconds):
        """Insert a no-op event; integration is exact, so probes never change outcomes."""
        return self._push(to_us(seconds), EventKind.PROBE)

    @property
    def now(self):
        return to_s(self.now_us)

    def usage(self):
        return {n: (self.cpu_seconds[n], self.disk_ops[n]) for n in self.cluster.node_ids}

    def step(self):
        """
        Process the next event.

        Returns:
            Events scheduled while handling it (empty for a dropped stale completion)
        """
        self._emitted = []
        event = heapq.heappop(self._heap)
        if event.kind == EventKind.TASK_COMPLETE:
            version, _ = self.completion.get(event.payload["task_id"], (None, None))
            if version != event.payload["version"]:
                return []
        if event.timestamp < self.now_us:
            raise RuntimeError(f"Event {event.kind.value} at {event.timestamp}us is in the past")
        self._advance_to(event.timestamp)
        handler = getattr(self, f"_on_{event.kind.value}")
        details = handler(event) or {}
        record = {"t_us": event.timestamp, "seq": event.sequence, "kind": event.kind.value}
        record.update({k: v for k, v in event.payload.items() if k != "version"})
        record.update(details)
        self.trace.events.append(record)
        return list(self._emitted)

    def run(self):
        while self._heap and not self.done:
            self.step()
        self._finish()
        return self.trace

    # Integration

    def _advance_to(self, timestamp_us):
        if timestamp_us == self.now_us:
            return
        dt = to_s(timestamp_us - self.now_us)
        for node_id in self.cluster.node_ids:
            self._integrate_node(node_id, dt)
        self.now_us = timestamp_us

    def _integrate_node(self, node_id, dt):
        node = self.cluster.nodes[node_id]
        if node.running:
            pieces = grant_plan(node)
            for i, (offset, grant) in enumerate(pieces):
                if offset >= dt:
                    break
                end = pieces[i + 1][0] if i + 1 < len(pieces) else dt
                span = min(end, dt) - offset
                for task_id, rate in task_shares(node, grant).items():
                    self.runs[task_id] = task_progress(self.runs[task_id], rate, span)
        node, served, overdraft = advance_buckets(node, dt)
        self.cluster.nodes[node_id] = node
        self.cpu_seconds[node_id] += served.cpu
        self.disk_ops[node_id] += served.disk
        self.surplus[node_id] += overdraft

    def _recompute_completions(self, node_id):
        node = self.cluster.nodes[node_id]
        if not node.running:
            return
        pieces = [(offset, task_shares(node, grant)) for offset, grant in grant_plan(node)]
        for task_id in sorted(node.running):
            run = self.runs[task_id]
            resource = run.spec.dominant
            rates = [(offset, shares[task_id].get(resource)) for offset, shares in pieces]
            seconds = time_to_finish(run.remaining.get(resource), rates)
            when = None if math.isinf(seconds) else self.now_us + to_us(seconds)
            version, current = self.completion.get(task_id, (0, None))
            if when is not None and current is not None and abs(when - current) <= COMPLETION_SLACK_US:
                continue
            if when is None and current is None and task_id in self.completion:
                continue
            self.completion[task_id] = (version + 1, when)
            if when is not None:
                self._push(when, EventKind.TASK_COMPLETE, task_id=task_id, version=version + 1)

    def _request_pass(self):
        if self.pass_at_us is not None:
            return
        periods = -(-self.now_us // self.pass_period_us)
        at = periods * self.pass_period_us
        if at >= self.horizon_us:
            return
        self.pass_at_us = at
        self._push(at, EventKind.SCHEDULER_PASS)

    def _record_nodes(self):
        time_s = self.now
        for node_id in self.cluster.node_ids:
            last = self._last_row.get(node_id)
            if last is not None and last[0] == self.now_us:
                continue
            node = self.cluster.nodes[node_id]
            cpu_s, ops = self.cpu_seconds[node_id], self.disk_ops[node_id]
            if last is None:
                cpu_util, iops = 0.0, 0.0
            else:
                window = to_s(self.now_us - last[0])
                cpu_util = (cpu_s - last[1]) / (window * node.vcpu_count)
                iops = (ops - last[2]) / window
            self.trace.node_rows.append({
                "time": time_s,
                "node_id": node_id,
                "cpu_credits": np.nan if node.cpu_bucket is None else node.cpu_bucket.balance,
                "disk_credits": node.disk_bucket.balance,
                "cpu_util": cpu_util,
                "granted_iops": iops,
                "cpu_seconds": cpu_s,
                "disk_ops": ops,
                "surplus_credits": self.surplus[node_id],
            })
            self._last_row[node_id] = (self.now_us, cpu_s, ops)

    # Event handlers

    def _on_job_submit(self, event):
        job_id = event.payload["job_id"]
        progress = DagProgress(self.dags[job_id], submit_time=self.now)
        self.progress[job_id] = progress
        self.trace.jobs[job_id].submit_us = self.now_us
        self._release(progress)
        logger.debug(f"t={self.now:.1f}s submitted job {job_id}")

    def _release(self, progress):
        tasks = ready_tasks(progress, self.now)
        if not tasks:
            return
        for spec in tasks:
            self.specs[spec.task_id] = spec
        self._push(self.now_us, EventKind.TASKS_READY, task_ids=[t.task_id for t in tasks])

    def _on_tasks_ready(self, event):
        for task_id in event.payload["task_ids"]:
            spec = self.specs[task_id]
            self.pending.append(spec)
            self.trace.tasks[task_id] = TaskRecord(
                task_id=task_id,
                job_id=spec.job_id,
                vertex_id=spec.vertex_id,
                stage=spec.stage.value,
                annotation=tuple(sorted(a.value for a in spec.annotation)),
                ready_us=self.now_us,
            )
        self._request_pass()

    def _on_scheduler_pass(self, event):
        self.pass_at_us = None
        free = self.cluster.free_slot_map()
        decision = schedule_pass(self.policy, list(self.pending), free, self.ordering, self.scheduler_rng)
        touched = set()
        for assignment in decision.assignments:
            spec = self.specs[assignment.task_id]
            self.cluster.assign(assignment.node_id, spec)
            self.runs[spec.task_id] = TaskRun.start(spec)
            record = self.trace.tasks[spec.task_id]
            record.start_us = self.now_us
            record.node_id = assignment.node_id
            record.phase = assignment.phase.value
            touched.add(assignment.node_id)
        placed = {a.task_id for a in decision.assignments}
        self.pending = [t for t in self.pending if t.task_id not in placed]
        for node_id in sorted(touched):
            self._recompute_completions(node_id)
        if decision.assignments:
            logger.debug(f"t={self.now:.1f}s pass placed {len(placed)} tasks, {len(self.pending)} pending")
        return {
            "assignments": decision.as_records(),
            "dual_flagged": list(decision.dual_flagged),
            "pending": len(self.pending),
            "snapshot_age_s": self.monitor.max_staleness(self.now),
        }

    def _on_node_sort(self, event):
        self.ordering = sort_nodes(self.monitor.snapshot, self.basis)
        nxt = self.now_us + self.sort_period_us
        if nxt < self.horizon_us:
            self._push(nxt, EventKind.NODE_SORT)
        return {"ordering": list(self.ordering.node_ids)}

    def _on_telemetry_actual(self, event):
        snapshot = self.monitor.observe_actual(self.cluster, self.usage(), self.now)
        nxt = self.now_us + self.actual_period_us
        if nxt < self.horizon_us:
            self._push(nxt, EventKind.TELEMETRY_ACTUAL)
        return {"snapshot": snapshot.as_dict()}

    def _on_telemetry_predict(self, event):
        snapshot = self.monitor.observe_predicted(self.cluster, self.usage(), self.now)
        staleness = self.monitor.max_staleness(self.now)
        if staleness > to_s(self.predict_period_us):
            stale = [n for n, e in snapshot.entries.items() if self.now - e.entry_time > to_s(self.predict_period_us)]
            logger.warning(f"t={self.now:.1f}s credit snapshot is {staleness:.1f}s old for {stale[:5]}")
        self._record_nodes()
        nxt = self.now_us + self.predict_period_us
        if nxt < self.horizon_us:
            self._push(nxt, EventKind.TELEMETRY_PREDICT)
        return {"snapshot": snapshot.as_dict()}

    def _on_task_complete(self, event):
        task_id = event.payload["task_id"]
        node_id = self.cluster.release(task_id)
        self.runs.pop(task_id)
        self.completion.pop(task_id)
        spec = self.specs[task_id]
        record = self.trace.tasks[task_id]
        record.complete_us = self.now_us

        progress = self.progress[spec.job_id]
        progress.mark_complete(spec.vertex_id)
        self._release(progress)
        if progress.finished:
            self._complete_job(spec.job_id)
        self._recompute_completions(node_id)
        self._request_pass()
        return {"node_id": node_id}

    def _complete_job(self, job_id):
        self.trace.jobs[job_id].complete_us = self.now_us
        logger.debug(f"t={self.now:.1f}s job {job_id} complete")
        for waiting in self.dependents[job_id]:
            self.waiting_on[waiting].discard(job_id)
            if not self.waiting_on[waiting]:
                at = max(to_us(self.jobs[waiting].submit_time), self.now_us)
                self._push(at, EventKind.JOB_SUBMIT, job_id=waiting)
        if self.jobs and all(r.complete_us is not None for r in self.trace.jobs.values()):
            self.done = True

    def _on_horizon(self, event):
        self.done = True
        live = len(self.runs)
        if live or any(r.complete_us is None for r in self.trace.jobs.values()):
            logger.warning(f"Horizon reached with {live} running and {len(self.pending)} pending tasks")
        return {"live_tasks": live, "pending_tasks": len(self.pending)}

    def _on_probe(self, event):
        return None

    def _finish(self):
        self._record_nodes()
        self.trace.end_us = self.now_us
        self.trace.complete = all(r.complete_us is not None for r in self.trace.jobs.values())


def run(scenario):
    """Run a scenario to completion or its horizon and return the SimTrace."""
    simulation = Simulation(scenario)
    trace = simulation.run()
    logger.info(
        f"Run {scenario.name} ({simulation.policy.value}, seed {scenario.seed}) finished at "
        f"t={to_s(trace.end_us):.1f}s, complete={trace.complete}"
    )
    return trace


@dataclass
class MetricsReport:
    phase_elapsed: pd.DataFrame
    jobs: pd.DataFrame
    credit_std: pd.DataFrame
    cpu_util: pd.DataFrame
    makespan_s: float
    mean_cpu_credit_std: float
    mean_disk_credit_std: float
    avg_granted_iops: float
    tasks_completed: int
    tasks_live: int
    complete: bool

    @property
    def total_task_elapsed_s(self):
        return float(self.phase_elapsed["cumulative_elapsed_s"].sum())

    def elapsed(self, stage):
        row = self.phase_elapsed[self.phase_elapsed["phase"] == stage]
        return float(row["cumulative_elapsed_s"].iloc[0]) if len(row) else 0.0

    def summary(self):
        return {
            "makespan_s": self.makespan_s,
            "total_task_elapsed_s": self.total_task_elapsed_s,
            "map_elapsed_s": self.elapsed("map"),
            "shuffle_elapsed_s": self.elapsed("shuffle"),
            "reduce_elapsed_s": self.elapsed("reduce"),
            "mean_cpu_credit_std": self.mean_cpu_credit_std,
            "mean_disk_credit_std": self.mean_disk_credit_std,
            "avg_granted_iops": self.avg_granted_iops,
            "tasks_completed": self.tasks_completed,
            "tasks_live": self.tasks_live,
            "complete": self.complete,
        }


def _time_average(times, values):
    """Trapezoid time-average of a sampled series (0 for an empty series)."""
    mask = ~np.isnan(values)
    times, values = times[mask], values[mask]
    if len(values) == 0:
        return 0.0
    span = times[-1] - times[0]
    if span <= 0:
        return float(values[-1])
    return float(np.trapezoid(values, times) / span)


def metrics(trace):
    """
    Derive the report tables from a trace.

    Phase elapsed time is the sum of task durations (start to completion) per
    stage; credit dispersion is the population standard deviation across nodes
    at each sampled instant.
    """
    tasks = trace.task_frame()
    finished = tasks.dropna(subset=["elapsed_us"])
    rows = []
    for stage in Stage:
        subset = finished[finished["stage"] == stage.value]
        total_us = int(subset["elapsed_us"].astype("int64").sum()) if len(subset) else 0
        rows.append({"phase": stage.value, "cumulative_elapsed_s": to_s(total_us), "task_count": len(subset)})
    phase_elapsed = pd.DataFrame(rows, columns=["phase", "cumulative_elapsed_s", "task_count"])

    nodes = trace.node_frame()
    if len(nodes):
        grouped = nodes.groupby("time", sort=True)
        credit_std = pd.DataFrame({
            "cpu_credit_std": grouped["cpu_credits"].std(ddof=0),
            "disk_credit_std": grouped["disk_credits"].std(ddof=0),
        }).reset_index()
        cpu_util = grouped["cpu_util"].mean().reset_index()
        times = credit_std["time"].to_numpy(dtype=float)
        mean_cpu_std = _time_average(times, credit_std["cpu_credit_std"].to_numpy(dtype=float))
        mean_disk_std = _time_average(times, credit_std["disk_credit_std"].to_numpy(dtype=float))
        total_ops = float(nodes.groupby("node_id")["disk_ops"].max().sum())
    else:
        credit_std = pd.DataFrame(columns=["time", "cpu_credit_std", "disk_credit_std"])
        cpu_util = pd.DataFrame(columns=["time", "cpu_util"])
        mean_cpu_std = mean_disk_std = 0.0
        total_ops = 0.0

    makespan = trace.makespan_s
    return MetricsReport(
        phase_elapsed=phase_elapsed,
        jobs=trace.job_frame(),
        credit_std=credit_std,
        cpu_util=cpu_util,
        makespan_s=makespan,
        mean_cpu_credit_std=mean_cpu_std,
        mean_disk_credit_std=mean_disk_std,
        avg_granted_iops=total_ops / makespan if makespan > 0 else 0.0,
        tasks_completed=len(finished),
        tasks_live=int(tasks["start_s"].notna().sum() - len(finished)),
        complete=trace.complete,
    )
