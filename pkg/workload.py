"""
Job and DAG model: vertex annotation, dependency-driven task release and the
synthetic workload presets (HiBench-like batch jobs, TPC-DS-like query streams).

Usage:
    stream = generate_workload("sql_agg_like", scale=1.0, seed=7)
    for job in stream.jobs:
        print(job.job_id, len(job.dag.vertices))
"""

import copy
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import networkx as nx

from cluster import RESOURCES, ResourceVector
from randomness import make_rng

logger = logging.getLogger(__name__)

EARLY_SHUFFLE_THRESHOLD = 0.05
FULL_THRESHOLD = 1.0
WORK_TOLERANCE = 1e-9


class WorkloadError(ValueError):
    """Raised for malformed DAGs, jobs or workload requests."""


class CyclicDagError(WorkloadError):
    pass


class UnknownPresetError(WorkloadError):
    pass


class Annotation(str, Enum):
    BURST_CPU = "burst_cpu"
    BURST_DISK = "burst_disk"
    NETWORK = "network"


BURST_FLAGS = frozenset({Annotation.BURST_CPU, Annotation.BURST_DISK})


class VertexKind(str, Enum):
    ROOT_INPUT = "root_input"
    SHUFFLE = "shuffle"
    GENERIC = "generic"


class Stage(str, Enum):
    MAP = "map"
    SHUFFLE = "shuffle"
    REDUCE = "reduce"


class BurstBasis(str, Enum):
    CPU = "cpu"
    DISK = "disk"

    @property
    def annotation(self):
        return Annotation.BURST_CPU if self == BurstBasis.CPU else Annotation.BURST_DISK


class OrderingPolicy(str, Enum):
    AS_GIVEN = "as_given"
    CPU_INTENSIVE_FIRST = "cpu_intensive_first"
    CPU_INTENSIVE_LAST = "cpu_intensive_last"


DEFAULT_STAGE = {
    VertexKind.ROOT_INPUT: Stage.MAP,
    VertexKind.SHUFFLE: Stage.SHUFFLE,
    VertexKind.GENERIC: Stage.REDUCE,
}


def dominant_resource(demand, work):
    """
    Resource that bounds the task's unthrottled duration (largest work/demand).

    Ties resolve in cpu, disk, network order.
    """
    best, best_seconds = None, -1.0
    for resource in RESOURCES:
        amount = work.get(resource)
        if amount <= 0:
            continue
        seconds = amount / demand.get(resource)
        if seconds > best_seconds:
            best, best_seconds = resource, seconds
    return best


@dataclass(frozen=True)
class DagVertex:
    vertex_id: str
    job_id: str
    vertex_kind: VertexKind
    task_count: int
    per_task_demand: ResourceVector
    per_task_work: ResourceVector
    upstream: frozenset = frozenset()
    annotation: frozenset = frozenset()
    stage: Stage = None
    # Optional per-task (demand, work) pairs overriding the uniform values
    task_profiles: tuple = ()

    def __post_init__(self):
        if self.stage is None:
            object.__setattr__(self, "stage", DEFAULT_STAGE[self.vertex_kind])
        if self.task_count < 1:
            raise WorkloadError(f"Vertex {self.job_id}/{self.vertex_id}: task_count must be >= 1")
        if self.vertex_kind == VertexKind.ROOT_INPUT and self.upstream:
            raise WorkloadError(f"Vertex {self.job_id}/{self.vertex_id}: root_input vertices have no upstream")
        if self.task_profiles and len(self.task_profiles) != self.task_count:
            raise WorkloadError(f"Vertex {self.job_id}/{self.vertex_id}: task_profiles must list every task")
        for demand, work in self.profiles():
            _check_task_shape(f"{self.job_id}/{self.vertex_id}", demand, work)

    def profiles(self):
        if self.task_profiles:
            return list(self.task_profiles)
        return [(self.per_task_demand, self.per_task_work)] * self.task_count


def _check_task_shape(label, demand, work):
    for resource in RESOURCES:
        if demand.get(resource) < 0 or work.get(resource) < 0:
            raise WorkloadError(f"Vertex {label}: demand and work must be >= 0")
        if work.get(resource) > 0 and demand.get(resource) <= 0:
            raise WorkloadError(f"Vertex {label}: work on {resource} needs a positive {resource} demand")
    if dominant_resource(demand, work) is None:
        raise WorkloadError(f"Vertex {label}: tasks need work on at least one resource")


@dataclass(frozen=True)
class JobDag:
    job_id: str
    vertices: tuple

    def __post_init__(self):
        ids = [v.vertex_id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise WorkloadError(f"Job {self.job_id}: duplicate vertex ids")
        for vertex in self.vertices:
            if vertex.job_id != self.job_id:
                raise WorkloadError(f"Vertex {vertex.vertex_id} belongs to {vertex.job_id}, not {self.job_id}")
            missing = set(vertex.upstream) - set(ids)
            if missing:
                raise WorkloadError(f"Job {self.job_id}: vertex {vertex.vertex_id} consumes unknown {sorted(missing)}")
        graph = self.graph()
        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise CyclicDagError(f"Job {self.job_id}: DAG has a cycle through {[edge[0] for edge in cycle]}")

    def graph(self):
        graph = nx.DiGraph()
        for vertex in self.vertices:
            graph.add_node(vertex.vertex_id)
            for source in vertex.upstream:
                graph.add_edge(source, vertex.vertex_id)
        return graph

    def vertex(self, vertex_id):
        for vertex in self.vertices:
            if vertex.vertex_id == vertex_id:
                return vertex
        raise KeyError(vertex_id)

    @property
    def task_count(self):
        return sum(v.task_count for v in self.vertices)


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    vertex_id: str
    job_id: str
    index: int
    annotation: frozenset
    demand: ResourceVector
    work: ResourceVector
    submit_time: float
    stage: Stage

    @property
    def dominant(self):
        return dominant_resource(self.demand, self.work)

    @property
    def unthrottled_seconds(self):
        resource = self.dominant
        return self.work.get(resource) / self.demand.get(resource)


@dataclass(frozen=True)
class Job:
    job_id: str
    dag: JobDag
    submit_time: float = 0.0
    after: tuple = ()
    group: str = ""


@dataclass(frozen=True)
class JobStream:
    jobs: tuple
    ordering: OrderingPolicy = OrderingPolicy.AS_GIVEN

    def __post_init__(self):
        times = [job.submit_time for job in self.jobs]
        if any(b < a for a, b in zip(times, times[1:])):
            raise WorkloadError("Job submit times must be non-decreasing")
        ids = [job.job_id for job in self.jobs]
        if len(set(ids)) != len(ids):
            raise WorkloadError("Duplicate job ids in stream")
        deps = nx.DiGraph()
        deps.add_nodes_from(ids)
        for job in self.jobs:
            for before in job.after:
                if before not in deps:
                    raise WorkloadError(f"Job {job.job_id} waits for unknown job {before}")
                deps.add_edge(before, job.job_id)
        if not nx.is_directed_acyclic_graph(deps):
            raise CyclicDagError("Job dependencies form a cycle")

    def job(self, job_id):
        for job in self.jobs:
            if job.job_id == job_id:
                return job
        raise KeyError(job_id)


def annotate_dag(dag, mode):
    """
    Attach burst and network annotations by vertex kind.

    root_input vertices carry exactly the run's burst flag (a burst flag of the
    other basis is dropped), shuffle vertices gain network; generic vertices
    keep whatever the user gave them. Idempotent.
    """
    mode = BurstBasis(mode)
    if not nx.is_directed_acyclic_graph(dag.graph()):
        raise CyclicDagError(f"Job {dag.job_id}: cannot annotate a cyclic DAG")
    vertices = []
    for vertex in dag.vertices:
        flags = set(vertex.annotation)
        if vertex.vertex_kind == VertexKind.ROOT_INPUT:
            flags -= BURST_FLAGS
            flags.add(mode.annotation)
        elif vertex.vertex_kind == VertexKind.SHUFFLE:
            flags.add(Annotation.NETWORK)
        vertices.append(replace(vertex, annotation=frozenset(flags)))
    return replace(dag, vertices=tuple(vertices))


def release_threshold(vertex, upstream_vertex):
    """Completed fraction of upstream_vertex needed before `vertex` may start."""
    if vertex.vertex_kind == VertexKind.SHUFFLE and upstream_vertex.vertex_kind == VertexKind.ROOT_INPUT:
        return EARLY_SHUFFLE_THRESHOLD
    return FULL_THRESHOLD


class DagProgress:
    """Completion bookkeeping for one submitted job."""

    def __init__(self, dag, submit_time=0.0):
        self.dag = dag
        self.submit_time = submit_time
        self.completed = {v.vertex_id: 0 for v in dag.vertices}
        self.released = set()

    def completed_fraction(self, vertex_id):
        return self.completed[vertex_id] / self.dag.vertex(vertex_id).task_count

    def mark_complete(self, vertex_id):
        vertex = self.dag.vertex(vertex_id)
        if self.completed[vertex_id] >= vertex.task_count:
            raise WorkloadError(f"Vertex {self.dag.job_id}/{vertex_id} has no running task left to complete")
        self.completed[vertex_id] += 1

    @property
    def finished(self):
        return all(self.completed[v.vertex_id] == v.task_count for v in self.dag.vertices)

    def tasks_of(self, vertex):
        return [
            TaskSpec(
                task_id=f"{self.dag.job_id}/{vertex.vertex_id}/{index:04d}",
                vertex_id=vertex.vertex_id,
                job_id=self.dag.job_id,
                index=index,
                annotation=vertex.annotation,
                demand=demand,
                work=work,
                submit_time=self.submit_time,
                stage=vertex.stage,
            )
            for index, (demand, work) in enumerate(vertex.profiles())
        ]


def ready_tasks(progress, now):
    """
    Release the tasks of every vertex whose upstream thresholds are now met.

    Each vertex is released once; the returned tasks are ordered by
    (vertex_id, task index).
    """
    dag = progress.dag
    newly = []
    for vertex in sorted(dag.vertices, key=lambda v: v.vertex_id):
        if vertex.vertex_id in progress.released:
            continue
        met = all(
            progress.completed_fraction(source) + 1e-12 >= release_threshold(vertex, dag.vertex(source))
            for source in vertex.upstream
        )
        if met:
            progress.released.add(vertex.vertex_id)
            newly.extend(progress.tasks_of(vertex))
    if newly:
        logger.debug(f"t={now:.3f}s job {dag.job_id}: released {len(newly)} tasks")
    return newly


@dataclass(frozen=True)
class TaskRun:
    """Execution state of a started task: its spec and remaining work."""
    spec: TaskSpec
    remaining: ResourceVector

    @classmethod
    def start(cls, spec):
        return cls(spec=spec, remaining=spec.work)

    @property
    def done(self):
        resource = self.spec.dominant
        return self.remaining.get(resource) <= WORK_TOLERANCE * self.spec.work.get(resource)


def task_progress(task, granted_rates, dt):
    """Decrement remaining work by granted * dt on every resource (never below zero)."""
    remaining = ResourceVector(
        *(max(0.0, task.remaining.get(r) - granted_rates.get(r) * dt) for r in RESOURCES)
    )
    return replace(task, remaining=remaining)


def time_to_finish(remaining, rate_pieces):
    """
    Seconds to serve `remaining` work under a piecewise-constant rate.

    Args:
        remaining: Work left on the dominant resource
        rate_pieces: [(offset_seconds, rate), ...] sorted by offset, first offset 0

    Returns:
        Seconds from now, or math.inf if the rate never finishes the work
    """
    if remaining <= 0:
        return 0.0
    for i, (offset, rate) in enumerate(rate_pieces):
        end = rate_pieces[i + 1][0] if i + 1 < len(rate_pieces) else math.inf
        if rate > 0 and rate * (end - offset) >= remaining:
            return offset + remaining / rate
        if math.isinf(end):
            return math.inf
        remaining -= rate * (end - offset)
    return math.inf


# Calibration knobs for the synthetic presets. Ranges are uniform draws;
# "seconds" is the unthrottled duration, from which work = primary demand * seconds.
WORKLOAD_PROFILES = {
    "sql_agg_like": {
        "family": "mapreduce",
        "description": "Hive-style aggregation; map CPU demand well above a 40% baseline",
        "jobs": 2,
        "chained": True,
        "map_primary": "cpu",
        "map": {"tasks": 40, "cpu": (0.70, 0.90), "disk": (20.0, 60.0), "network": (0.0, 0.0),
                "seconds": (150.0, 300.0)},
        "shuffle": {"tasks": 8, "cpu": (0.05, 0.15), "disk": (5.0, 20.0), "network": (50.0, 100.0),
                    "seconds": (60.0, 120.0)},
        "reduce": {"tasks": 8, "cpu": (0.20, 0.35), "disk": (10.0, 40.0), "network": (0.0, 0.0),
                   "seconds": (60.0, 120.0)},
    },
    "pagerank_like": {
        "family": "mapreduce",
        "description": "Iterative graph ranking; CPU demand below baseline",
        "jobs": 2,
        "chained": True,
        "map_primary": "cpu",
        "map": {"tasks": 40, "cpu": (0.15, 0.35), "disk": (10.0, 40.0), "network": (0.0, 0.0),
                "seconds": (300.0, 600.0)},
        "shuffle": {"tasks": 8, "cpu": (0.05, 0.10), "disk": (5.0, 20.0), "network": (50.0, 100.0),
                    "seconds": (60.0, 120.0)},
        "reduce": {"tasks": 8, "cpu": (0.15, 0.30), "disk": (10.0, 30.0), "network": (0.0, 0.0),
                   "seconds": (90.0, 180.0)},
    },
    "kmeans_like": {
        "family": "mapreduce",
        "description": "Clustering iterations; CPU demand below baseline",
        "jobs": 2,
        "chained": True,
        "map_primary": "cpu",
        "map": {"tasks": 32, "cpu": (0.20, 0.35), "disk": (10.0, 40.0), "network": (0.0, 0.0),
                "seconds": (300.0, 600.0)},
        "shuffle": {"tasks": 8, "cpu": (0.05, 0.10), "disk": (5.0, 20.0), "network": (50.0, 100.0),
                    "seconds": (60.0, 120.0)},
        "reduce": {"tasks": 8, "cpu": (0.15, 0.30), "disk": (10.0, 30.0), "network": (0.0, 0.0),
                   "seconds": (90.0, 180.0)},
    },
    "tpcds_like_q": {
        "family": "query",
        "description": "Three disk-heavy query DAGs run in parallel, each repeated back to back",
        "iterations": 6,
        "map_primary": "disk",
        # query name -> task counts of its scan (root_input) vertices
        "queries": {"q66_like": (6, 4), "q49_like": (5, 3), "q37_like": (8,)},
        "map": {"cpu": (0.10, 0.25), "disk": (300.0, 600.0), "network": (0.0, 0.0),
                "seconds": (60.0, 120.0)},
        "shuffle": {"tasks": 4, "cpu": (0.05, 0.10), "disk": (10.0, 30.0), "network": (50.0, 100.0),
                    "seconds": (30.0, 60.0)},
        "reduce": {"tasks": 2, "cpu": (0.30, 0.60), "disk": (10.0, 30.0), "network": (0.0, 0.0),
                   "seconds": (30.0, 60.0)},
    },
}

STAGE_PRIMARY = {"shuffle": "network", "reduce": "cpu"}


def resolve_profile(preset, overrides=None):
    """Preset knobs with overrides merged in (one level deep for stage tables)."""
    if preset not in WORKLOAD_PROFILES:
        raise UnknownPresetError(f"Unknown workload preset: {preset}")
    profile = copy.deepcopy(WORKLOAD_PROFILES[preset])
    for key, value in (overrides or {}).items():
        if key not in profile:
            raise WorkloadError(f"Preset {preset} has no knob named {key}")
        if isinstance(profile[key], dict) and isinstance(value, dict):
            for inner, inner_value in value.items():
                if key != "queries" and inner not in profile[key]:
                    raise WorkloadError(f"Preset {preset} has no knob named {key}.{inner}")
                profile[key][inner] = tuple(inner_value) if isinstance(inner_value, list) else inner_value
            if key == "queries":
                profile[key] = {name: tuple(counts) for name, counts in value.items()}
        else:
            profile[key] = value
    return profile


def _scaled(count, scale):
    return max(1, math.ceil(count * scale - 1e-9))


def _draw_tasks(rng, table, count, primary):
    """Per-task (demand, work) pairs; draws demand (cpu, disk, network) then duration per task."""
    profiles = []
    for _ in range(count):
        demand = ResourceVector(*(float(rng.uniform(*table[r])) for r in RESOURCES))
        seconds = float(rng.uniform(*table["seconds"]))
        work = ResourceVector(**{primary: demand.get(primary) * seconds})
        profiles.append((demand, work))
    return tuple(profiles)


def _vertex(job_id, vertex_id, kind, profiles, upstream=(), stage=None):
    demand, work = profiles[0]
    return DagVertex(
        vertex_id=vertex_id,
        job_id=job_id,
        vertex_kind=kind,
        task_count=len(profiles),
        per_task_demand=demand,
        per_task_work=work,
        upstream=frozenset(upstream),
        stage=stage,
        task_profiles=profiles,
    )


def _mapreduce_jobs(profile, group, scale, rng):
    jobs = []
    primary = profile["map_primary"]
    for n in range(int(profile["jobs"])):
        job_id = f"{group}-{n:02d}"
        maps = _draw_tasks(rng, profile["map"], _scaled(profile["map"]["tasks"], scale), primary)
        shuffles = _draw_tasks(rng, profile["shuffle"], _scaled(profile["shuffle"]["tasks"], scale),
                               STAGE_PRIMARY["shuffle"])
        reduces = _draw_tasks(rng, profile["reduce"], _scaled(profile["reduce"]["tasks"], scale),
                              STAGE_PRIMARY["reduce"])
        dag = JobDag(job_id, (
            _vertex(job_id, "v1-map", VertexKind.ROOT_INPUT, maps),
            _vertex(job_id, "v2-shuffle", VertexKind.SHUFFLE, shuffles, upstream=("v1-map",)),
            _vertex(job_id, "v3-reduce", VertexKind.GENERIC, reduces, upstream=("v1-map", "v2-shuffle")),
        ))
        after = (jobs[-1].job_id,) if jobs and profile.get("chained", True) else ()
        jobs.append(Job(job_id=job_id, dag=dag, after=after, group=group))
    return jobs


def _query_jobs(profile, group, scale, rng):
    jobs = []
    primary = profile["map_primary"]
    for iteration in range(int(profile["iterations"])):
        for query, scans in profile["queries"].items():
            job_id = f"{group}-{query}-i{iteration:02d}"
            scan_ids = [f"v1-scan{k}" for k in range(len(scans))]
            vertices = [
                _vertex(job_id, scan_id, VertexKind.ROOT_INPUT,
                        _draw_tasks(rng, profile["map"], _scaled(count, scale), primary))
                for scan_id, count in zip(scan_ids, scans)
            ]
            vertices.append(_vertex(job_id, "v2-join", VertexKind.SHUFFLE,
                                    _draw_tasks(rng, profile["shuffle"],
                                                _scaled(profile["shuffle"]["tasks"], scale),
                                                STAGE_PRIMARY["shuffle"]),
                                    upstream=scan_ids))
            vertices.append(_vertex(job_id, "v3-aggregate", VertexKind.GENERIC,
                                    _draw_tasks(rng, profile["reduce"],
                                                _scaled(profile["reduce"]["tasks"], scale),
                                                STAGE_PRIMARY["reduce"]),
                                    upstream=scan_ids + ["v2-join"]))
            after = (f"{group}-{query}-i{iteration - 1:02d}",) if iteration else ()
            jobs.append(Job(job_id=job_id, dag=JobDag(job_id, tuple(vertices)), after=after, group=group))
    return jobs


def generate_workload(preset, scale=1.0, seed=0, overrides=None, group=None, entry_index=0):
    """
    Build a synthetic job stream; a pure function of its arguments.

    Args:
        preset: Name in WORKLOAD_PROFILES
        scale: Multiplier on per-vertex task counts (> 0)
        seed: Scenario seed
        overrides: Knob overrides, e.g. {"jobs": 1, "map": {"tasks": 56}}
        group: Prefix for job ids (defaults to the preset name)
        entry_index: Position of this entry in the scenario, selects the random stream

    Returns:
        JobStream with un-annotated DAGs
    """
    if not scale > 0:
        raise WorkloadError(f"scale must be > 0 (got {scale})")
    profile = resolve_profile(preset, overrides)
    group = group or preset
    rng = make_rng(seed, "workload", entry_index)
    if profile["family"] == "query":
        jobs = _query_jobs(profile, group, scale, rng)
    else:
        jobs = _mapreduce_jobs(profile, group, scale, rng)
    logger.debug(f"Generated {len(jobs)} jobs for preset {preset} (scale={scale}, seed={seed})")
    return JobStream(jobs=tuple(jobs))


def cpu_intensity(jobs):
    """Duration-weighted mean CPU demand of all tasks in a list of jobs."""
    weighted, seconds = 0.0, 0.0
    for job in jobs:
        for vertex in job.dag.vertices:
            for demand, work in vertex.profiles():
                resource = dominant_resource(demand, work)
                duration = work.get(resource) / demand.get(resource)
                weighted += demand.cpu * duration
                seconds += duration
    return weighted / seconds if seconds else 0.0


def compose_stream(groups, ordering=OrderingPolicy.AS_GIVEN, sequential=False):
    """
    Merge workload groups into one stream.

    Args:
        groups: [(group_name, [Job, ...]), ...] in declaration order
        ordering: How to reorder groups by CPU intensity
        sequential: Chain groups so each starts after the previous one finishes

    Returns:
        JobStream
    """
    ordering = OrderingPolicy(ordering)
    ordered = list(groups)
    if ordering == OrderingPolicy.CPU_INTENSIVE_FIRST:
        ordered.sort(key=lambda g: -cpu_intensity(g[1]))
    elif ordering == OrderingPolicy.CPU_INTENSIVE_LAST:
        ordered.sort(key=lambda g: cpu_intensity(g[1]))

    jobs = []
    previous_terminals = ()
    for _, group_jobs in ordered:
        waited_on = {before for job in group_jobs for before in job.after}
        for job in group_jobs:
            if sequential and previous_terminals and not job.after:
                job = replace(job, after=tuple(previous_terminals))
            jobs.append(job)
        if group_jobs:
            previous_terminals = tuple(j.job_id for j in group_jobs if j.job_id not in waited_on)

    jobs.sort(key=lambda j: j.submit_time)
    return JobStream(jobs=tuple(jobs), ordering=ordering)
