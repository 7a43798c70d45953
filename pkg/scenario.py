"""
Scenario format: the full description of one experiment.

Scenarios are YAML documents. parse_scenario validates the whole document and
reports every violation with its field path; serialize_scenario writes the
canonical form back, so parse(serialize(s)) == s.

Example:
    name: tiny
    seed: 7
    fleet:
      - prefix: node
        count: 1
        instance_class: burstable
        vcpu_count: 8
        slot_count: 8
        cpu: {baseline_fraction: 0.4, initial_credits: 0}
        disk: {volume_gb: 100}
    workload:
      entries:
        - preset: pagerank_like
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field

import yaml

from billing import PricingTable, DEFAULT_BURSTABLE_PRICE, DEFAULT_GENERAL_PRICE, DEFAULT_STORAGE_PRICE, PARITY_USAGE
from cluster import ClusterError, InstanceClass, NodeState, ResourceVector
from credits import CreditError, cpu_bucket, disk_bucket, DISK_CAPACITY, DISK_PEAK_IOPS, DISK_IOPS_PER_GB
from scheduler import DEFAULT_PASS_PERIOD_S, DEFAULT_SORT_PERIOD_S, Policy
from telemetry import DEFAULT_ACTUAL_PERIOD_S, DEFAULT_PREDICT_PERIOD_S
from workload import (Annotation, BurstBasis, DagVertex, Job, JobDag, OrderingPolicy, Stage, VertexKind,
                      WORKLOAD_PROFILES, WorkloadError, compose_stream, generate_workload, resolve_profile)

logger = logging.getLogger(__name__)

DEFAULT_HORIZON_S = 24 * 3600.0
MAX_SEED = 2 ** 64 - 1


class ScenarioError(ValueError):
    """All violations found in a scenario document, as (field_path, message) pairs."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{path}: {message}" for path, message in self.violations]
        super().__init__(f"{len(lines)} scenario violation(s):\n  " + "\n  ".join(lines))


@dataclass(frozen=True)
class CpuSpec:
    baseline_fraction: float = 0.4
    # None starts the bucket full
    initial_credits: float = 0.0
    capacity_hours: float = 24.0
    peak_fraction: float = 1.0


@dataclass(frozen=True)
class DiskSpec:
    volume_gb: float = 100.0
    zeroed: bool = False
    # None starts the volume full (unless zeroed)
    initial_credits: float = None
    peak_iops: float = DISK_PEAK_IOPS
    capacity: float = DISK_CAPACITY
    iops_per_gb: float = DISK_IOPS_PER_GB


@dataclass(frozen=True)
class FleetGroup:
    prefix: str
    count: int
    instance_class: InstanceClass
    vcpu_count: int
    slot_count: int
    cpu: CpuSpec
    disk: DiskSpec

    def node_ids(self):
        return [f"{self.prefix}-{i:02d}" for i in range(self.count)]

    def build(self):
        nodes = []
        for node_id in self.node_ids():
            bucket = None
            if self.instance_class.has_cpu_bucket:
                bucket = cpu_bucket(self.vcpu_count, self.cpu.baseline_fraction, self.cpu.initial_credits,
                                    self.cpu.capacity_hours, self.cpu.peak_fraction)
            volume = disk_bucket(self.disk.volume_gb, self.disk.zeroed, self.disk.initial_credits,
                                 self.disk.peak_iops, self.disk.capacity, self.disk.iops_per_gb)
            nodes.append(NodeState(node_id=node_id, vcpu_count=self.vcpu_count, slot_count=self.slot_count,
                                   disk_bucket=volume, instance_class=self.instance_class, cpu_bucket=bucket))
        return nodes


@dataclass(frozen=True)
class WorkloadEntry:
    preset: str
    scale: float = 1.0
    overrides: dict = field(default_factory=dict)
    name: str = None

    @property
    def group(self):
        return self.name or self.preset


@dataclass(frozen=True)
class WorkloadSection:
    ordering: OrderingPolicy = OrderingPolicy.AS_GIVEN
    sequential: bool = False
    entries: tuple = ()
    jobs: tuple = ()


@dataclass(frozen=True)
class SchedulerSection:
    policy: Policy = Policy.CASH
    basis: BurstBasis = BurstBasis.CPU
    pass_period_s: float = DEFAULT_PASS_PERIOD_S
    sort_period_s: float = DEFAULT_SORT_PERIOD_S


@dataclass(frozen=True)
class TelemetrySection:
    actual_period_s: float = DEFAULT_ACTUAL_PERIOD_S
    predict_period_s: float = DEFAULT_PREDICT_PERIOD_S
    noise_std: float = 0.0


@dataclass(frozen=True)
class PricingSection:
    burstable_hourly: float = DEFAULT_BURSTABLE_PRICE
    general_hourly: float = DEFAULT_GENERAL_PRICE
    # None bills unlimited nodes at the burstable price
    unlimited_hourly: float = None
    # None derives the price from the parity anchor
    surplus_per_vcpu_hour: float = None
    parity_usage: float = PARITY_USAGE
    storage_per_gb_month: float = DEFAULT_STORAGE_PRICE
    managed_multiplier: float = 1.0


@dataclass(frozen=True)
class OutputSection:
    write_events: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    fleet: tuple
    workload: WorkloadSection = WorkloadSection()
    scheduler: SchedulerSection = SchedulerSection()
    telemetry: TelemetrySection = TelemetrySection()
    pricing: PricingSection = PricingSection()
    output: OutputSection = OutputSection()
    horizon_s: float = DEFAULT_HORIZON_S
    time_scale: float = 1.0
    description: str = ""

    def build_nodes(self):
        return [node for group in self.fleet for node in group.build()]

    def build_stream(self):
        groups = []
        for index, entry in enumerate(self.workload.entries):
            stream = generate_workload(entry.preset, entry.scale, self.seed, entry.overrides,
                                       group=entry.group, entry_index=index)
            groups.append((entry.group, list(stream.jobs)))
        if self.workload.jobs:
            groups.append(("jobs", list(self.workload.jobs)))
        return compose_stream(groups, self.workload.ordering, self.workload.sequential)

    def pricing_table(self):
        section = self.pricing
        burstable = next((g for g in self.fleet if g.instance_class.has_cpu_bucket), None)
        baseline = burstable.cpu.baseline_fraction if burstable else 0.4
        vcpus = burstable.vcpu_count if burstable else 8
        table = PricingTable.calibrated(section.burstable_hourly, section.general_hourly, baseline, vcpus,
                                        section.parity_usage, storage_per_gb_month=section.storage_per_gb_month,
                                        managed_multiplier=section.managed_multiplier)
        hourly = dict(table.hourly)
        if section.unlimited_hourly is not None:
            hourly[InstanceClass.BURSTABLE_UNLIMITED] = section.unlimited_hourly
        surplus = table.surplus_per_vcpu_hour if section.surplus_per_vcpu_hour is None else section.surplus_per_vcpu_hour
        return PricingTable(hourly=hourly, surplus_per_vcpu_hour=surplus,
                            storage_per_gb_month=section.storage_per_gb_month,
                            managed_multiplier=section.managed_multiplier)

    def to_dict(self):
        return scenario_to_dict(self)

    def digest(self):
        return _digest(self.to_dict())

    def workload_digest(self):
        """Identity of the work itself: entries, explicit jobs, chaining and seed, but not the ordering policy."""
        data = self.to_dict()["workload"]
        data.pop("ordering", None)
        return _digest({"workload": data, "seed": self.seed})


def _digest(data):
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _plain(value):
    """Tuples to lists, recursively, so documents compare and dump uniformly."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class _Reader:
    """Typed field access that records violations instead of raising."""

    def __init__(self):
        self.violations = []

    def fail(self, path, message):
        self.violations.append((path, message))

    def section(self, data, key, path):
        value = data.get(key, {})
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.fail(f"{path}{key}", "must be a mapping")
            return {}
        return value

    def unknown(self, data, allowed, path):
        for key in data:
            if key not in allowed:
                self.fail(f"{path}{key}", "unknown field")

    def number(self, data, key, path, default, minimum=None, positive=False, integer=False, allow_none=False):
        if key not in data:
            return default
        value = data[key]
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"{path}{key}", f"must be a number (got {value!r})")
            return default
        if integer and int(value) != value:
            self.fail(f"{path}{key}", f"must be an integer (got {value!r})")
            return default
        if positive and not value > 0:
            self.fail(f"{path}{key}", f"must be > 0 (got {value})")
        elif minimum is not None and value < minimum:
            self.fail(f"{path}{key}", f"must be >= {minimum} (got {value})")
        return int(value) if integer else float(value)

    def choice(self, data, key, path, enum, default):
        if key not in data:
            return default
        try:
            return enum(data[key])
        except ValueError:
            options = ", ".join(e.value for e in enum)
            self.fail(f"{path}{key}", f"unknown value {data[key]!r} (expected one of {options})")
            return default

    def flag(self, data, key, path, default):
        if key not in data:
            return default
        if not isinstance(data[key], bool):
            self.fail(f"{path}{key}", f"must be true or false (got {data[key]!r})")
            return default
        return data[key]

    def text(self, data, key, path, default=None, required=False):
        if data.get(key) is None:
            if required:
                self.fail(f"{path}{key}", "required")
            return default
        if not isinstance(data[key], str) or not data[key]:
            self.fail(f"{path}{key}", "must be a non-empty string")
            return default
        return data[key]


FLEET_FIELDS = {"prefix", "count", "instance_class", "vcpu_count", "slot_count", "cpu", "disk"}
CPU_FIELDS = {"baseline_fraction", "initial_credits", "capacity_hours", "peak_fraction"}
DISK_FIELDS = {"volume_gb", "zeroed", "initial_credits", "peak_iops", "capacity", "iops_per_gb"}
TOP_FIELDS = {"name", "description", "seed", "horizon_s", "time_scale", "fleet", "workload", "scheduler",
              "telemetry", "pricing", "output"}


def _read_fleet(reader, raw):
    if not isinstance(raw, list) or not raw:
        reader.fail("fleet", "must be a non-empty list of node groups")
        return ()
    groups = []
    seen = set()
    for i, item in enumerate(raw):
        path = f"fleet[{i}]."
        if not isinstance(item, dict):
            reader.fail(f"fleet[{i}]", "must be a mapping")
            continue
        reader.unknown(item, FLEET_FIELDS, path)
        klass = reader.choice(item, "instance_class", path, InstanceClass, InstanceClass.BURSTABLE)
        cpu_raw = reader.section(item, "cpu", path)
        disk_raw = reader.section(item, "disk", path)
        reader.unknown(cpu_raw, CPU_FIELDS, f"{path}cpu.")
        reader.unknown(disk_raw, DISK_FIELDS, f"{path}disk.")
        if not klass.has_cpu_bucket and "cpu" in item:
            reader.fail(f"{path}cpu", "general-purpose instances have no cpu credit bucket")
        cpu = CpuSpec(
            baseline_fraction=reader.number(cpu_raw, "baseline_fraction", f"{path}cpu.", 0.4, positive=True),
            initial_credits=reader.number(cpu_raw, "initial_credits", f"{path}cpu.", 0.0, minimum=0, allow_none=True),
            capacity_hours=reader.number(cpu_raw, "capacity_hours", f"{path}cpu.", 24.0, positive=True),
            peak_fraction=reader.number(cpu_raw, "peak_fraction", f"{path}cpu.", 1.0, positive=True),
        )
        disk = DiskSpec(
            volume_gb=reader.number(disk_raw, "volume_gb", f"{path}disk.", 100.0, positive=True),
            zeroed=reader.flag(disk_raw, "zeroed", f"{path}disk.", False),
            initial_credits=reader.number(disk_raw, "initial_credits", f"{path}disk.", None, minimum=0,
                                          allow_none=True),
            peak_iops=reader.number(disk_raw, "peak_iops", f"{path}disk.", DISK_PEAK_IOPS, positive=True),
            capacity=reader.number(disk_raw, "capacity", f"{path}disk.", DISK_CAPACITY, positive=True),
            iops_per_gb=reader.number(disk_raw, "iops_per_gb", f"{path}disk.", DISK_IOPS_PER_GB, positive=True),
        )
        group = FleetGroup(
            prefix=reader.text(item, "prefix", path, "node"),
            count=reader.number(item, "count", path, 1, positive=True, integer=True),
            instance_class=klass,
            vcpu_count=reader.number(item, "vcpu_count", path, 8, positive=True, integer=True),
            slot_count=reader.number(item, "slot_count", path, 8, positive=True, integer=True),
            cpu=cpu if klass.has_cpu_bucket else CpuSpec(),
            disk=disk,
        )
        for node_id in group.node_ids():
            if node_id in seen:
                reader.fail(f"fleet[{i}].prefix", f"node id {node_id} is declared twice")
            seen.add(node_id)
        try:
            group.build()
        except (CreditError, ClusterError) as e:
            reader.fail(f"fleet[{i}]", f"node {group.node_ids()[0]}: {e}")
        groups.append(group)
    return tuple(groups)


def _read_vector(reader, data, key, path):
    raw = data.get(key, {})
    if not isinstance(raw, dict):
        reader.fail(f"{path}{key}", "must be a mapping of cpu/disk/network")
        return ResourceVector()
    reader.unknown(raw, {"cpu", "disk", "network"}, f"{path}{key}.")
    return ResourceVector(*(reader.number(raw, r, f"{path}{key}.", 0.0, minimum=0) for r in ("cpu", "disk", "network")))


def _read_job(reader, raw, path):
    job_id = reader.text(raw, "job_id", path, required=True)
    reader.unknown(raw, {"job_id", "submit_time_s", "after", "vertices"}, path)
    submit = reader.number(raw, "submit_time_s", path, 0.0, minimum=0)
    after = raw.get("after", []) or []
    if not isinstance(after, list) or not all(isinstance(a, str) for a in after):
        reader.fail(f"{path}after", "must be a list of job ids")
        after = []
    vertices = []
    for k, vraw in enumerate(raw.get("vertices") or []):
        vpath = f"{path}vertices[{k}]."
        if not isinstance(vraw, dict):
            reader.fail(vpath[:-1], "must be a mapping")
            continue
        reader.unknown(vraw, {"vertex_id", "kind", "tasks", "demand", "work", "upstream", "annotation", "stage"}, vpath)
        flags = []
        for flag in vraw.get("annotation", []) or []:
            try:
                flags.append(Annotation(flag))
            except ValueError:
                reader.fail(f"{vpath}annotation", f"unknown annotation {flag!r}")
        try:
            vertices.append(DagVertex(
                vertex_id=reader.text(vraw, "vertex_id", vpath, required=True) or f"v{k}",
                job_id=job_id or "?",
                vertex_kind=reader.choice(vraw, "kind", vpath, VertexKind, VertexKind.GENERIC),
                task_count=reader.number(vraw, "tasks", vpath, 1, positive=True, integer=True),
                per_task_demand=_read_vector(reader, vraw, "demand", vpath),
                per_task_work=_read_vector(reader, vraw, "work", vpath),
                upstream=frozenset(vraw.get("upstream", []) or []),
                annotation=frozenset(flags),
                stage=reader.choice(vraw, "stage", vpath, Stage, None),
            ))
        except WorkloadError as e:
            reader.fail(vpath[:-1], str(e))
    if not vertices:
        reader.fail(f"{path}vertices", "a job needs at least one vertex")
        return None
    try:
        return Job(job_id=job_id, dag=JobDag(job_id, tuple(vertices)), submit_time=submit, after=tuple(after),
                   group="jobs")
    except WorkloadError as e:
        reader.fail(path[:-1], str(e))
        return None


def _read_workload(reader, raw):
    path = "workload."
    reader.unknown(raw, {"ordering", "sequential", "entries", "jobs"}, path)
    entries = []
    for i, item in enumerate(raw.get("entries") or []):
        epath = f"{path}entries[{i}]."
        if not isinstance(item, dict):
            reader.fail(epath[:-1], "must be a mapping")
            continue
        reader.unknown(item, {"preset", "scale", "overrides", "name"}, epath)
        preset = reader.text(item, "preset", epath, required=True)
        overrides = item.get("overrides") or {}
        if not isinstance(overrides, dict):
            reader.fail(f"{epath}overrides", "must be a mapping")
            overrides = {}
        if preset is not None and preset not in WORKLOAD_PROFILES:
            reader.fail(f"{epath}preset", f"unknown workload preset {preset!r}")
        elif preset is not None:
            try:
                resolve_profile(preset, overrides)
            except WorkloadError as e:
                reader.fail(f"{epath}overrides", str(e))
        entries.append(WorkloadEntry(
            preset=preset,
            scale=reader.number(item, "scale", epath, 1.0, positive=True),
            overrides=_plain(overrides),
            name=reader.text(item, "name", epath),
        ))
    jobs = []
    for i, item in enumerate(raw.get("jobs") or []):
        if not isinstance(item, dict):
            reader.fail(f"{path}jobs[{i}]", "must be a mapping")
            continue
        job = _read_job(reader, item, f"{path}jobs[{i}].")
        if job is not None:
            jobs.append(job)
    return WorkloadSection(
        ordering=reader.choice(raw, "ordering", path, OrderingPolicy, OrderingPolicy.AS_GIVEN),
        sequential=reader.flag(raw, "sequential", path, False),
        entries=tuple(entries),
        jobs=tuple(jobs),
    )


def scenario_from_dict(data):
    """
    Validate a decoded document and build the Scenario.

    Raises:
        ScenarioError listing every violation found
    """
    reader = _Reader()
    if not isinstance(data, dict):
        raise ScenarioError([("<document>", "a scenario must be a mapping")])
    reader.unknown(data, TOP_FIELDS, "")

    if "seed" not in data:
        reader.fail("seed", "required (runs must be reproducible)")
    seed = reader.number(data, "seed", "", 0, minimum=0, integer=True)
    if seed is not None and seed > MAX_SEED:
        reader.fail("seed", "must fit in 64 bits")

    fleet = _read_fleet(reader, data.get("fleet"))
    workload = _read_workload(reader, reader.section(data, "workload", ""))

    sched_raw = reader.section(data, "scheduler", "")
    reader.unknown(sched_raw, {"policy", "basis", "pass_period_s", "sort_period_s"}, "scheduler.")
    scheduler = SchedulerSection(
        policy=reader.choice(sched_raw, "policy", "scheduler.", Policy, Policy.CASH),
        basis=reader.choice(sched_raw, "basis", "scheduler.", BurstBasis, BurstBasis.CPU),
        pass_period_s=reader.number(sched_raw, "pass_period_s", "scheduler.", DEFAULT_PASS_PERIOD_S, positive=True),
        sort_period_s=reader.number(sched_raw, "sort_period_s", "scheduler.", DEFAULT_SORT_PERIOD_S, positive=True),
    )

    tele_raw = reader.section(data, "telemetry", "")
    reader.unknown(tele_raw, {"actual_period_s", "predict_period_s", "noise_std"}, "telemetry.")
    telemetry = TelemetrySection(
        actual_period_s=reader.number(tele_raw, "actual_period_s", "telemetry.", DEFAULT_ACTUAL_PERIOD_S,
                                      positive=True),
        predict_period_s=reader.number(tele_raw, "predict_period_s", "telemetry.", DEFAULT_PREDICT_PERIOD_S,
                                       positive=True),
        noise_std=reader.number(tele_raw, "noise_std", "telemetry.", 0.0, minimum=0),
    )

    price_raw = reader.section(data, "pricing", "")
    reader.unknown(price_raw, set(PricingSection.__dataclass_fields__), "pricing.")
    pricing = PricingSection(
        burstable_hourly=reader.number(price_raw, "burstable_hourly", "pricing.", DEFAULT_BURSTABLE_PRICE, minimum=0),
        general_hourly=reader.number(price_raw, "general_hourly", "pricing.", DEFAULT_GENERAL_PRICE, minimum=0),
        unlimited_hourly=reader.number(price_raw, "unlimited_hourly", "pricing.", None, minimum=0, allow_none=True),
        surplus_per_vcpu_hour=reader.number(price_raw, "surplus_per_vcpu_hour", "pricing.", None, minimum=0,
                                            allow_none=True),
        parity_usage=reader.number(price_raw, "parity_usage", "pricing.", PARITY_USAGE, positive=True),
        storage_per_gb_month=reader.number(price_raw, "storage_per_gb_month", "pricing.", DEFAULT_STORAGE_PRICE,
                                           minimum=0),
        managed_multiplier=reader.number(price_raw, "managed_multiplier", "pricing.", 1.0, minimum=0),
    )

    out_raw = reader.section(data, "output", "")
    reader.unknown(out_raw, {"write_events"}, "output.")
    output = OutputSection(write_events=reader.flag(out_raw, "write_events", "output.", True))

    scenario = Scenario(
        name=reader.text(data, "name", "", "scenario"),
        description=data.get("description", "") or "",
        seed=seed,
        fleet=fleet,
        workload=workload,
        scheduler=scheduler,
        telemetry=telemetry,
        pricing=pricing,
        output=output,
        horizon_s=reader.number(data, "horizon_s", "", DEFAULT_HORIZON_S, positive=True),
        time_scale=reader.number(data, "time_scale", "", 1.0, positive=True),
    )

    if not reader.violations:
        try:
            scenario.build_stream()
        except WorkloadError as e:
            reader.fail("workload", str(e))
        try:
            scenario.pricing_table()
        except ValueError as e:
            reader.fail("pricing", str(e))

    if reader.violations:
        raise ScenarioError(reader.violations)
    return scenario


def parse_scenario(text, seed=None, policy=None):
    """
    Parse and validate a YAML scenario document.

    seed and policy, when given, replace the values in the document before validation.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScenarioError([("<document>", f"syntax error: {e}")])
    if isinstance(data, dict):
        if seed is not None:
            data["seed"] = seed
        if policy is not None:
            data.setdefault("scheduler", {})
            if isinstance(data["scheduler"], dict):
                data["scheduler"]["policy"] = policy
    return scenario_from_dict(data)


def _vertex_to_dict(vertex):
    return {
        "vertex_id": vertex.vertex_id,
        "kind": vertex.vertex_kind.value,
        "tasks": vertex.task_count,
        "demand": vertex.per_task_demand.as_dict(),
        "work": vertex.per_task_work.as_dict(),
        "upstream": sorted(vertex.upstream),
        "annotation": sorted(a.value for a in vertex.annotation),
        "stage": vertex.stage.value,
    }


def scenario_to_dict(scenario):
    """Canonical plain-data form of a scenario."""
    fleet = []
    for group in scenario.fleet:
        item = {
            "prefix": group.prefix,
            "count": group.count,
            "instance_class": group.instance_class.value,
            "vcpu_count": group.vcpu_count,
            "slot_count": group.slot_count,
            "disk": dict(group.disk.__dict__),
        }
        if group.instance_class.has_cpu_bucket:
            item["cpu"] = dict(group.cpu.__dict__)
        fleet.append(item)
    workload = {
        "ordering": scenario.workload.ordering.value,
        "sequential": scenario.workload.sequential,
        "entries": [
            {"preset": e.preset, "scale": e.scale, "overrides": _plain(e.overrides), "name": e.name}
            for e in scenario.workload.entries
        ],
        "jobs": [
            {"job_id": j.job_id, "submit_time_s": j.submit_time, "after": list(j.after),
             "vertices": [_vertex_to_dict(v) for v in j.dag.vertices]}
            for j in scenario.workload.jobs
        ],
    }
    return {
        "name": scenario.name,
        "description": scenario.description,
        "seed": scenario.seed,
        "horizon_s": scenario.horizon_s,
        "time_scale": scenario.time_scale,
        "fleet": fleet,
        "workload": workload,
        "scheduler": {
            "policy": scenario.scheduler.policy.value,
            "basis": scenario.scheduler.basis.value,
            "pass_period_s": scenario.scheduler.pass_period_s,
            "sort_period_s": scenario.scheduler.sort_period_s,
        },
        "telemetry": dict(scenario.telemetry.__dict__),
        "pricing": dict(scenario.pricing.__dict__),
        "output": dict(scenario.output.__dict__),
    }


def serialize_scenario(scenario):
    """YAML text that parses back to an identical Scenario."""
    return yaml.safe_dump(scenario_to_dict(scenario), sort_keys=False, default_flow_style=False)


def load_scenario(path, seed=None, policy=None):
    """Read and parse a scenario file."""
    with open(path, "r", encoding="utf-8") as f:
        return parse_scenario(f.read(), seed, policy)
