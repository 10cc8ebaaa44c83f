"""Scenario configuration: dataclass configs for every subsystem, the
timed command list, and JSON (de)serialization with validation.

A scenario file fully determines a run: seed, topology, experiment
parameters, subsystem tuning, the initial authority mask, and a sorted
list of timed operator commands.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

from farmsim.farm import ExperimentParams, PaParams
from farmsim.mitigation import AuthorityMask

__all__ = [
    "ArmorConfig",
    "Command",
    "FarmletConfig",
    "FilterConfig",
    "MitigationConfig",
    "Scenario",
    "ScenarioError",
    "TopologyConfig",
    "VlaConfig",
    "load_scenario",
    "scenario_hash",
]

COMMAND_KINDS = (
    "hang_pa",
    "restart_pa",
    "sever",
    "restore",
    "set_error_rate",
    "set_behavior",
    "set_params",
    "set_authority",
    "stop",
    "go",
)


class ScenarioError(ValueError):
    """Scenario failed validation; message lists every problem found."""


@dataclass
class FarmletConfig:
    id: str
    workers: int
    role: str = "active"  # active | hot_spare


@dataclass
class TopologyConfig:
    farmlets: list[FarmletConfig] = field(
        default_factory=lambda: [
            FarmletConfig("f0", 6, "active"),
            FarmletConfig("f1", 5, "active"),
            FarmletConfig("f2", 5, "hot_spare"),
        ]
    )
    queue_capacity: int = 64
    link_latency: float = 0.0


@dataclass
class VlaConfig:
    impl: str = "chart"  # chart | hand
    grace_factor: float = 0.25  # grace period as a fraction of the estimate
    p_cleanup: float = 0.5  # cleanup success probability for overruns
    reset_latency: float = 0.05  # worker unavailable this long during restart
    postlude: float = 0.0002  # per-crossing agent bookkeeping window (V time)
    n_subsume: int = 3
    subsume_window: float = 10.0
    wr_holder: str = "worker"  # worker | farmlet
    worker_chart: str | None = None  # path to a chart file; default ships in-package
    farmlet_chart: str | None = None


@dataclass
class MitigationConfig:
    prescale_target: float = 0.5
    prescale_gain: float = 2.0
    gp_aggregate: str = "max"  # max | mean
    theta_f: float = 0.5  # unfit when windowed efficiency drops below this
    window_f: float = 2.0
    failover_delay: float = 0.2  # decision -> routing switch


@dataclass
class ArmorConfig:
    heartbeat_period: float = 0.5
    miss_threshold: int = 3
    imbalance_ratio: float = 2.0
    max_restarts: int = 3


@dataclass
class FilterConfig:
    l2_pass: float = 0.1
    l3_pass: float = 0.5


@dataclass
class Command:
    """One timed operator command. t is the virtual receipt time (None for
    live commands, which are stamped on arrival)."""

    kind: str
    t: float | None = None
    args: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"t": self.t, "kind": self.kind, "args": dict(self.args)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Command":
        extra = {k: v for k, v in data.items() if k not in ("t", "kind", "args")}
        args = dict(data.get("args", {}))
        args.update(extra)  # tolerate flattened command bodies
        return cls(kind=data["kind"], t=data.get("t"), args=args)


@dataclass
class Scenario:
    name: str = "scenario"
    description: str = ""
    seed: int = 1
    duration: float = 10.0
    telemetry_period: float = 0.1
    stats_period: float = 0.1
    gen_batch: float = 0.01
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    params: ExperimentParams = field(default_factory=ExperimentParams)
    pa: PaParams = field(default_factory=PaParams)
    vla: VlaConfig = field(default_factory=VlaConfig)
    mitigation: MitigationConfig = field(default_factory=MitigationConfig)
    armor: ArmorConfig = field(default_factory=ArmorConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    authority: AuthorityMask = field(default_factory=AuthorityMask)
    commands: list[Command] = field(default_factory=list)

    # ------------------------------------------------------------------
    def worker_count(self) -> int:
        return sum(f.workers for f in self.topology.farmlets)

    def validate(self) -> list[str]:
        problems = []
        if self.duration <= 0:
            problems.append("duration must be > 0")
        for name in ("telemetry_period", "stats_period", "gen_batch"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be > 0")
        problems += self.params.validate()
        problems += self.pa.validate()
        if not self.topology.farmlets:
            problems.append("topology needs at least one farmlet")
        seen_ids = set()
        for f in self.topology.farmlets:
            if f.id in seen_ids:
                problems.append(f"duplicate farmlet id {f.id!r}")
            seen_ids.add(f.id)
            if f.workers < 1:
                problems.append(f"farmlet {f.id!r} needs at least one worker")
            if f.role not in ("active", "hot_spare"):
                problems.append(f"farmlet {f.id!r} has unknown role {f.role!r}")
        if self.topology.queue_capacity < 1:
            problems.append("queue_capacity must be >= 1")
        if self.vla.impl not in ("chart", "hand"):
            problems.append(f"vla.impl must be chart or hand, not {self.vla.impl!r}")
        if self.vla.wr_holder not in ("worker", "farmlet"):
            problems.append(f"vla.wr_holder must be worker or farmlet, not {self.vla.wr_holder!r}")
        if not 0.0 <= self.vla.p_cleanup <= 1.0:
            problems.append("vla.p_cleanup must be within [0, 1]")
        if self.vla.grace_factor <= 0:
            problems.append("vla.grace_factor must be > 0")
        if self.mitigation.gp_aggregate not in ("max", "mean"):
            problems.append("mitigation.gp_aggregate must be max or mean")
        for name in ("l2_pass", "l3_pass"):
            if not 0.0 <= getattr(self.filter, name) <= 1.0:
                problems.append(f"filter.{name} must be within [0, 1]")
        problems += self._validate_commands()
        return problems

    def _validate_commands(self) -> list[str]:
        problems = []
        worker_ids = set(range(self.worker_count()))
        farmlet_ids = {f.id for f in self.topology.farmlets}
        last_t = 0.0
        for i, cmd in enumerate(self.commands):
            where = f"command {i} ({cmd.kind})"
            if cmd.kind not in COMMAND_KINDS:
                problems.append(f"{where}: unknown kind")
                continue
            if cmd.t is None:
                problems.append(f"{where}: scripted commands need a time")
                continue
            if not 0.0 <= cmd.t <= self.duration:
                problems.append(f"{where}: t={cmd.t} outside [0, {self.duration}]")
            if cmd.t < last_t:
                problems.append(f"{where}: command times must be sorted")
            last_t = max(last_t, cmd.t)
            problems += validate_command_args(cmd, worker_ids, farmlet_ids)
        return problems

    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        data = asdict(self)
        data["commands"] = [c.to_dict() for c in self.commands]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "Scenario":
        def build(klass, payload):
            if payload is None:
                return klass()
            known = {f.name for f in fields(klass)}
            unknown = set(payload) - known
            if unknown:
                raise ScenarioError(
                    f"unknown {klass.__name__} field(s): {', '.join(sorted(unknown))}"
                )
            return klass(**payload)

        known_top = {f.name for f in fields(cls)}
        unknown = set(data) - known_top
        if unknown:
            raise ScenarioError(f"unknown scenario field(s): {', '.join(sorted(unknown))}")

        topo_payload = dict(data.get("topology") or {})
        farmlets = [
            FarmletConfig(**f) if isinstance(f, Mapping) else f
            for f in topo_payload.pop("farmlets", [])
        ]
        topology = build(TopologyConfig, topo_payload or None)
        if farmlets:
            topology.farmlets = farmlets

        return cls(
            name=data.get("name", "scenario"),
            description=data.get("description", ""),
            seed=int(data.get("seed", 1)),
            duration=float(data.get("duration", 10.0)),
            telemetry_period=float(data.get("telemetry_period", 0.1)),
            stats_period=float(data.get("stats_period", 0.1)),
            gen_batch=float(data.get("gen_batch", 0.01)),
            topology=topology,
            params=build(ExperimentParams, data.get("params")),
            pa=build(PaParams, data.get("pa")),
            vla=build(VlaConfig, data.get("vla")),
            mitigation=build(MitigationConfig, data.get("mitigation")),
            armor=build(ArmorConfig, data.get("armor")),
            filter=build(FilterConfig, data.get("filter")),
            authority=build(AuthorityMask, data.get("authority")),
            commands=[Command.from_dict(c) for c in data.get("commands", [])],
        )

    def with_overrides(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


def validate_command_args(
    cmd: Command, worker_ids: set[int], farmlet_ids: set[str]
) -> list[str]:
    """Shared argument validation for scripted and live commands."""
    problems = []
    where = f"command ({cmd.kind})"
    args = cmd.args
    if cmd.kind in ("hang_pa", "restart_pa"):
        worker = args.get("worker")
        if not isinstance(worker, int) or worker not in worker_ids:
            problems.append(f"{where}: unknown worker {worker!r}")
    elif cmd.kind in ("sever", "restore"):
        if args.get("target") not in farmlet_ids:
            problems.append(f"{where}: unknown farmlet {args.get('target')!r}")
        if args.get("link") not in ("data", "control"):
            problems.append(f"{where}: link must be data or control")
    elif cmd.kind == "set_error_rate":
        p = args.get("p")
        if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
            problems.append(f"{where}: p must be within [0, 1]")
    elif cmd.kind == "set_behavior":
        if args.get("behavior") not in ("run_well", "run_poor"):
            problems.append(f"{where}: behavior must be run_well or run_poor")
    elif cmd.kind == "set_params":
        rate = args.get("crossing_rate")
        size = args.get("mean_size_bytes")
        if not isinstance(rate, (int, float)) or rate < 0:
            problems.append(f"{where}: crossing_rate must be >= 0")
        if not isinstance(size, (int, float)) or size <= 0:
            problems.append(f"{where}: mean_size_bytes must be > 0")
    elif cmd.kind == "set_authority":
        mask = args.get("mask")
        if not isinstance(mask, Mapping) or set(mask) - {"wr", "fp", "gp", "gf"}:
            problems.append(f"{where}: mask must map wr/fp/gp/gf to booleans")
    return problems


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{path}: not valid JSON: {err}") from err
    scenario = Scenario.from_dict(data)
    problems = scenario.validate()
    if problems:
        raise ScenarioError(f"{path}: " + "; ".join(problems))
    # resolve chart paths relative to the scenario file
    for attr in ("worker_chart", "farmlet_chart"):
        rel = getattr(scenario.vla, attr)
        if rel is not None:
            setattr(scenario.vla, attr, str((path.parent / rel).resolve()))
    return scenario


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(scenario.to_json().encode("utf-8")).hexdigest()[:8]
