"""Closed-loop simulation session.

Wires the discrete-event engine, the trigger farm, worker and farmlet
agents, mitigation policies, and the global supervisor into one
deterministic system driven entirely by scheduled events. Also owns the
operator surface: validated commands, the append-only control-change
journal, and periodic telemetry with built-in invariant checking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any

from farmsim import farm as farm_mod
from farmsim import mitigation
from farmsim.armor import (
    ArmorProcess,
    Element,
    ElementMessage,
    heartbeat_monitor_element,
    restart_recovery_element,
)
from farmsim.config import COMMAND_KINDS, Command, Scenario, validate_command_args
from farmsim.engine import Engine
from farmsim.farm import (
    Crossing,
    FarmCounters,
    Farmlet,
    FilterStage,
    Router,
    WorkerState,
    efficiency,
    sample_crossing_fields,
    utilization_snapshot,
)
from farmsim.mitigation import AuthorityMask, FailoverAlarm, FailoverPlan, FarmletHealth
from farmsim.vla import DeadlineTimer, EscalationRecord, TimerError, VlaMessage, make_farmlet_vla, make_worker_vla

logger = logging.getLogger(__name__)

__all__ = ["CommandError", "InvariantViolation", "JournalEntry", "RunResult", "Session"]

SOURCE = "source"
GLOBAL = "global"
FILTER = "filter"


class InvariantViolation(RuntimeError):
    """A telemetry snapshot failed a conservation or bounds check."""


class CommandError(ValueError):
    """An operator command failed validation."""


@dataclass
class JournalEntry:
    """One accepted control change: virtual application time, wall receipt
    time, who issued it, the command itself, and the before/after values."""

    t: float
    wall: str
    actor: str
    command: dict
    previous: Any
    new: Any

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "wall": self.wall,
            "actor": self.actor,
            "command": self.command,
            "previous": self.previous,
            "new": self.new,
        }


class _WorkerRuntime:
    """Session-side mechanics for one worker: its state, agent, timer and
    pending engine events."""

    __slots__ = (
        "state",
        "vla",
        "timer",
        "current",
        "outcome",
        "completion",
        "hang_next",
        "in_postlude",
    )

    def __init__(self, state: WorkerState, vla):
        self.state = state
        self.vla = vla
        self.timer: DeadlineTimer | None = None
        self.current: Crossing | None = None
        self.outcome = None
        self.completion = None
        self.hang_next = False
        self.in_postlude = False

    @property
    def available(self) -> bool:
        return (
            self.state.pa_status == "idle"
            and not self.state.quarantined
            and not self.in_postlude
        )


@dataclass
class RunResult:
    scenario: Scenario
    counters: FarmCounters
    telemetry: list[dict]
    journal: list[JournalEntry]
    trace: list[tuple[float, int, str, str]]
    worker_action_log: list[dict]
    farmlet_action_log: list[dict]
    armor_action_log: list[dict]
    mitigation_counts: dict[str, int]
    failover_events: list[dict]
    wall_seconds: float = 0.0

    def summary(self) -> dict:
        c = self.counters
        return {
            "scenario": self.scenario.name,
            "seed": self.scenario.seed,
            "duration": self.scenario.duration,
            "efficiency": efficiency(c),
            "missing_events": c.lost,
            "generated": c.generated,
            "processed": c.processed,
            "accepted_l1": c.accepted_l1,
            "rejected_l1": c.rejected_l1,
            "dropped_prescale": c.dropped_prescale,
            "overflowed": c.overflowed,
            "l2_passed": c.l2_passed,
            "l3_passed": c.l3_passed,
            "generated_bytes": c.generated_bytes,
            "l3_bytes": c.l3_bytes,
            "mitigation": dict(sorted(self.mitigation_counts.items())),
            "failovers": self.failover_events,
            "journal_entries": len(self.journal),
            "telemetry_records": len(self.telemetry),
        }


class Session:
    """One deterministic simulation run driven by a scenario."""

    def __init__(self, scenario: Scenario):
        problems = scenario.validate()
        if problems:
            raise CommandError("invalid scenario: " + "; ".join(problems))
        self.scenario = scenario
        self.engine = Engine(scenario.seed)
        self.params = farm_mod.ExperimentParams(**vars(scenario.params))
        self.pa = scenario.pa
        self.vla_cfg = scenario.vla
        self.mit_cfg = scenario.mitigation
        self.armor_cfg = scenario.armor
        self.authority = AuthorityMask(**vars(scenario.authority))
        self.counters = FarmCounters()
        self.running = True
        self.behavior_mode = "run_well"
        self.journal: list[JournalEntry] = []
        self.telemetry: list[dict] = []
        self.telemetry_listeners: list = []
        self.worker_action_log: list[dict] = []
        self.farmlet_action_log: list[dict] = []
        self.failover_events: list[dict] = []
        self.mitigation_counts: dict[str, int] = {
            "worker_resets": 0,
            "farmlet_resets": 0,
            "operator_restarts": 0,
            "quarantines": 0,
            "failovers": 0,
            "failover_alarms": 0,
            "armor_restarts": 0,
            "e1_escalations": 0,
        }
        self.fp_controller = mitigation.PrescaleController(
            scenario.mitigation.prescale_target, scenario.mitigation.prescale_gain
        )
        self._crossing_id = 0
        self._stopped_queue: list[tuple[Command, str]] = []
        self._escalations: dict[tuple[str, str, int], EscalationRecord] = {}
        self._health_stats: dict[str, dict] = {}
        self._farmlet_history: dict[str, list[tuple[float, int, int]]] = {}
        self._planned_unfit: set[str] = set()
        self._reserved_spares: set[str] = set()
        self._alarmed: set[str] = set()
        self._tick_index = {"gen": 0, "stats": 0, "telemetry": 0, "armor": 0}

        self._build_farm()
        self._build_charts()
        self._build_armor()
        self._register_handlers()
        self._schedule_initial_events()

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    def _build_farm(self) -> None:
        topo = self.scenario.topology
        self.farmlets: dict[str, Farmlet] = {}
        self.workers: dict[int, _WorkerRuntime] = {}
        next_worker = 0
        for fc in topo.farmlets:
            ids = list(range(next_worker, next_worker + fc.workers))
            next_worker += fc.workers
            self.farmlets[fc.id] = Farmlet(
                fc.id, ids, capacity=topo.queue_capacity, role=fc.role
            )
        self.router = Router([f.id for f in topo.farmlets if f.role == "active"])
        self.filter_stage = FilterStage(
            self.scenario.filter.l2_pass,
            self.scenario.filter.l3_pass,
            self.engine.stream("filter_l2"),
            self.engine.stream("filter_l3"),
        )
        for fid, flet in self.farmlets.items():
            self.engine.declare_link(SOURCE, fid, "data", topo.link_latency)
            self.engine.declare_link(fid, GLOBAL, "control", topo.link_latency)
            self.engine.declare_link(GLOBAL, fid, "control", topo.link_latency)
            self._farmlet_history[fid] = []
        self.engine.declare_link(FILTER, GLOBAL, "control", topo.link_latency)

    def _build_charts(self) -> None:
        worker_text = farmlet_text = None
        if self.vla_cfg.worker_chart:
            worker_text = open(self.vla_cfg.worker_chart, encoding="utf-8").read()
        if self.vla_cfg.farmlet_chart:
            farmlet_text = open(self.vla_cfg.farmlet_chart, encoding="utf-8").read()
        impl = self.vla_cfg.impl
        for fc in self.scenario.topology.farmlets:
            flet = self.farmlets[fc.id]
            for wid in flet.worker_ids:
                state = WorkerState(wid, fc.id)
                self.workers[wid] = _WorkerRuntime(state, make_worker_vla(impl, worker_text))
        self.farmlet_vlas = {
            fid: make_farmlet_vla(impl, farmlet_text) for fid in self.farmlets
        }

    def _build_armor(self) -> None:
        self.global_armor = ArmorProcess("armor-global", "global")
        targets = list(self.farmlets) + [FILTER]
        self.global_armor.register_element(
            heartbeat_monitor_element(targets, self.armor_cfg.miss_threshold)
        )
        self.global_armor.register_element(
            restart_recovery_element(self.armor_cfg.max_restarts)
        )
        self.global_armor.register_element(_failover_analysis_element())
        self.global_armor.register_element(_failover_recovery_element())
        self.global_armor.register_element(_quality_watch_element())

    def _register_handlers(self) -> None:
        eng = self.engine
        eng.register(SOURCE, self._on_source)
        for fid in self.farmlets:
            eng.register(fid, self._on_farmlet_event)
        for wid in self.workers:
            eng.register(f"w{wid}", self._on_worker_event)
        eng.register(GLOBAL, self._on_global_event)
        eng.register("stats", self._on_stats_tick)
        eng.register("telemetry", self._on_telemetry_tick)
        eng.register("armor", self._on_armor_tick)
        eng.register("control", self._on_control_event)

    def _schedule_initial_events(self) -> None:
        self._schedule_tick("gen", SOURCE, self.scenario.gen_batch)
        self._schedule_tick("stats", "stats", self.scenario.stats_period)
        self._schedule_tick("telemetry", "telemetry", self.scenario.telemetry_period)
        self._schedule_tick("armor", "armor", self.armor_cfg.heartbeat_period)
        for cmd in self.scenario.commands:
            self.engine.schedule(
                at=cmd.t, target="control", kind="command", payload=(cmd, "script")
            )

    def _schedule_tick(self, name: str, target: str, period: float) -> None:
        self._tick_index[name] += 1
        # grid times (k * period, rounded) so recurring ticks neither drift
        # nor float past the end of the run
        at = round(self._tick_index[name] * period, 12)
        self.engine.schedule(at=at, target=target, kind=f"{name}_tick")

    # ------------------------------------------------------------------
    # generation and routing
    # ------------------------------------------------------------------
    def _on_source(self, ev) -> None:
        batch = self.scenario.gen_batch
        self._schedule_tick("gen", SOURCE, batch)
        if not self.running or self.params.crossing_rate <= 0:
            return
        gen_rng = self.engine.stream("generation")
        n = int(gen_rng.poisson(self.params.crossing_rate * batch))
        if n == 0:
            return
        interactions, sizes, corrupt, heavy = sample_crossing_fields(self.params, n, gen_rng)
        offsets = self.engine.stream("arrival").uniform(0.0, batch, n)
        offsets.sort()
        for i in range(n):
            crossing = Crossing(
                self._crossing_id,
                int(interactions[i]),
                int(sizes[i]),
                bool(corrupt[i]),
                bool(heavy[i]),
            )
            self._crossing_id += 1
            self.counters.generated += 1
            self.counters.generated_bytes += crossing.size_bytes
            fid = self.router.route()
            if fid is None:
                self.counters.lost += 1
                continue
            self.farmlets[fid].routed += 1
            status = self.engine.send(
                crossing, SOURCE, fid, "data", event_kind="crossing", extra_delay=float(offsets[i])
            )
            if status == "dropped":
                self.counters.lost += 1

    # ------------------------------------------------------------------
    # farmlet events
    # ------------------------------------------------------------------
    def _on_farmlet_event(self, ev) -> None:
        flet = self.farmlets[ev.target]
        if ev.kind == "crossing":
            flet.arrived += 1
            outcome = flet.enqueue(ev.payload, self.engine.stream("prescale"))
            if outcome == "dropped_prescale":
                self.counters.dropped_prescale += 1
            elif outcome == "overflowed":
                self.counters.lost += 1
                self.counters.overflowed += 1
            else:
                self._dispatch(flet)
        elif ev.kind == "vla_fault":
            self._farmlet_handle(flet, ev.payload)
        elif ev.kind == "control":
            msg = ev.payload
            if msg.code == "set_prescale" and self.authority.gp:
                flet.prescale_drop_rate = float(msg.body["rate"])

    def _dispatch(self, flet: Farmlet) -> None:
        if not self.running:
            return
        count = len(flet.worker_ids)
        while flet.queue:
            runtime = None
            for i in range(count):
                idx = (flet.next_worker + i) % count
                candidate = self.workers[flet.worker_ids[idx]]
                if candidate.available:
                    runtime = candidate
                    flet.next_worker = (idx + 1) % count
                    break
            if runtime is None:
                return
            self._start_processing(runtime, flet.queue.popleft())

    def _start_processing(self, runtime: _WorkerRuntime, crossing: Crossing) -> None:
        now = self.engine.now
        outcome = farm_mod.pa_process(
            runtime.state, crossing, self.pa, self.engine.stream("pa")
        )
        runtime.current = crossing
        runtime.outcome = outcome
        wid = runtime.state.id
        if runtime.hang_next or outcome.kind == "hang":
            runtime.hang_next = False
            runtime.state.pa_status = "hung"
        else:
            runtime.state.pa_status = "processing"
            if outcome.kind == "complete":
                runtime.completion = self.engine.schedule(
                    delay=outcome.service_time, target=f"w{wid}", kind="pa_complete"
                )
            # overruns get no completion: they finish only via a successful
            # cleanup after the notification
        runtime.state.switch_bucket(now, "P")
        self._worker_vla_event(
            runtime,
            "crossing_start",
            estimate=outcome.estimate,
            grace=self.vla_cfg.grace_factor * outcome.estimate,
        )

    # ------------------------------------------------------------------
    # worker events
    # ------------------------------------------------------------------
    def _on_worker_event(self, ev) -> None:
        wid = int(ev.target[1:])
        runtime = self.workers[wid]
        if ev.kind == "pa_complete":
            self._complete_crossing(runtime)
        elif ev.kind == "timer_expiry":
            if runtime.timer is None:
                return  # stale expiry on a disarmed timer: no actions
            runtime.timer.handle = None
            self._worker_vla_event(
                runtime,
                "deadline_expired",
                estimate=runtime.timer.estimate,
                grace=runtime.timer.grace,
            )
        elif ev.kind == "restart_done":
            runtime.state.pa_status = "idle"
            runtime.state.switch_bucket(self.engine.now, "I")
            self._dispatch(self.farmlets[runtime.state.farmlet])
        elif ev.kind == "ready":
            runtime.in_postlude = False
            if runtime.state.pa_status == "idle":
                runtime.state.switch_bucket(self.engine.now, "I")
                self._dispatch(self.farmlets[runtime.state.farmlet])

    def _complete_crossing(self, runtime: _WorkerRuntime) -> None:
        now = self.engine.now
        crossing, outcome = runtime.current, runtime.outcome
        runtime.completion = None
        if crossing is None:
            return
        flet = self.farmlets[runtime.state.farmlet]
        self.counters.processed += 1
        flet.processed += 1
        if outcome.decision == "accept":
            self.counters.accepted_l1 += 1
            self.filter_stage.accept(crossing, self.counters)
        else:
            self.counters.rejected_l1 += 1
        runtime.current = None
        runtime.outcome = None
        runtime.state.pa_status = "idle"
        runtime.in_postlude = True
        runtime.state.switch_bucket(now, "V")
        self._worker_vla_event(runtime, "pa_complete")
        self.engine.schedule(
            delay=self.vla_cfg.postlude, target=f"w{runtime.state.id}", kind="ready"
        )

    # ------------------------------------------------------------------
    # worker agent actions
    # ------------------------------------------------------------------
    def _worker_vla_event(self, runtime: _WorkerRuntime, event: str, **variables) -> None:
        ctx = dict(variables)
        ctx["authority"] = self.authority.worker_level(
            self.vla_cfg.wr_holder, runtime.state.reset_revoked
        )
        actions = runtime.vla.on_event(event, ctx)
        for action in actions:
            self.worker_action_log.append(
                {
                    "t": self.engine.now,
                    "worker": runtime.state.id,
                    "action": action.name,
                    "args": list(action.args),
                }
            )
            self._execute_worker_action(runtime, action, ctx)

    def _execute_worker_action(self, runtime: _WorkerRuntime, action, ctx) -> None:
        name = action.name
        if name == "arm_timer":
            self._arm_deadline(runtime, float(action.args[0]), ctx)
        elif name == "stop_timer":
            self._stop_timer(runtime)
        elif name == "notify_pa":
            self._pa_cleanup(runtime, ctx)
        elif name == "reset_pa":
            self._reset_worker(runtime, "worker_resets")
        elif name == "escalate":
            _level, code = action.args
            self.mitigation_counts["e1_escalations"] += 1
            msg = VlaMessage(
                "fault",
                code,
                source=f"w{runtime.state.id}",
                dest=runtime.state.farmlet,
                t=self.engine.now,
                body={"worker": runtime.state.id},
            )
            # worker-to-farmlet signalling is farmlet-internal (not a
            # severable topology link)
            self.engine.schedule(
                at=self.engine.now,
                target=runtime.state.farmlet,
                kind="vla_fault",
                payload=msg,
            )
        else:
            raise CommandError(f"worker agent emitted unsupported action {name!r}")

    def _arm_deadline(self, runtime: _WorkerRuntime, duration: float, ctx) -> None:
        now = self.engine.now
        wid = runtime.state.id
        timer = runtime.timer
        if timer is None or timer.phase == "disarmed":
            runtime.timer = DeadlineTimer(
                estimate=duration, grace=float(ctx.get("grace", duration)), armed_at=now
            )
            runtime.timer.phase = "initial"
            runtime.timer.handle = self.engine.schedule(
                delay=duration, target=f"w{wid}", kind="timer_expiry"
            )
        elif timer.phase == "initial" and timer.handle is None:
            timer.phase = "grace"
            timer.grace = duration
            timer.armed_at = now
            timer.handle = self.engine.schedule(
                delay=duration, target=f"w{wid}", kind="timer_expiry"
            )
        else:
            raise TimerError(f"worker {wid}: cannot arm a timer in phase {timer.phase!r}")

    def _stop_timer(self, runtime: _WorkerRuntime) -> None:
        if runtime.timer is not None and runtime.timer.handle is not None:
            self.engine.cancel(runtime.timer.handle)
        runtime.timer = None

    def _pa_cleanup(self, runtime: _WorkerRuntime, ctx) -> str:
        """The application reacts to the budget-violation notification by
        trying to wrap up inside the grace window. A wedged application never
        succeeds; an overrun succeeds with the configured probability."""
        if runtime.state.pa_status == "hung":
            return "failure"
        rng = self.engine.stream("cleanup")
        if rng.random() < self.vla_cfg.p_cleanup:
            fraction = 0.05 + 0.9 * rng.random()
            runtime.completion = self.engine.schedule(
                delay=fraction * float(ctx["grace"]),
                target=f"w{runtime.state.id}",
                kind="pa_complete",
            )
            return "success"
        return "failure"

    def _reset_worker(self, runtime: _WorkerRuntime, counter: str) -> None:
        now = self.engine.now
        self.mitigation_counts[counter] += 1
        if runtime.completion is not None:
            self.engine.cancel(runtime.completion)
            runtime.completion = None
        self._stop_timer(runtime)
        runtime.vla.reset()
        if runtime.current is not None:
            self.counters.lost += 1
            self.farmlets[runtime.state.farmlet].lost += 1
            runtime.current = None
            runtime.outcome = None
        runtime.hang_next = False
        runtime.in_postlude = False
        runtime.state.pa_status = "restarting"
        runtime.state.switch_bucket(now, "V")
        self.engine.schedule(
            delay=self.vla_cfg.reset_latency, target=f"w{runtime.state.id}", kind="restart_done"
        )

    def _quarantine_worker(self, runtime: _WorkerRuntime) -> None:
        self.mitigation_counts["quarantines"] += 1
        if runtime.completion is not None:
            self.engine.cancel(runtime.completion)
            runtime.completion = None
        self._stop_timer(runtime)
        runtime.vla.reset()
        if runtime.current is not None:
            self.counters.lost += 1
            self.farmlets[runtime.state.farmlet].lost += 1
            runtime.current = None
            runtime.outcome = None
        runtime.state.quarantined = True
        runtime.state.reset_revoked = True

    # ------------------------------------------------------------------
    # farmlet agent
    # ------------------------------------------------------------------
    def _farmlet_handle(self, flet: Farmlet, msg: VlaMessage) -> None:
        now = self.engine.now
        wid = msg.body.get("worker")
        if wid not in self.workers:
            logger.warning("farmlet %s: fault from unknown worker %r", flet.id, wid)
            return
        key = (flet.id, msg.code, wid)
        record = self._escalations.setdefault(
            key, EscalationRecord(wid, msg.code, self.vla_cfg.subsume_window)
        )
        record.add(now)
        ctx = {
            "window_count": record.count(now),
            "n_subsume": self.vla_cfg.n_subsume,
            "authority": self.authority.farmlet_level(),
        }
        actions = self.farmlet_vlas[flet.id].on_event(f"fault_{msg.code}", ctx)
        for action in actions:
            self.farmlet_action_log.append(
                {
                    "t": now,
                    "farmlet": flet.id,
                    "worker": wid,
                    "action": action.name,
                    "args": list(action.args),
                }
            )
            if action.name == "reset_pa":
                self._reset_worker(self.workers[wid], "farmlet_resets")
            elif action.name == "quarantine":
                self._quarantine_worker(self.workers[wid])
            elif action.name == "forward":
                summary = VlaMessage(
                    "fault",
                    msg.code,
                    source=flet.id,
                    dest=GLOBAL,
                    t=now,
                    body={"worker": wid, "count": ctx["window_count"]},
                )
                self.engine.send(summary, flet.id, GLOBAL, "control", event_kind="vla_msg")
            else:
                raise CommandError(
                    f"farmlet agent emitted unsupported action {action.name!r}"
                )

    # ------------------------------------------------------------------
    # periodic statistics, prescale control, global supervision
    # ------------------------------------------------------------------
    def _on_stats_tick(self, ev) -> None:
        self._schedule_tick("stats", "stats", self.scenario.stats_period)
        if not self.running:
            return
        now = self.engine.now
        fp_active = self.authority.fp and not self.authority.gp
        for fid, flet in self.farmlets.items():
            if flet.role == "active" and fp_active:
                flet.prescale_drop_rate = mitigation.farmlet_prescale(
                    self.fp_controller, flet.occupancy_fraction(), True
                )
            body = {
                "occupancy": flet.occupancy(),
                "occupancy_fraction": flet.occupancy_fraction(),
                "processed": flet.processed,
                "arrived": flet.arrived,
                "drop_rate": flet.prescale_drop_rate,
                "role": flet.role,
            }
            msg = VlaMessage("statistical", None, fid, GLOBAL, now, body)
            self.engine.send(msg, fid, GLOBAL, "control", event_kind="vla_msg")
        self.global_armor.api_report(
            FILTER,
            {
                "type": "quality_rates",
                "l2_passed": self.counters.l2_passed,
                "l3_passed": self.counters.l3_passed,
            },
            now,
        )
        # the global step runs after this tick's statistics have arrived
        self.engine.schedule(at=now, target=GLOBAL, kind="global_tick")

    def _on_global_event(self, ev) -> None:
        if ev.kind == "vla_msg":
            msg = ev.payload
            if msg.msg_class == "statistical":
                self._health_stats[msg.source] = {"t": msg.t, **msg.body}
            self.global_armor.api_report(
                msg.source,
                {"type": "fault_summary", "code": msg.code, **msg.body}
                if msg.msg_class == "fault"
                else {"type": "farmlet_stats", **msg.body},
                msg.t,
            )
        elif ev.kind == "heartbeat":
            self.global_armor.enqueue(
                ElementMessage("heartbeat", ev.payload["source"], self.engine.now, {})
            )
        elif ev.kind == "armor_drain":
            self.global_armor.enqueue(
                ElementMessage("monitor_tick", GLOBAL, self.engine.now, {})
            )
            self._execute_armor_actions(self.global_armor.drain())
        elif ev.kind == "global_tick":
            self._global_tick()

    def _global_tick(self) -> None:
        now = self.engine.now
        if self.authority.gp:
            occupancies = {}
            for fid, flet in self.farmlets.items():
                if flet.role != "active":
                    continue
                stats = self._health_stats.get(fid)
                occupancies[fid] = (
                    stats["occupancy_fraction"] if stats else flet.occupancy_fraction()
                )
            rate = mitigation.global_prescale(
                self.fp_controller, occupancies, True, self.mit_cfg.gp_aggregate
            )
            for fid, flet in self.farmlets.items():
                if flet.role == "active":
                    msg = VlaMessage(
                        "control", "set_prescale", GLOBAL, fid, now, {"rate": rate}
                    )
                    self.engine.send(msg, GLOBAL, fid, "control", event_kind="control")
        # farmlet health for failover evaluation
        healths = []
        for fid, flet in self.farmlets.items():
            history = self._farmlet_history[fid]
            reported = self._health_stats.get(fid, {}).get("processed", 0)
            history.append((now, flet.routed, reported))
            cutoff = now - self.mit_cfg.window_f
            while len(history) > 1 and history[0][0] < cutoff:
                history.pop(0)
            d_routed = history[-1][1] - history[0][1]
            d_processed = history[-1][2] - history[0][2]
            window_eff = 1.0 if d_routed <= 0 else d_processed / d_routed
            if fid in self._planned_unfit:
                role = "unfit"
            elif fid in self._reserved_spares:
                role = "reserved"
            else:
                role = flet.role
            data_up = self.engine.links.status(SOURCE, fid, "data") == "up"
            healths.append(FarmletHealth(fid, role, data_up, window_eff))
            if data_up and window_eff >= self.mit_cfg.theta_f:
                self._alarmed.discard(fid)
        self.global_armor.enqueue(
            ElementMessage(
                "farmlet_health",
                GLOBAL,
                now,
                {
                    "healths": healths,
                    "gf_granted": self.authority.gf,
                    "theta_f": self.mit_cfg.theta_f,
                    "now": now,
                    "delay": self.mit_cfg.failover_delay,
                },
            )
        )
        self._execute_armor_actions(self.global_armor.drain())

    def _execute_armor_actions(self, actions) -> None:
        for action in actions:
            if action.name == "failover":
                plan: FailoverPlan = action.args["plan"]
                if plan.unfit in self._planned_unfit or plan.spare in self._reserved_spares:
                    continue
                self._planned_unfit.add(plan.unfit)
                self._reserved_spares.add(plan.spare)
                self.engine.schedule(
                    at=plan.effective_time,
                    target="control",
                    kind="routing_update",
                    payload=plan,
                )
            elif action.name == "alarm":
                target = action.target
                if target in self._alarmed:
                    continue
                self._alarmed.add(target)
                self.mitigation_counts["failover_alarms"] += 1
            elif action.name == "restart":
                self._restart_supervised(action.target)

    def _restart_supervised(self, target: str) -> None:
        self.mitigation_counts["armor_restarts"] += 1
        if target in self.farmlet_vlas:
            # supervisor-level process restart of a farmlet manager: its
            # agent chart and escalation memory start over
            self.farmlet_vlas[target].reset()
            for key in [k for k in self._escalations if k[0] == target]:
                del self._escalations[key]

    def _on_armor_tick(self, ev) -> None:
        self._schedule_tick("armor", "armor", self.armor_cfg.heartbeat_period)
        if not self.running:
            return
        now = self.engine.now
        for fid in self.farmlets:
            self.engine.send(
                {"source": fid}, fid, GLOBAL, "control", event_kind="heartbeat"
            )
        self.engine.send(
            {"source": FILTER}, FILTER, GLOBAL, "control", event_kind="heartbeat"
        )
        self.engine.schedule(at=now, target=GLOBAL, kind="armor_drain")

    # ------------------------------------------------------------------
    # operator commands
    # ------------------------------------------------------------------
    def submit_command(self, kind: str, args: dict | None = None, actor: str = "api") -> dict:
        """Validate and apply one live operator command at the next event
        boundary (the current clock). Returns an acknowledgment."""
        cmd = Command(kind=kind, t=self.engine.now, args=dict(args or {}))
        problems = self._validate_command(cmd)
        if problems:
            return {"accepted": False, "errors": problems}
        before = len(self.journal)
        self.engine.schedule(
            at=self.engine.now, target="control", kind="command", payload=(cmd, actor)
        )
        self.engine.run_until(self.engine.now)
        applied = len(self.journal) > before
        ack = {"accepted": True, "deferred": not applied, "applied_at": self.engine.now}
        if applied:
            ack["journal_index"] = len(self.journal) - 1
        return ack

    def _validate_command(self, cmd: Command) -> list[str]:
        if cmd.kind not in COMMAND_KINDS:
            return [f"unknown command kind {cmd.kind!r}"]
        return validate_command_args(cmd, set(self.workers), set(self.farmlets))

    def _on_control_event(self, ev) -> None:
        if ev.kind == "command":
            cmd, actor = ev.payload
            self._apply_command(cmd, actor)
        elif ev.kind == "routing_update":
            self._apply_failover(ev.payload)

    def _apply_command(self, cmd: Command, actor: str) -> None:
        if not self.running and cmd.kind != "go":
            # held while stopped; journaled and applied at go
            self._stopped_queue.append((cmd, actor))
            return
        previous, new = self._execute_command(cmd)
        self.journal.append(
            JournalEntry(
                t=self.engine.now,
                wall=datetime.now(timezone.utc).isoformat(),
                actor=actor,
                command=cmd.to_dict(),
                previous=previous,
                new=new,
            )
        )

    def _execute_command(self, cmd: Command) -> tuple[Any, Any]:
        now = self.engine.now
        kind, args = cmd.kind, cmd.args
        if kind == "hang_pa":
            runtime = self.workers[args["worker"]]
            previous = runtime.state.pa_status
            if runtime.state.pa_status == "processing":
                if runtime.completion is not None:
                    self.engine.cancel(runtime.completion)
                    runtime.completion = None
                runtime.state.pa_status = "hung"
            elif runtime.state.pa_status == "idle":
                # an idle application wedges on the spot; with no crossing in
                # flight there is no armed deadline to catch it
                runtime.state.pa_status = "hung"
                runtime.state.switch_bucket(now, "P")
            return previous, runtime.state.pa_status
        if kind == "restart_pa":
            runtime = self.workers[args["worker"]]
            previous = runtime.state.pa_status
            if runtime.state.pa_status != "restarting":
                runtime.state.quarantined = False
                runtime.state.reset_revoked = False
                self._reset_worker(runtime, "operator_restarts")
            return previous, runtime.state.pa_status
        if kind in ("sever", "restore"):
            target, link = args["target"], args["link"]
            flip = self.engine.sever_link if kind == "sever" else self.engine.restore_link
            if link == "data":
                previous = self.engine.links.status(SOURCE, target, "data")
                new = flip(SOURCE, target, "data")
            else:
                previous = self.engine.links.status(target, GLOBAL, "control")
                flip(target, GLOBAL, "control")
                new = flip(GLOBAL, target, "control")
            return {link: previous}, {link: new}
        if kind == "set_error_rate":
            previous = self.params.error_rate
            self.params.error_rate = float(args["p"])
            return previous, self.params.error_rate
        if kind == "set_behavior":
            previous = self.behavior_mode
            self.behavior_mode = args["behavior"]
            for runtime in self.workers.values():
                runtime.state.behavior = self.behavior_mode
            return previous, self.behavior_mode
        if kind == "set_params":
            previous = {
                "crossing_rate": self.params.crossing_rate,
                "mean_size_bytes": self.params.mean_size_bytes,
            }
            self.params.crossing_rate = float(args["crossing_rate"])
            self.params.mean_size_bytes = float(args["mean_size_bytes"])
            return previous, {
                "crossing_rate": self.params.crossing_rate,
                "mean_size_bytes": self.params.mean_size_bytes,
            }
        if kind == "set_authority":
            previous = self.authority.as_dict()
            for strategy, granted in args["mask"].items():
                setattr(self.authority, strategy, bool(granted))
            if not self.authority.fp and not self.authority.gp:
                for flet in self.farmlets.values():
                    flet.prescale_drop_rate = 0.0
            return previous, self.authority.as_dict()
        if kind == "stop":
            previous, self.running = self.running, False
            return previous, False
        if kind == "go":
            previous, self.running = self.running, True
            queued, self._stopped_queue = self._stopped_queue, []
            for queued_cmd, queued_actor in queued:
                self._apply_command(queued_cmd, queued_actor)
            for flet in self.farmlets.values():
                if flet.role == "active":
                    self._dispatch(flet)
            return previous, True
        raise CommandError(f"unknown command kind {kind!r}")

    def _apply_failover(self, plan: FailoverPlan) -> None:
        unfit, spare = self.farmlets[plan.unfit], self.farmlets[plan.spare]
        unfit.role = "unfit"
        spare.role = "active"
        self.router.replace(plan.unfit, plan.spare)
        self.mitigation_counts["failovers"] += 1
        self.failover_events.append(
            {
                "unfit": plan.unfit,
                "spare": plan.spare,
                "effective_time": plan.effective_time,
            }
        )
        self._dispatch(spare)

    # ------------------------------------------------------------------
    # telemetry
    # ------------------------------------------------------------------
    def _on_telemetry_tick(self, ev) -> None:
        self._schedule_tick("telemetry", "telemetry", self.scenario.telemetry_period)
        record = self.snapshot()
        self.check_invariants(record)
        self.telemetry.append(record)
        for listener in self.telemetry_listeners:
            listener(record)

    def snapshot(self) -> dict:
        now = self.engine.now
        c = self.counters
        in_links = sum(
            link.in_flight for link in self.engine.links.values() if link.kind == "data"
        )
        queued = sum(f.occupancy() for f in self.farmlets.values())
        processing = sum(1 for r in self.workers.values() if r.current is not None)
        farmlets = []
        for fid, flet in self.farmlets.items():
            farmlets.append(
                {
                    "id": fid,
                    "role": flet.role,
                    "occupancy": flet.occupancy(),
                    "capacity": flet.capacity,
                    "drop_rate": flet.prescale_drop_rate,
                    "routed": flet.routed,
                    "arrived": flet.arrived,
                    "processed": flet.processed,
                    "dropped_prescale": flet.dropped_prescale,
                    "lost": flet.lost,
                    "overflowed": flet.overflowed,
                    "links": {
                        "data": self.engine.links.status(SOURCE, fid, "data"),
                        "control": self.engine.links.status(fid, GLOBAL, "control"),
                    },
                }
            )
        workers = []
        for wid, runtime in self.workers.items():
            p, v, i = utilization_snapshot(runtime.state, now)
            workers.append(
                {
                    "id": wid,
                    "farmlet": runtime.state.farmlet,
                    "status": runtime.state.pa_status,
                    "behavior": runtime.state.behavior,
                    "quarantined": runtime.state.quarantined,
                    "p": p,
                    "v": v,
                    "i": i,
                }
            )
        return {
            "t": now,
            "running": self.running,
            "efficiency": efficiency(c),
            "missing_events": c.lost,
            "authority": self.authority.as_dict(),
            "params": {
                "crossing_rate": self.params.crossing_rate,
                "mean_interactions": self.params.mean_interactions,
                "mean_size_bytes": self.params.mean_size_bytes,
                "error_rate": self.params.error_rate,
                "heavy_flavor_fraction": self.params.heavy_flavor_fraction,
            },
            "behavior": self.behavior_mode,
            "counters": {
                "generated": c.generated,
                "processed": c.processed,
                "accepted_l1": c.accepted_l1,
                "rejected_l1": c.rejected_l1,
                "dropped_prescale": c.dropped_prescale,
                "lost": c.lost,
                "overflowed": c.overflowed,
                "l2_passed": c.l2_passed,
                "l3_passed": c.l3_passed,
                "generated_bytes": c.generated_bytes,
                "l3_bytes": c.l3_bytes,
            },
            "in_flight": {
                "links": in_links,
                "queued": queued,
                "processing": processing,
                "total": in_links + queued + processing,
            },
            "farmlets": farmlets,
            "workers": workers,
        }

    def check_invariants(self, record: dict) -> None:
        c = record["counters"]
        in_flight = record["in_flight"]["total"]
        balance = c["processed"] + c["dropped_prescale"] + c["lost"] + in_flight
        if c["generated"] != balance:
            raise InvariantViolation(
                f"t={record['t']}: generated={c['generated']} but "
                f"processed+dropped+lost+in_flight={balance}"
            )
        if c["accepted_l1"] + c["rejected_l1"] != c["processed"]:
            raise InvariantViolation(
                f"t={record['t']}: accepted+rejected != processed"
            )
        for flet in record["farmlets"]:
            if not 0 <= flet["occupancy"] <= flet["capacity"]:
                raise InvariantViolation(
                    f"t={record['t']}: farmlet {flet['id']} occupancy out of bounds"
                )
            if not 0.0 <= flet["drop_rate"] <= 1.0:
                raise InvariantViolation(
                    f"t={record['t']}: farmlet {flet['id']} drop rate out of [0, 1]"
                )
        for worker in record["workers"]:
            total = worker["p"] + worker["v"] + worker["i"]
            if abs(total - 1.0) > 1e-9:
                raise InvariantViolation(
                    f"t={record['t']}: worker {worker['id']} P+V+I={total}"
                )

    # ------------------------------------------------------------------
    # journal queries, run driver
    # ------------------------------------------------------------------
    def query_journal(self, t_from: float | None = None, t_to: float | None = None):
        lo = float("-inf") if t_from is None else t_from
        hi = float("inf") if t_to is None else t_to
        return [entry for entry in self.journal if lo <= entry.t <= hi]

    def step_to(self, t: float) -> None:
        self.engine.run_until(t)

    def run(self) -> RunResult:
        self.engine.run_until(self.scenario.duration)
        return self.result()

    def result(self) -> RunResult:
        return RunResult(
            scenario=self.scenario,
            counters=self.counters,
            telemetry=self.telemetry,
            journal=self.journal,
            trace=self.engine.trace,
            worker_action_log=self.worker_action_log,
            farmlet_action_log=self.farmlet_action_log,
            armor_action_log=[
                {"t": t, "action": a.name, "target": a.target}
                for t, a in self.global_armor.action_log
            ],
            mitigation_counts=self.mitigation_counts,
            failover_events=self.failover_events,
        )


# ----------------------------------------------------------------------
# supervisor elements that embody the failover policy
# ----------------------------------------------------------------------


def _failover_analysis_element() -> Element:
    def handler(state, msg):
        decisions = mitigation.evaluate_failover(
            msg.body["healths"],
            gf_granted=msg.body["gf_granted"],
            theta_f=msg.body["theta_f"],
            now=msg.body["now"],
            activation_delay=msg.body["delay"],
        )
        emitted = []
        for decision in decisions:
            if isinstance(decision, FailoverPlan):
                emitted.append(
                    ElementMessage("failover_decision", decision.unfit, msg.t, {"plan": decision})
                )
            else:
                emitted.append(
                    ElementMessage("failover_blocked", decision.unfit, msg.t, {"alarm": decision})
                )
        return state, emitted, []

    return Element(
        "failover-analysis", "analysis", frozenset({"farmlet_health"}), handler
    )


def _failover_recovery_element() -> Element:
    def handler(state, msg):
        from farmsim.armor import ArmorAction

        if msg.msg_type == "failover_decision":
            return state, [], [ArmorAction("failover", msg.source, {"plan": msg.body["plan"]})]
        alarm: FailoverAlarm = msg.body["alarm"]
        return state, [], [ArmorAction("alarm", alarm.unfit, {"reason": alarm.reason})]

    return Element(
        "failover-recovery",
        "recovery",
        frozenset({"failover_decision", "failover_blocked"}),
        handler,
    )


def _quality_watch_element() -> Element:
    def handler(state, msg):
        state = (state or ())[-15:] + ((msg.t, dict(msg.body)),)
        return state, [], []

    return Element(
        "quality-watch",
        "analysis",
        frozenset({"quality_rates", "farmlet_stats", "fault_summary"}),
        handler,
    )
