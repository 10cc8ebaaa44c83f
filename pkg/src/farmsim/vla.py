"""Watchdog agents: the per-worker deadline protocol and the farmlet-level
escalation handler.

Each controller exists twice with identical action output: a hand-coded
state machine, and the shipped statechart interpreted by the fault
mitigation language. Scenarios select the implementation; paired runs with
the same seed must produce identical action logs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

from farmsim import dsl

__all__ = [
    "ChartVla",
    "DeadlineTimer",
    "EscalationRecord",
    "FARMLET_CHART_TEXT",
    "HandFarmletVla",
    "HandWorkerVla",
    "TimerError",
    "VlaAction",
    "VlaMessage",
    "WORKER_CHART_TEXT",
    "load_chart",
    "make_farmlet_vla",
    "make_worker_vla",
]


def _read_chart(name: str) -> str:
    return resources.files("farmsim.data").joinpath(f"charts/{name}").read_text("utf-8")


WORKER_CHART_TEXT = _read_chart("worker_vla.fml")
FARMLET_CHART_TEXT = _read_chart("farmlet_vla.fml")


class TimerError(RuntimeError):
    """Deadline timer used outside its phase protocol."""


@dataclass(frozen=True)
class VlaAction:
    """One emitted mitigation action; args are numbers or bare names."""

    name: str
    args: tuple = ()


@dataclass
class DeadlineTimer:
    """Watchdog state for one worker's current crossing.

    Phases move disarmed -> initial -> grace -> disarmed, or back to
    disarmed from initial when the application completes in time.
    """

    estimate: float
    grace: float
    phase: str = "disarmed"
    armed_at: float = 0.0
    handle: object = None  # engine EventHandle for the pending expiry


@dataclass(frozen=True)
class VlaMessage:
    """Asynchronous message between agent layers; fault messages always
    carry a code."""

    msg_class: str  # fault | control | statistical
    code: str | None
    source: str
    dest: str
    t: float
    body: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.msg_class == "fault" and not self.code:
            raise ValueError("fault messages must carry a non-empty code")


@dataclass
class EscalationRecord:
    """Sliding-window count of one fault code from one worker."""

    worker: int
    code: str
    window: float
    events: deque = field(default_factory=deque)

    def add(self, t: float) -> None:
        self.events.append(t)
        self._trim(t)

    def count(self, now: float) -> int:
        self._trim(now)
        return len(self.events)

    def _trim(self, now: float) -> None:
        cutoff = now - self.window
        while self.events and self.events[0] < cutoff:
            self.events.popleft()


# ----------------------------------------------------------------------
# controllers
# ----------------------------------------------------------------------
#
# Controller contract: on_event(event, ctx) -> list[VlaAction], where ctx
# holds numeric variables plus the effective authority set for this level.
# State is exposed for equivalence checks; reset() models a power cycle.


class HandWorkerVla:
    """Hand-coded worker deadline protocol, the oracle for the shipped chart.

    Idle --crossing_start--> Timing, arming the declared budget. Completion
    stops the timer from either armed state. The first expiry notifies the
    application and re-arms for the grace window; the second one resets the
    application when worker-reset authority is held here, otherwise
    escalates an e1 fault to the farmlet agent.
    """

    def __init__(self):
        self.state = "Idle"

    def reset(self) -> None:
        self.state = "Idle"

    def on_event(self, event: str, ctx: Mapping) -> list[VlaAction]:
        authority = ctx.get("authority", frozenset())
        if self.state == "Idle":
            if event == "crossing_start":
                self.state = "Timing"
                return [VlaAction("arm_timer", (float(ctx["estimate"]),))]
        elif self.state == "Timing":
            if event == "pa_complete":
                self.state = "Idle"
                return [VlaAction("stop_timer")]
            if event == "deadline_expired":
                self.state = "Grace"
                return [
                    VlaAction("notify_pa"),
                    VlaAction("arm_timer", (float(ctx["grace"]),)),
                ]
        elif self.state == "Grace":
            if event == "pa_complete":
                self.state = "Idle"
                return [VlaAction("stop_timer")]
            if event == "deadline_expired":
                self.state = "Idle"
                if "wr" in authority:
                    return [VlaAction("reset_pa")]
                return [VlaAction("escalate", ("farmlet", "e1"))]
        return []


class HandFarmletVla:
    """Hand-coded farmlet escalation handling, the oracle for the shipped
    chart: subsume past the window threshold, else reset when worker-reset
    authority is held at this level, and always forward a summary upward."""

    def __init__(self):
        self.state = "Monitoring"

    def reset(self) -> None:
        self.state = "Monitoring"

    def on_event(self, event: str, ctx: Mapping) -> list[VlaAction]:
        if event != "fault_e1":
            return []
        authority = ctx.get("authority", frozenset())
        if ctx["window_count"] >= ctx["n_subsume"]:
            return [VlaAction("quarantine", ("worker",)), VlaAction("forward", ("up",))]
        if "wr" in authority:
            return [VlaAction("reset_pa"), VlaAction("forward", ("up",))]
        return [VlaAction("forward", ("up",))]


class ChartVla:
    """Statechart-interpreted controller with the same action interface."""

    def __init__(self, spec: dsl.StatechartSpec):
        self.spec = spec
        self.state = spec.initial

    def reset(self) -> None:
        self.state = self.spec.initial

    def on_event(self, event: str, ctx: Mapping) -> list[VlaAction]:
        variables = {k: v for k, v in ctx.items() if isinstance(v, (int, float))}
        step_ctx = dsl.StepContext(
            variables=variables, authority=frozenset(ctx.get("authority", frozenset()))
        )
        self.state, actions = dsl.step(self.spec, self.state, event, step_ctx)
        return [VlaAction(a.name, a.args) for a in actions]


def load_chart(text: str) -> dsl.StatechartSpec:
    spec = dsl.parse(text)
    errors = [d for d in dsl.validate(spec) if d.severity == "error"]
    if errors:
        raise dsl.DslError("; ".join(d.message for d in errors))
    return spec


_WORKER_SPEC = None
_FARMLET_SPEC = None


def make_worker_vla(impl: str, chart_text: str | None = None):
    global _WORKER_SPEC
    if impl == "hand":
        return HandWorkerVla()
    if chart_text is not None:
        return ChartVla(load_chart(chart_text))
    if _WORKER_SPEC is None:
        _WORKER_SPEC = load_chart(WORKER_CHART_TEXT)
    return ChartVla(_WORKER_SPEC)


def make_farmlet_vla(impl: str, chart_text: str | None = None):
    global _FARMLET_SPEC
    if impl == "hand":
        return HandFarmletVla()
    if chart_text is not None:
        return ChartVla(load_chart(chart_text))
    if _FARMLET_SPEC is None:
        _FARMLET_SPEC = load_chart(FARMLET_CHART_TEXT)
    return ChartVla(_FARMLET_SPEC)
