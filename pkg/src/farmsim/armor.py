"""Supervisor processes built from replaceable elements.

An ArmorProcess is a logically independent actor with a FIFO mailbox and an
ordered set of elements, each subscribing to message types. Handlers are
pure transitions over (element state, message) -> (state, emitted messages,
actions), so identical mailbox input yields an identical action log.
Detection and analysis elements communicate by emitting messages; only
recovery elements may emit actions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

__all__ = [
    "ArmorAction",
    "ArmorContractError",
    "ArmorProcess",
    "Element",
    "ElementMessage",
    "ReturnCodePattern",
    "execution_monitor_tick",
    "heartbeat_monitor_element",
    "match_return_codes",
    "migration_element",
    "recovery_migrate",
    "restart_recovery_element",
    "return_code_element",
]


class ArmorContractError(RuntimeError):
    """An element violated the element contract (e.g. a non-recovery element
    emitted an action)."""


@dataclass(frozen=True)
class ElementMessage:
    msg_type: str
    source: str
    t: float
    body: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class ArmorAction:
    name: str  # restart | migrate | failover | alarm
    target: str
    args: Mapping = field(default_factory=dict)


@dataclass
class Element:
    """A pluggable module: a kind, a subscription set, and a pure handler."""

    element_id: str
    kind: str  # detection | analysis | recovery
    subscriptions: frozenset[str]
    handler: Callable[
        [Any, ElementMessage], tuple[Any, list[ElementMessage], list[ArmorAction]]
    ]
    state: Any = None

    def __post_init__(self):
        if self.kind not in ("detection", "analysis", "recovery"):
            raise ValueError(f"unknown element kind {self.kind!r}")


class ArmorProcess:
    """One supervisor: ordered elements, a FIFO mailbox, and accounting that
    satisfies enqueued == handled + dead_letters at every drain boundary."""

    def __init__(self, armor_id: str, level: str = "node"):
        if level not in ("node", "regional", "global"):
            raise ValueError(f"unknown armor level {level!r}")
        self.armor_id = armor_id
        self.level = level
        self.elements: list[Element] = []
        self.mailbox: deque[ElementMessage] = deque()
        self.enqueued = 0
        self.handled = 0
        self.dead_letters = 0
        self.action_log: list[tuple[float, ArmorAction]] = []

    # ------------------------------------------------------------------
    def register_element(self, element: Element) -> None:
        if any(e.element_id == element.element_id for e in self.elements):
            raise ValueError(f"element id {element.element_id!r} already registered")
        self.elements.append(element)

    def unregister_element(self, element_id: str) -> None:
        self.elements = [e for e in self.elements if e.element_id != element_id]

    # ------------------------------------------------------------------
    def enqueue(self, msg: ElementMessage) -> None:
        self.mailbox.append(msg)
        self.enqueued += 1

    def api_report(self, source: str, report: Mapping, t: float) -> bool:
        """Applications push error info or quality rates straight in; a
        malformed report is dead-lettered instead of enqueued."""
        if not isinstance(report, Mapping) or "type" not in report:
            self.enqueued += 1
            self.dead_letters += 1
            return False
        body = {k: v for k, v in report.items() if k != "type"}
        self.enqueue(ElementMessage(str(report["type"]), source, t, body))
        return True

    def drain(self) -> list[ArmorAction]:
        """Process the mailbox to empty, fanning each message out to its
        subscribers in registration order. Messages emitted by handlers are
        re-enqueued and processed in the same drain."""
        actions: list[ArmorAction] = []
        while self.mailbox:
            msg = self.mailbox.popleft()
            subscribers = [e for e in self.elements if msg.msg_type in e.subscriptions]
            if not subscribers:
                self.dead_letters += 1
                continue
            self.handled += 1
            for element in subscribers:
                element.state, emitted, acts = element.handler(element.state, msg)
                if acts and element.kind != "recovery":
                    raise ArmorContractError(
                        f"{element.kind} element {element.element_id!r} emitted actions"
                    )
                for out in emitted:
                    self.enqueue(out)
                for action in acts:
                    actions.append(action)
                    self.action_log.append((msg.t, action))
        return actions


# ----------------------------------------------------------------------
# return-code pattern recovery
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ReturnCodePattern:
    pattern: tuple[int, ...]
    action: str

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("return-code pattern must be non-empty")


def match_return_codes(
    history: Sequence[int], patterns: Sequence[ReturnCodePattern]
) -> str | None:
    """Longest-suffix match of the exit-code history against the configured
    patterns; returns the winning pattern's action."""
    best_action = None
    best_len = 0
    for candidate in patterns:
        k = len(candidate.pattern)
        if k <= len(history) and tuple(history[-k:]) == candidate.pattern and k > best_len:
            best_action = candidate.action
            best_len = k
    return best_action


def return_code_element(
    patterns: Sequence[ReturnCodePattern], history_limit: int = 16
) -> Element:
    """Analysis element: accumulates per-source exit codes and emits a
    recovery_needed message when a pattern's suffix matches."""

    patterns = tuple(patterns)

    def handler(state, msg):
        state = dict(state or {})
        history = state.get(msg.source, ()) + (int(msg.body["code"]),)
        state[msg.source] = history[-history_limit:]
        action = match_return_codes(state[msg.source], patterns)
        emitted = []
        if action is not None:
            emitted.append(
                ElementMessage("recovery_needed", msg.source, msg.t, {"action": action})
            )
        return state, emitted, []

    return Element("return-code-analysis", "analysis", frozenset({"return_code"}), handler)


# ----------------------------------------------------------------------
# heartbeat execution monitoring
# ----------------------------------------------------------------------


def heartbeat_monitor_element(targets: Sequence[str], miss_threshold: int) -> Element:
    """Detection element: counts consecutive monitor ticks without a
    heartbeat per target; at the threshold it flags the target unresponsive,
    and on resumption it flags recovery."""

    targets = tuple(targets)
    initial = {"misses": {t: 0 for t in targets}, "seen": [], "down": {t: False for t in targets}}

    def handler(state, msg):
        state = state or initial
        misses = dict(state["misses"])
        seen = list(state["seen"])
        down = dict(state["down"])
        emitted = []
        if msg.msg_type == "heartbeat":
            seen.append(msg.source)
            if down.get(msg.source):
                down[msg.source] = False
                emitted.append(ElementMessage("target_recovered", msg.source, msg.t, {}))
            misses[msg.source] = 0
        else:  # monitor_tick
            for target in targets:
                if target in seen:
                    misses[target] = 0
                else:
                    misses[target] = misses.get(target, 0) + 1
                    if misses[target] >= miss_threshold:
                        down[target] = True
                        emitted.append(
                            ElementMessage(
                                "target_unresponsive",
                                target,
                                msg.t,
                                {"misses": misses[target]},
                            )
                        )
            seen = []
        return {"misses": misses, "seen": seen, "down": down}, emitted, []

    return Element(
        "heartbeat-detection",
        "detection",
        frozenset({"heartbeat", "monitor_tick"}),
        handler,
    )


def restart_recovery_element(max_restarts: int = 3) -> Element:
    """Recovery element: restarts an unresponsive target up to max_restarts
    times per outage, then raises one alarm; resumption resets the budget.
    Also executes recovery_needed requests from analysis elements."""

    def handler(state, msg):
        state = dict(state or {})
        actions = []
        if msg.msg_type == "target_unresponsive":
            count = state.get(msg.source, 0)
            if count < max_restarts:
                actions.append(ArmorAction("restart", msg.source))
                state[msg.source] = count + 1
            elif count == max_restarts:
                actions.append(
                    ArmorAction("alarm", msg.source, {"reason": "restart budget exhausted"})
                )
                state[msg.source] = count + 1
        elif msg.msg_type == "target_recovered":
            state[msg.source] = 0
        elif msg.msg_type == "recovery_needed":
            actions.append(ArmorAction(str(msg.body["action"]), msg.source))
        return state, [], actions

    return Element(
        "restart-recovery",
        "recovery",
        frozenset({"target_unresponsive", "target_recovered", "recovery_needed"}),
        handler,
    )


def execution_monitor_tick(
    armor: ArmorProcess, beats: Mapping[str, bool], t: float
) -> list[ArmorAction]:
    """Feed one monitoring interval into a supervisor: heartbeats observed
    this interval, then the tick itself, then drain; returns the actions."""
    for target, seen in beats.items():
        if seen:
            armor.enqueue(ElementMessage("heartbeat", target, t, {}))
    armor.enqueue(ElementMessage("monitor_tick", armor.armor_id, t, {}))
    return armor.drain()


# ----------------------------------------------------------------------
# workload migration
# ----------------------------------------------------------------------


def recovery_migrate(
    loads: Mapping[str, float], rho: float, unit: float = 1.0
) -> list[ArmorAction]:
    """When the max/min load ratio exceeds rho, move one unit of workload
    from the most- to the least-loaded node. Needs at least two reporters;
    never migrates when the move cannot narrow the gap (max - min <= unit),
    so repeated application always reaches a fixed point."""
    if len(loads) < 2:
        return []
    ordered = sorted(loads.items())
    max_node, max_load = max(ordered, key=lambda kv: kv[1])
    min_node, min_load = min(ordered, key=lambda kv: kv[1])
    if max_load <= 0 or max_load - min_load <= unit:
        return []
    if min_load > 0 and (max_load / min_load) <= rho:
        return []
    return [
        ArmorAction("migrate", max_node, {"to": min_node, "amount": unit}),
    ]


def migration_element(rho: float, unit: float = 1.0) -> Element:
    """Recovery element wrapping the migration rule; consumes load reports
    of the form {"loads": {node: load}}."""

    def handler(state, msg):
        actions = recovery_migrate(msg.body["loads"], rho, unit)
        return state, [], actions

    return Element("migration-recovery", "recovery", frozenset({"load_report"}), handler)
