"""Operator-gated mitigation strategies.

Four independently grantable authorities: worker reset (WR), farmlet
prescale (FP), global prescale (GP) and global failover (GF). Every policy
here is a pure decision function; with a strategy's grant absent its
function is inert and changes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from farmsim.vla import EscalationRecord

__all__ = [
    "AuthorityMask",
    "FailoverAlarm",
    "FailoverPlan",
    "FarmletHealth",
    "PrescaleController",
    "SubsumeDecision",
    "evaluate_failover",
    "farmlet_prescale",
    "global_prescale",
    "subsume",
]

STRATEGIES = ("wr", "fp", "gp", "gf")


@dataclass
class AuthorityMask:
    """Which mitigation strategies the operator has enabled. Any combination
    is representable; changes go through the journaled command path."""

    wr: bool = False
    fp: bool = False
    gp: bool = False
    gf: bool = False

    def granted(self) -> frozenset[str]:
        return frozenset(s for s in STRATEGIES if getattr(self, s))

    def worker_level(self, wr_holder: str, reset_revoked: bool = False) -> frozenset[str]:
        """Effective authority seen by a worker-level agent: worker reset
        applies there only when the grant is held at the worker level and has
        not been subsumed away for this worker."""
        if self.wr and wr_holder == "worker" and not reset_revoked:
            return frozenset({"wr"})
        return frozenset()

    def farmlet_level(self) -> frozenset[str]:
        return frozenset({"wr"}) if self.wr else frozenset()

    def as_dict(self) -> dict[str, bool]:
        return {s: bool(getattr(self, s)) for s in STRATEGIES}


@dataclass
class PrescaleController:
    """Proportional load-shedding law: drop_rate rises linearly with queue
    occupancy above the target, clamped into [0, max_rate]."""

    target_occupancy: float = 0.5
    gain: float = 2.0
    max_rate: float = 1.0

    def drop_rate(self, occupancy_fraction: float) -> float:
        raw = self.gain * (occupancy_fraction - self.target_occupancy)
        return min(self.max_rate, max(0.0, raw))


def farmlet_prescale(
    controller: PrescaleController, occupancy_fraction: float, fp_granted: bool
) -> float:
    """Farmlet-wide drop rate from its own occupancy; inert without FP."""
    if not fp_granted:
        return 0.0
    return controller.drop_rate(occupancy_fraction)


def global_prescale(
    controller: PrescaleController,
    occupancies: Mapping[str, float],
    gp_granted: bool,
    aggregate: str = "max",
) -> float:
    """One uniform drop rate for every active farmlet, computed from the
    aggregated occupancy (max by default, mean by configuration)."""
    if not gp_granted or not occupancies:
        return 0.0
    values = list(occupancies.values())
    source = max(values) if aggregate == "max" else sum(values) / len(values)
    return controller.drop_rate(source)


@dataclass(frozen=True)
class FarmletHealth:
    farmlet: str
    role: str
    data_link_up: bool
    window_efficiency: float


@dataclass(frozen=True)
class FailoverPlan:
    unfit: str
    spare: str
    effective_time: float


@dataclass(frozen=True)
class FailoverAlarm:
    unfit: str
    reason: str


def evaluate_failover(
    healths: Sequence[FarmletHealth],
    *,
    gf_granted: bool,
    theta_f: float,
    now: float,
    activation_delay: float,
) -> list[FailoverPlan | FailoverAlarm]:
    """Declare farmlets unfit and pair them with hot spares.

    A farmlet is unfit when its data link is severed or its windowed
    efficiency fell below theta_f. Each unfit farmlet gets a plan targeting
    an available spare; with spares exhausted an alarm is raised instead.
    Inert without GF.
    """
    if not gf_granted:
        return []
    spares = [h.farmlet for h in healths if h.role == "hot_spare"]
    decisions: list[FailoverPlan | FailoverAlarm] = []
    for health in healths:
        if health.role != "active":
            continue
        if health.data_link_up and health.window_efficiency >= theta_f:
            continue
        if spares:
            decisions.append(
                FailoverPlan(health.farmlet, spares.pop(0), now + activation_delay)
            )
        else:
            decisions.append(FailoverAlarm(health.farmlet, "no hot spare available"))
    return decisions


@dataclass(frozen=True)
class SubsumeDecision:
    """The farmlet agent takes over a worker agent's mitigation role: revoke
    its local reset handling, quarantine the worker, report upward."""

    worker: int
    code: str
    count: int


def subsume(record: EscalationRecord, now: float, n_subsume: int) -> SubsumeDecision | None:
    count = record.count(now)
    if count >= n_subsume:
        return SubsumeDecision(record.worker, record.code, count)
    return None
