"""Trigger-farm model.

Crossing generation from experiment parameters, per-farmlet bounded queues
with prescale admission, the stochastic physics-application outcome model,
the downstream two-stage filter, and per-worker P/V/I time accounting.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

__all__ = [
    "Crossing",
    "ExperimentParams",
    "FarmCounters",
    "Farmlet",
    "FilterStage",
    "PaOutcome",
    "PaParams",
    "ProcessingError",
    "Router",
    "WorkerState",
    "efficiency",
    "generate_crossings",
    "pa_process",
    "sample_crossing_fields",
    "utilization_snapshot",
]


class ProcessingError(RuntimeError):
    """A crossing was handed to a worker that cannot take it."""


@dataclass(frozen=True)
class Crossing:
    """One beam-crossing event: the unit of work entering the first filter level."""

    id: int
    n_interactions: int
    size_bytes: int
    corrupt: bool
    heavy_flavor: bool


@dataclass
class ExperimentParams:
    crossing_rate: float = 1000.0  # crossings per virtual second
    mean_interactions: float = 6.0
    mean_size_bytes: float = 200_000.0
    error_rate: float = 0.0  # probability a crossing is corrupt
    heavy_flavor_fraction: float = 0.1

    def validate(self) -> list[str]:
        problems = []
        if self.crossing_rate < 0:
            problems.append("crossing_rate must be >= 0")
        if self.mean_interactions < 0:
            problems.append("mean_interactions must be >= 0")
        if self.mean_size_bytes <= 0:
            problems.append("mean_size_bytes must be > 0")
        if not 0.0 <= self.error_rate <= 1.0:
            problems.append("error_rate must be within [0, 1]")
        if not 0.0 <= self.heavy_flavor_fraction <= 1.0:
            problems.append("heavy_flavor_fraction must be within [0, 1]")
        return problems


@dataclass
class PaParams:
    """Physics-application service model.

    Service times are log-normal (the median and dispersion are tunable; the
    default median puts a worker near 80% utilization at the default crossing
    rate). The declared per-crossing time budget is the (1 - p_overrun)
    quantile of that distribution, so the budget is exceeded with probability
    p_overrun by construction.
    """

    service_median: float = 0.0082
    service_sigma: float = 0.3
    p_overrun: float = 0.001
    accept_min_bias: float = 0.01
    accept_heavy_flavor: float = 0.65

    def estimate(self) -> float:
        # quantile factor capped at +8 sigma so a zero overrun probability
        # still yields a finite, JSON-safe budget
        if self.p_overrun <= 0.0:
            z = 8.0
        else:
            z = min(8.0, float(ndtri(1.0 - self.p_overrun)))
        return self.service_median * float(np.exp(self.service_sigma * z))

    def validate(self) -> list[str]:
        problems = []
        if self.service_median <= 0:
            problems.append("service_median must be > 0")
        if self.service_sigma <= 0:
            problems.append("service_sigma must be > 0")
        for name in ("p_overrun", "accept_min_bias", "accept_heavy_flavor"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must be within [0, 1]")
        return problems


# ----------------------------------------------------------------------
# generation
# ----------------------------------------------------------------------


def sample_crossing_fields(params: ExperimentParams, n: int, rng: np.random.Generator):
    """Vectorized draws for n crossings: interaction counts are Poisson,
    sizes are normal with sigma = 10% of the mean floored at one byte,
    corruption and heavy-flavor flags are Bernoulli."""
    interactions = rng.poisson(params.mean_interactions, n)
    sizes = rng.normal(params.mean_size_bytes, 0.1 * params.mean_size_bytes, n)
    sizes = np.maximum(1, np.rint(sizes)).astype(np.int64)
    corrupt = rng.random(n) < params.error_rate
    heavy = rng.random(n) < params.heavy_flavor_fraction
    return interactions, sizes, corrupt, heavy


def generate_crossings(
    params: ExperimentParams, dt: float, rng: np.random.Generator, start_id: int = 0
) -> list[Crossing]:
    """Generate the crossings for a window of dt virtual seconds; the count
    is Poisson with expectation crossing_rate * dt."""
    if params.crossing_rate <= 0 or dt <= 0:
        return []
    n = int(rng.poisson(params.crossing_rate * dt))
    if n == 0:
        return []
    interactions, sizes, corrupt, heavy = sample_crossing_fields(params, n, rng)
    return [
        Crossing(
            id=start_id + i,
            n_interactions=int(interactions[i]),
            size_bytes=int(sizes[i]),
            corrupt=bool(corrupt[i]),
            heavy_flavor=bool(heavy[i]),
        )
        for i in range(n)
    ]


# ----------------------------------------------------------------------
# workers
# ----------------------------------------------------------------------


@dataclass
class WorkerState:
    """Per-worker status plus accumulated P/V/I time.

    The accounting is a strict partition of the worker's timeline: P while
    the physics application occupies the processor (processing, and hung --
    a hung application still holds it), V while the agent does (the short
    post-crossing bookkeeping window and the restart window), I otherwise.
    """

    id: int
    farmlet: str
    pa_status: str = "idle"  # idle | processing | hung | restarting
    behavior: str = "run_well"  # run_well | run_poor
    quarantined: bool = False
    reset_revoked: bool = False
    time_p: float = 0.0
    time_v: float = 0.0
    time_i: float = 0.0
    bucket: str = "I"
    bucket_since: float = 0.0
    started_at: float = 0.0

    def switch_bucket(self, now: float, bucket: str) -> None:
        self.accrue(now)
        self.bucket = bucket

    def accrue(self, now: float) -> None:
        elapsed = now - self.bucket_since
        if elapsed > 0:
            if self.bucket == "P":
                self.time_p += elapsed
            elif self.bucket == "V":
                self.time_v += elapsed
            else:
                self.time_i += elapsed
        self.bucket_since = now


def utilization_snapshot(worker: WorkerState, now: float) -> tuple[float, float, float]:
    """P/V/I fractions of elapsed time; a worker with no elapsed time is
    idle by convention."""
    elapsed = now - worker.started_at
    if elapsed <= 0:
        return (0.0, 0.0, 1.0)
    pending = now - worker.bucket_since
    p, v, i = worker.time_p, worker.time_v, worker.time_i
    if worker.bucket == "P":
        p += pending
    elif worker.bucket == "V":
        v += pending
    else:
        i += pending
    return (p / elapsed, v / elapsed, i / elapsed)


@dataclass(frozen=True)
class PaOutcome:
    """Drawn fate of one crossing on one worker.

    kind "complete": finishes within the declared budget, with the drawn
    accept/reject decision. kind "overrun": the drawn service time exceeds
    the budget, so completion hinges on a successful cleanup. kind "hang":
    the application wedges and never finishes without intervention.
    """

    kind: str  # complete | overrun | hang
    decision: str  # accept | reject
    service_time: float
    estimate: float


def pa_process(
    worker: WorkerState, crossing: Crossing, pa: PaParams, rng: np.random.Generator
) -> PaOutcome:
    if worker.pa_status == "hung":
        raise ProcessingError(f"worker {worker.id} is hung; cannot start crossing {crossing.id}")
    estimate = pa.estimate()
    service = float(pa.service_median * np.exp(pa.service_sigma * rng.standard_normal()))
    if crossing.corrupt:
        if worker.behavior == "run_poor":
            return PaOutcome("hang", "reject", service, estimate)
        # graceful ignore: counted processed and rejected
        decision = "reject"
    else:
        p_accept = pa.accept_heavy_flavor if crossing.heavy_flavor else pa.accept_min_bias
        decision = "accept" if rng.random() < p_accept else "reject"
    kind = "overrun" if service > estimate else "complete"
    return PaOutcome(kind, decision, service, estimate)


# ----------------------------------------------------------------------
# farmlets, routing, queues
# ----------------------------------------------------------------------


@dataclass
class Farmlet:
    """A group of workers sharing one bounded buffer-manager queue; the unit
    of prescale and failover. A hot spare keeps an empty queue until it is
    activated."""

    id: str
    worker_ids: list[int]
    capacity: int = 64
    role: str = "active"  # active | hot_spare | unfit
    prescale_drop_rate: float = 0.0
    queue: deque = field(default_factory=deque)
    next_worker: int = 0  # rotation pointer so work spreads evenly
    routed: int = 0
    arrived: int = 0
    processed: int = 0
    dropped_prescale: int = 0
    lost: int = 0
    overflowed: int = 0

    def occupancy(self) -> int:
        return len(self.queue)

    def occupancy_fraction(self) -> float:
        return len(self.queue) / self.capacity if self.capacity else 0.0

    def enqueue(self, crossing: Crossing, rng: np.random.Generator) -> str:
        """Admission: prescale dropping happens before analysis, then the
        bounded queue either accepts or overflows."""
        if self.role != "active":
            raise ProcessingError(f"farmlet {self.id} is {self.role}; cannot enqueue")
        if self.prescale_drop_rate > 0.0 and rng.random() < self.prescale_drop_rate:
            self.dropped_prescale += 1
            return "dropped_prescale"
        if len(self.queue) >= self.capacity:
            self.overflowed += 1
            self.lost += 1
            return "overflowed"
        self.queue.append(crossing)
        return "accepted"


class Router:
    """Round-robin dispatch over the active farmlets; a failover plan swaps
    the unfit farmlet out for the spare in place, preserving rotation."""

    def __init__(self, active: list[str]):
        self.active = list(active)
        self._next = 0

    def route(self) -> str | None:
        if not self.active:
            return None
        farmlet = self.active[self._next % len(self.active)]
        self._next += 1
        return farmlet

    def replace(self, old: str, new: str) -> None:
        self.active[self.active.index(old)] = new

    def remove(self, farmlet: str) -> None:
        self.active.remove(farmlet)


# ----------------------------------------------------------------------
# counters, downstream filter
# ----------------------------------------------------------------------


@dataclass
class FarmCounters:
    generated: int = 0
    processed: int = 0
    accepted_l1: int = 0
    rejected_l1: int = 0
    dropped_prescale: int = 0
    lost: int = 0
    overflowed: int = 0  # subset of lost
    l2_passed: int = 0
    l3_passed: int = 0
    generated_bytes: int = 0
    l3_bytes: int = 0


def efficiency(counters: FarmCounters) -> float:
    """Ratio of processed (not lost) to generated data; 1.0 before anything
    has been generated, by convention."""
    if counters.generated == 0:
        return 1.0
    return counters.processed / counters.generated


class FilterStage:
    """Aggregate downstream filtering: each first-level accept survives the
    second level with probability l2_pass and, if it does, the third level
    with probability l3_pass (independent seeded thinning)."""

    def __init__(self, l2_pass: float, l3_pass: float, rng_l2, rng_l3):
        self.l2_pass = l2_pass
        self.l3_pass = l3_pass
        self._rng_l2 = rng_l2
        self._rng_l3 = rng_l3

    def accept(self, crossing: Crossing, counters: FarmCounters) -> None:
        if self._rng_l2.random() < self.l2_pass:
            counters.l2_passed += 1
            if self._rng_l3.random() < self.l3_pass:
                counters.l3_passed += 1
                counters.l3_bytes += crossing.size_bytes
