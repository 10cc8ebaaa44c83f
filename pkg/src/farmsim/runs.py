"""Headless scenario execution with a persisted run directory, plus replay.

A run directory is keyed by scenario name, seed and script hash and holds a
canonical copy of the scenario, the event trace, telemetry, the control
journal (all newline-delimited JSON), and a summary as JSON and CSV. The
trace and telemetry files are byte-identical across same-seed reruns; a
replay rebuilds the run from the journal's command list and verifies that.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path

from farmsim.config import Command, Scenario, scenario_hash
from farmsim.engine import Engine
from farmsim.session import RunResult, Session

__all__ = ["ReplayReport", "replay_run_dir", "run_scenario", "write_run_dir"]


def _ndjson(records) -> str:
    if not records:
        return ""
    return "\n".join(json.dumps(r, sort_keys=True, separators=(",", ":")) for r in records) + "\n"


def telemetry_text(result: RunResult) -> str:
    return _ndjson(result.telemetry)


def trace_text(result: RunResult) -> str:
    if not result.trace:
        return ""
    return "\n".join(Engine.trace_line(r) for r in result.trace) + "\n"


def journal_text(result: RunResult) -> str:
    return _ndjson([entry.to_dict() for entry in result.journal])


def summary_csv(summary: dict) -> str:
    flat = {
        k: v for k, v in summary.items() if isinstance(v, (int, float, str, bool))
    }
    for key, value in summary.get("mitigation", {}).items():
        flat[f"mitigation_{key}"] = value
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(flat))
    writer.writerow([flat[k] for k in flat])
    return buf.getvalue()


def run_scenario(scenario: Scenario, out_root: str | Path | None = None):
    """Execute a scenario headless; optionally persist the run directory.
    Returns (result, run_dir_or_None)."""
    started = time.monotonic()
    session = Session(scenario)
    result = session.run()
    result.wall_seconds = time.monotonic() - started
    run_dir = None
    if out_root is not None:
        run_dir = write_run_dir(result, out_root)
    return result, run_dir


def write_run_dir(result: RunResult, out_root: str | Path) -> Path:
    scenario = result.scenario
    run_dir = Path(out_root) / f"{scenario.name}-seed{scenario.seed}-{scenario_hash(scenario)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "scenario.json").write_text(scenario.to_json(), "utf-8")
    (run_dir / "trace.ndjson").write_text(trace_text(result), "utf-8")
    (run_dir / "telemetry.ndjson").write_text(telemetry_text(result), "utf-8")
    (run_dir / "journal.ndjson").write_text(journal_text(result), "utf-8")
    (run_dir / "summary.json").write_text(
        json.dumps(result.summary(), indent=2, sort_keys=True) + "\n", "utf-8"
    )
    (run_dir / "summary.csv").write_text(summary_csv(result.summary()), "utf-8")
    return run_dir


@dataclass
class ReplayReport:
    identical: bool
    divergences: list[str]

    def describe(self) -> str:
        if self.identical:
            return "identical"
        return "; ".join(self.divergences)


def _first_divergence(name: str, stored: str, fresh: str) -> list[str]:
    if stored == fresh:
        return []
    stored_lines = stored.splitlines()
    fresh_lines = fresh.splitlines()
    for i, (a, b) in enumerate(zip(stored_lines, fresh_lines)):
        if a != b:
            return [f"{name}: first divergent record at line {i + 1}: stored={a!r} replay={b!r}"]
    return [
        f"{name}: record count differs (stored {len(stored_lines)}, replay {len(fresh_lines)})"
    ]


def replay_run_dir(run_dir: str | Path) -> ReplayReport:
    """Re-execute a persisted run from its seed and journal and compare the
    trace and telemetry byte-for-byte against the stored files."""
    run_dir = Path(run_dir)
    scenario = Scenario.from_dict(json.loads((run_dir / "scenario.json").read_text("utf-8")))
    journal_lines = (run_dir / "journal.ndjson").read_text("utf-8").splitlines()
    commands = []
    for line in journal_lines:
        entry = json.loads(line)
        commands.append(Command.from_dict(entry["command"]))
    # commands are re-scheduled at their original receipt times so stop/go
    # deferral replays exactly as it originally unfolded
    replay_scenario = scenario.with_overrides(commands=commands)
    result, _ = run_scenario(replay_scenario, out_root=None)
    divergences = []
    divergences += _first_divergence(
        "trace", (run_dir / "trace.ndjson").read_text("utf-8"), trace_text(result)
    )
    divergences += _first_divergence(
        "telemetry",
        (run_dir / "telemetry.ndjson").read_text("utf-8"),
        telemetry_text(result),
    )
    return ReplayReport(identical=not divergences, divergences=divergences)
