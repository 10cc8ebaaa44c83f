from __future__ import annotations

from pathlib import Path

from farmsim.config import Scenario, load_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def load_drill(name: str) -> Scenario:
    return load_scenario(SCENARIOS / f"{name}.json")
