#!/usr/bin/env python3
"""Run every shipped drill scenario (plus its authority variants) and print
a comparison table: efficiency, losses, and mitigation activity side by side.

Usage: python scripts/run_drills.py [--out runs/]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from farmsim.config import load_scenario
from farmsim.mitigation import AuthorityMask
from farmsim.runs import run_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

VARIANTS = [
    ("no_fault", None),
    ("worker_reset", None),
    ("worker_reset", AuthorityMask()),
    ("prescale", AuthorityMask(fp=True)),
    ("prescale", AuthorityMask()),
    ("prescale", AuthorityMask(gp=True)),
    ("failover", None),
    ("failover", AuthorityMask()),
    ("subsume", None),
    ("overrun", None),
]


def label(name: str, mask: AuthorityMask | None) -> str:
    if mask is None:
        return name
    granted = sorted(mask.granted())
    return f"{name}[{','.join(granted) if granted else 'none'}]"


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=None, help="persist run directories here")
    args = parser.parse_args()

    header = f"{'drill':28} {'eff':>8} {'missing':>8} {'overflow':>9} {'prescaled':>10} {'mitigation':>40}"
    print(header)
    print("-" * len(header))
    for name, mask in VARIANTS:
        scenario = load_scenario(SCENARIOS / f"{name}.json")
        if mask is not None:
            scenario.authority = mask
            scenario.name = label(name, mask)
        result, _ = run_scenario(scenario, args.out)
        summary = result.summary()
        active = {k: v for k, v in summary["mitigation"].items() if v}
        print(
            f"{label(name, mask):28} {summary['efficiency']:8.4f} "
            f"{summary['missing_events']:8d} {summary['overflowed']:9d} "
            f"{summary['dropped_prescale']:10d} {str(active) if active else '-':>40}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
