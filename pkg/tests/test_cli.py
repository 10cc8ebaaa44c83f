from __future__ import annotations

import json

import pytest

from farmsim.cli import main

from util import SCENARIOS


@pytest.fixture()
def run_args(tmp_path):
    def build(scenario_name, *extra):
        return [
            "run",
            "--scenario",
            str(SCENARIOS / f"{scenario_name}.json"),
            "--out",
            str(tmp_path / "runs"),
            *extra,
        ]

    return build


def test_run_no_fault_prints_efficiency_and_exits_zero(run_args, capsys, tmp_path):
    code = main(run_args("worker_reset"))
    out = capsys.readouterr().out
    assert code == 0
    assert "efficiency=" in out and "mitigation:" in out
    run_dirs = list((tmp_path / "runs").iterdir())
    assert len(run_dirs) == 1


def test_malformed_scenario_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "duration": -1}')
    code = main(["run", "--scenario", str(bad), "--out", str(tmp_path)])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_missing_scenario_flag_is_validation_error(capsys, monkeypatch):
    monkeypatch.delenv("FARMSIM_SCENARIO", raising=False)
    assert main(["run"]) == 1
    assert "no scenario" in capsys.readouterr().err


def test_seed_override_changes_numbers_not_schema(run_args, capsys, tmp_path):
    assert main(run_args("worker_reset")) == 0
    first = capsys.readouterr().out
    assert main(run_args("worker_reset", "--seed", "999")) == 0
    second = capsys.readouterr().out
    # identical shape (same summary fields), different stochastic content
    fields = lambda text: [tok.split("=")[0] for tok in text.split() if "=" in tok]
    assert fields(first) == fields(second)
    assert first != second
    assert len(list((tmp_path / "runs").iterdir())) == 2  # keyed by seed+hash


def test_env_variable_supplies_scenario_and_flag_beats_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FARMSIM_SCENARIO", str(SCENARIOS / "worker_reset.json"))
    monkeypatch.setenv("FARMSIM_OUT", str(tmp_path / "env_runs"))
    assert main(["run"]) == 0
    assert (tmp_path / "env_runs").exists()
    # flag wins over env
    assert main(["run", "--out", str(tmp_path / "flag_runs")]) == 0
    assert (tmp_path / "flag_runs").exists()


def test_replay_pristine_run_is_identical(run_args, capsys, tmp_path):
    assert main(run_args("worker_reset")) == 0
    run_dir = next((tmp_path / "runs").iterdir())
    capsys.readouterr()
    code = main(["replay", str(run_dir)])
    assert code == 0
    assert "identical" in capsys.readouterr().out


def test_replay_tampered_run_reports_divergence(run_args, capsys, tmp_path):
    assert main(run_args("worker_reset")) == 0
    run_dir = next((tmp_path / "runs").iterdir())
    telemetry = run_dir / "telemetry.ndjson"
    lines = telemetry.read_text().splitlines()
    record = json.loads(lines[0])
    record["missing_events"] = 12345
    lines[0] = json.dumps(record, sort_keys=True, separators=(",", ":"))
    telemetry.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    code = main(["replay", str(run_dir)])
    assert code == 3
    assert "line 1" in capsys.readouterr().out


def test_replay_incomplete_dir_is_validation_error(tmp_path, capsys):
    assert main(["replay", str(tmp_path)]) == 1


def test_validate_dsl_shipped_charts_pass(capsys):
    chart = SCENARIOS.parent / "src" / "farmsim" / "data" / "charts" / "worker_vla.fml"
    assert main(["validate-dsl", str(chart)]) == 0
    out = capsys.readouterr().out
    assert json.loads(out.splitlines()[-1])["severity"] == "ok"


def test_validate_dsl_nondeterministic_spec_fails(tmp_path, capsys):
    bad = tmp_path / "nd.fml"
    bad.write_text(
        "statechart nd {\n  initial A;\n  state A { on go -> A; on go -> A; }\n}\n"
    )
    assert main(["validate-dsl", str(bad)]) == 1
    diags = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert any(d["code"] == "nondeterministic" for d in diags)


def test_validate_dsl_unreachable_state_warns_but_passes(tmp_path, capsys):
    warn = tmp_path / "warn.fml"
    warn.write_text(
        "statechart w {\n  initial A;\n  state A { on go -> A; }\n"
        "  state Island { on go -> A; }\n}\n"
    )
    assert main(["validate-dsl", str(warn)]) == 0
    diags = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert any(d.get("code") == "unreachable-state" for d in diags)


def test_validate_dsl_parse_failure_is_nonzero(tmp_path, capsys):
    bad = tmp_path / "broken.fml"
    bad.write_text("statechart broken {")
    assert main(["validate-dsl", str(bad)]) == 1
    diag = json.loads(capsys.readouterr().out.splitlines()[0])
    assert diag["code"] == "syntax"
