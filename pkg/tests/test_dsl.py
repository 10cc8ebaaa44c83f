from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from farmsim import dsl
from farmsim.dsl import (
    Diagnostic,
    DslSyntaxError,
    NondeterminismError,
    StepContext,
    format_statechart,
    parse,
    step,
    validate,
)
from farmsim.vla import FARMLET_CHART_TEXT, WORKER_CHART_TEXT

MINIMAL = """
statechart toggle {
  initial Off;
  state Off { on flip -> On do notify_pa; }
  state On  { on flip -> Off; }
}
"""


def test_minimal_spec_round_trips():
    spec = parse(MINIMAL)
    assert parse(format_statechart(spec)) == spec
    # and printing is a fixed point after one round
    assert format_statechart(parse(format_statechart(spec))) == format_statechart(spec)


def test_transition_to_undefined_state_names_it():
    bad = """
    statechart broken {
      initial A;
      state A { on go -> Missing; }
    }
    """
    with pytest.raises(DslSyntaxError, match="Missing"):
        parse(bad)


def test_duplicate_state_rejected():
    bad = """
    statechart dup {
      initial A;
      state A { on go -> A; }
      state A { on go -> A; }
    }
    """
    with pytest.raises(DslSyntaxError, match="duplicate state"):
        parse(bad)


def test_unknown_action_name_rejected():
    bad = """
    statechart bad {
      initial A;
      state A { on go -> A do explode; }
    }
    """
    with pytest.raises(DslSyntaxError, match="unknown action name"):
        parse(bad)


def test_syntax_error_reports_line_and_column():
    bad = "statechart x {\n  initial A;\n  state A { on go ->; }\n}\n"
    with pytest.raises(DslSyntaxError) as err:
        parse(bad)
    assert err.value.line == 3


def test_guard_and_expression_parsing_round_trip():
    text = """
    statechart guards {
      initial S;
      state S {
        on ev [count >= 3 and authority(wr)] -> T do arm_timer(0.25 * budget);
        on ev [count < 3 or not authority(wr)] -> S;
      }
      state T { on back [not (a < b)] -> S do set_prescale(x + y / 2.0); }
    }
    """
    spec = parse(text)
    assert parse(format_statechart(spec)) == spec


# ----------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------


def _codes(diags: list[Diagnostic], severity=None):
    return [d.code for d in diags if severity is None or d.severity == severity]


def test_clean_spec_has_no_errors_or_warnings():
    spec = parse(MINIMAL)
    diags = validate(spec)
    assert _codes(diags, "error") == []
    assert _codes(diags, "warning") == []


def test_two_unguarded_transitions_same_event_is_nondeterministic():
    text = """
    statechart nd {
      initial A;
      state A { on go -> A; on go -> B; }
      state B { on back -> A; }
    }
    """
    diags = validate(parse(text))
    assert "nondeterministic" in _codes(diags, "error")


def test_unguarded_plus_guarded_is_nondeterministic():
    text = """
    statechart nd2 {
      initial A;
      state A { on go -> A; on go [x > 1] -> B; }
      state B { on back -> A; }
    }
    """
    diags = validate(parse(text))
    assert "nondeterministic" in _codes(diags, "error")


def test_complementary_guards_are_deterministic():
    text = """
    statechart ok {
      initial A;
      state A {
        on go [authority(wr)] -> B;
        on go [not authority(wr)] -> A;
        on tick [n >= 3] -> B;
        on tick [n < 3] -> A;
      }
      state B { on back -> A; }
    }
    """
    diags = validate(parse(text))
    assert _codes(diags, "error") == []


def test_unreachable_state_warning():
    text = """
    statechart island {
      initial A;
      state A { on go -> A; }
      state Stranded { on go -> A; }
    }
    """
    diags = validate(parse(text))
    warnings = [d for d in diags if d.severity == "warning"]
    assert len(warnings) == 1 and "Stranded" in warnings[0].message


# ----------------------------------------------------------------------
# interpreter
# ----------------------------------------------------------------------


def test_unknown_event_is_identity():
    spec = parse(MINIMAL)
    assert step(spec, "Off", "noop", StepContext()) == ("Off", ())


def test_runtime_nondeterminism_raises():
    text = """
    statechart nd {
      initial A;
      state A { on go [x > 0] -> A; on go [x > 1] -> B; }
      state B { on back -> A; }
    }
    """
    spec = parse(text)
    with pytest.raises(NondeterminismError):
        step(spec, "A", "go", StepContext(variables={"x": 2}))


def test_action_arguments_evaluate_against_context():
    text = """
    statechart args {
      initial A;
      state A { on go -> A do arm_timer(0.25 * estimate), escalate(farmlet, e1); }
    }
    """
    spec = parse(text)
    _, actions = step(spec, "A", "go", StepContext(variables={"estimate": 2.0}))
    assert actions[0] == dsl.ResolvedAction("arm_timer", (0.5,))
    assert actions[1] == dsl.ResolvedAction("escalate", ("farmlet", "e1"))


THREE_STATE = """
statechart pump {
  initial Idle;
  state Idle {
    on start -> Running do notify_pa;
    on drain -> Draining;
  }
  state Running {
    on overload [load >= 10] -> Draining do set_prescale(0.5);
    on overload [load < 10] -> Running;
    on stop -> Idle do stop_timer;
  }
  state Draining {
    on done -> Idle;
    on start -> Running;
  }
}
"""


def test_exhaustive_event_sequences_match_transition_table_oracle():
    """Brute-force oracle: an independently hand-built transition table is
    replayed over every event sequence of length <= 4 and must agree with the
    interpreter at every step (fixed context: load=12)."""
    spec = parse(THREE_STATE)
    events = ("start", "drain", "overload", "stop", "done")
    ctx = StepContext(variables={"load": 12.0})

    # hand-built from the text above, not from the parsed object
    notify = dsl.ResolvedAction("notify_pa", ())
    prescale = dsl.ResolvedAction("set_prescale", (0.5,))
    stoptimer = dsl.ResolvedAction("stop_timer", ())
    table = {
        ("Idle", "start"): ("Running", (notify,)),
        ("Idle", "drain"): ("Draining", ()),
        ("Running", "overload"): ("Draining", (prescale,)),  # load=12 >= 10
        ("Running", "stop"): ("Idle", (stoptimer,)),
        ("Draining", "done"): ("Idle", ()),
        ("Draining", "start"): ("Running", ()),
    }

    checked = 0
    for length in range(1, 5):
        for sequence in itertools.product(events, repeat=length):
            interp_state = oracle_state = "Idle"
            for event in sequence:
                interp_state, interp_actions = step(spec, interp_state, event, ctx)
                oracle_state, oracle_actions = table.get(
                    (oracle_state, event), (oracle_state, ())
                )
                assert interp_state == oracle_state
                assert interp_actions == oracle_actions
                checked += 1
    assert checked == sum(len(events) ** n * n for n in range(1, 5))


# ----------------------------------------------------------------------
# shipped charts
# ----------------------------------------------------------------------


def test_shipped_worker_chart_parses_and_matches_hand_enumeration():
    """Hand enumeration of the worker deadline protocol as a flat guarded
    statechart: (1) arm on crossing start, (2) stop on completion before
    expiry, (3) first expiry notifies and re-arms for the grace period,
    (4) stop on successful cleanup, and the second expiry needs two guarded
    arcs for its authority branch: (5) reset with WR held, (6) escalate e1
    without it. Total: 6 transitions over 3 states."""
    spec = parse(WORKER_CHART_TEXT)
    assert spec.states == ("Idle", "Timing", "Grace")
    assert len(spec.transitions) == 6
    diags = validate(spec)
    assert _codes(diags, "error") == []
    assert _codes(diags, "warning") == []


def test_shipped_farmlet_chart_parses_clean():
    spec = parse(FARMLET_CHART_TEXT)
    diags = validate(spec)
    assert _codes(diags, "error") == []
    assert _codes(diags, "warning") == []


def test_worker_chart_first_expiry_gives_notify_and_grace_arm():
    spec = parse(WORKER_CHART_TEXT)
    ctx = StepContext(variables={"estimate": 0.02, "grace": 0.005}, authority=frozenset())
    state, actions = step(spec, "Idle", "crossing_start", ctx)
    assert state == "Timing"
    assert actions == (dsl.ResolvedAction("arm_timer", (0.02,)),)
    state, actions = step(spec, state, "deadline_expired", ctx)
    assert state == "Grace"
    assert actions == (
        dsl.ResolvedAction("notify_pa", ()),
        dsl.ResolvedAction("arm_timer", (0.005,)),
    )


def test_worker_chart_second_expiry_respects_authority():
    spec = parse(WORKER_CHART_TEXT)
    with_wr = StepContext(variables={"estimate": 1.0, "grace": 0.25}, authority=frozenset({"wr"}))
    without = StepContext(variables={"estimate": 1.0, "grace": 0.25}, authority=frozenset())
    state, actions = step(spec, "Grace", "deadline_expired", with_wr)
    assert state == "Idle" and actions == (dsl.ResolvedAction("reset_pa", ()),)
    state, actions = step(spec, "Grace", "deadline_expired", without)
    assert state == "Idle" and actions == (dsl.ResolvedAction("escalate", ("farmlet", "e1")),)


# ----------------------------------------------------------------------
# property: generated specs round-trip
# ----------------------------------------------------------------------

_names = st.sampled_from(["Alpha", "Beta", "Gamma", "Delta"])
_events = st.sampled_from(["go", "stop", "tick", "fault"])
_simple_actions = st.sampled_from(["notify_pa", "stop_timer", "reset_pa"])


@st.composite
def _specs(draw):
    states = draw(st.lists(_names, min_size=1, max_size=4, unique=True))
    transitions = []
    n = draw(st.integers(min_value=0, max_value=6))
    for _ in range(n):
        frm = draw(st.sampled_from(states))
        to = draw(st.sampled_from(states))
        event = draw(_events)
        actions = draw(st.lists(_simple_actions, max_size=2))
        doing = f" do {', '.join(actions)}" if actions else ""
        transitions.append((frm, f"    on {event} -> {to}{doing};"))
    body = []
    for s in states:
        body.append(f"  state {s} {{")
        body.extend(line for frm, line in transitions if frm == s)
        body.append("  }")
    return "statechart generated {\n  initial %s;\n%s\n}\n" % (states[0], "\n".join(body))


@given(_specs())
def test_generated_specs_round_trip(text):
    spec = parse(text)
    assert parse(format_statechart(spec)) == spec
