from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from farmsim.armor import (
    ArmorAction,
    ArmorContractError,
    ArmorProcess,
    Element,
    ElementMessage,
    ReturnCodePattern,
    execution_monitor_tick,
    heartbeat_monitor_element,
    match_return_codes,
    migration_element,
    recovery_migrate,
    restart_recovery_element,
    return_code_element,
)
from farmsim.engine import Engine


def collector_element(element_id="sink", subscriptions=("ping",), kind="analysis"):
    def handler(state, msg):
        state = (state or ()) + (msg,)
        return state, [], []

    return Element(element_id, kind, frozenset(subscriptions), handler)


# ----------------------------------------------------------------------
# registration, routing, dead letters
# ----------------------------------------------------------------------


def test_registered_element_receives_subscribed_messages():
    armor = ArmorProcess("a", "node")
    sink = collector_element()
    armor.register_element(sink)
    armor.enqueue(ElementMessage("ping", "x", 0.0))
    armor.drain()
    assert len(sink.state) == 1 and sink.state[0].msg_type == "ping"


def test_duplicate_element_id_rejected():
    armor = ArmorProcess("a")
    armor.register_element(collector_element())
    with pytest.raises(ValueError):
        armor.register_element(collector_element())


def test_unsubscribed_messages_dead_letter():
    armor = ArmorProcess("a")
    armor.register_element(collector_element(subscriptions=("other",)))
    armor.enqueue(ElementMessage("ping", "x", 0.0))
    armor.drain()
    assert armor.dead_letters == 1


def test_unregister_orphans_future_messages():
    armor = ArmorProcess("a")
    armor.register_element(collector_element())
    armor.enqueue(ElementMessage("ping", "x", 0.0))
    armor.drain()
    before = armor.dead_letters
    armor.unregister_element("sink")
    armor.enqueue(ElementMessage("ping", "x", 1.0))
    armor.drain()
    assert armor.dead_letters == before + 1


def test_fanout_in_registration_order():
    armor = ArmorProcess("a")
    order = []

    def make(name):
        def handler(state, msg):
            order.append(name)
            return state, [], []

        return Element(name, "analysis", frozenset({"ping"}), handler)

    armor.register_element(make("first"))
    armor.register_element(make("second"))
    armor.enqueue(ElementMessage("ping", "x", 0.0))
    armor.drain()
    assert order == ["first", "second"]


def test_message_conservation_enqueued_equals_handled_plus_dead():
    armor = ArmorProcess("a")
    armor.register_element(collector_element())
    for i in range(10):
        armor.enqueue(ElementMessage("ping" if i % 2 else "junk", "x", float(i)))
    armor.drain()
    assert armor.enqueued == armor.handled + armor.dead_letters == 10


def test_non_recovery_element_emitting_actions_is_a_contract_error():
    def bad_handler(state, msg):
        return state, [], [ArmorAction("restart", "x")]

    armor = ArmorProcess("a")
    armor.register_element(Element("bad", "detection", frozenset({"ping"}), bad_handler))
    armor.enqueue(ElementMessage("ping", "x", 0.0))
    with pytest.raises(ArmorContractError):
        armor.drain()


def test_identical_mailbox_sequences_yield_identical_action_logs():
    def build():
        armor = ArmorProcess("a", "global")
        armor.register_element(heartbeat_monitor_element(["app"], miss_threshold=2))
        armor.register_element(restart_recovery_element())
        return armor

    script = [(False,), (False,), (True,), (False,), (False,)]
    logs = []
    for _ in range(2):
        armor = build()
        for i, (seen,) in enumerate(script):
            execution_monitor_tick(armor, {"app": seen}, float(i))
        logs.append(armor.action_log)
    assert logs[0] == logs[1]


# ----------------------------------------------------------------------
# api_report
# ----------------------------------------------------------------------


def test_api_report_routes_to_analysis_element():
    armor = ArmorProcess("a")
    sink = collector_element(subscriptions=("quality_rates",))
    armor.register_element(sink)
    assert armor.api_report("trigger-app", {"type": "quality_rates", "l2": 0.1}, 1.0)
    armor.drain()
    assert sink.state[0].body == {"l2": 0.1}


def test_malformed_report_dead_letters():
    armor = ArmorProcess("a")
    armor.register_element(collector_element())
    assert not armor.api_report("app", {"no_type": 1}, 0.0)
    assert armor.dead_letters == 1


def test_burst_of_reports_delivered_fifo():
    armor = ArmorProcess("a")
    seen = []
    armor.register_element(
        Element(
            "order",
            "analysis",
            frozenset({"error_info"}),
            lambda state, msg: (seen.append(msg.body["i"]) or state, [], []),
        )
    )
    for i in range(100):
        armor.api_report("app", {"type": "error_info", "i": i}, float(i))
    armor.drain()
    assert seen == list(range(100))


# ----------------------------------------------------------------------
# heartbeat execution monitoring
# ----------------------------------------------------------------------


def monitored_armor(miss_threshold=3, max_restarts=3):
    armor = ArmorProcess("exec", "node")
    armor.register_element(heartbeat_monitor_element(["app"], miss_threshold))
    armor.register_element(restart_recovery_element(max_restarts))
    return armor


def test_healthy_heartbeats_produce_no_actions():
    armor = monitored_armor()
    for i in range(5):
        assert execution_monitor_tick(armor, {"app": True}, float(i)) == []


def test_three_consecutive_misses_trigger_restart():
    armor = monitored_armor(miss_threshold=3)
    actions = []
    for i in range(3):
        actions += execution_monitor_tick(armor, {"app": False}, float(i))
    assert actions == [ArmorAction("restart", "app")]


def test_restart_then_resumed_heartbeats_stop_restarting():
    # Scripted trace oracle: miss, miss, miss (restart), beat, then healthy
    # forever; exactly one restart in the whole log.
    armor = monitored_armor(miss_threshold=3)
    script = [False, False, False, True, True, True, True]
    actions = []
    for i, seen in enumerate(script):
        actions += execution_monitor_tick(armor, {"app": seen}, float(i))
    restarts = [a for a in actions if a.name == "restart"]
    assert len(restarts) == 1


def test_restart_budget_exhaustion_raises_alarm_once():
    armor = monitored_armor(miss_threshold=2, max_restarts=2)
    actions = []
    for i in range(8):
        actions += execution_monitor_tick(armor, {"app": False}, float(i))
    assert [a.name for a in actions] == ["restart", "restart", "alarm"]


# ----------------------------------------------------------------------
# return-code patterns
# ----------------------------------------------------------------------


def test_no_match_returns_none():
    patterns = [ReturnCodePattern((2, 2), "restart")]
    assert match_return_codes([0, 0, 0], patterns) is None


def test_suffix_match_returns_action():
    patterns = [ReturnCodePattern((2, 2), "restart")]
    assert match_return_codes([0, 2, 2], patterns) == "restart"


def test_longest_suffix_wins():
    patterns = [
        ReturnCodePattern((2, 2), "restart"),
        ReturnCodePattern((1, 2, 2), "migrate"),
    ]
    assert match_return_codes([1, 2, 2], patterns) == "migrate"


def test_exhaustive_small_alphabet_matches_brute_force_oracle():
    patterns = [
        ReturnCodePattern((2, 2), "restart"),
        ReturnCodePattern((1, 2, 2), "migrate"),
        ReturnCodePattern((0,), "log"),
    ]

    def oracle(history):
        best, best_len = None, 0
        for p in patterns:
            k = len(p.pattern)
            if k <= len(history) and tuple(history[-k:]) == p.pattern and k > best_len:
                best, best_len = p.action, k
        return best

    for length in range(0, 5):
        for history in itertools.product((0, 1, 2), repeat=length):
            assert match_return_codes(list(history), patterns) == oracle(history)


def test_empty_pattern_rejected():
    with pytest.raises(ValueError):
        ReturnCodePattern((), "restart")


def test_return_code_element_emits_recovery_request():
    armor = ArmorProcess("a")
    armor.register_element(return_code_element([ReturnCodePattern((2, 2), "restart")]))
    armor.register_element(restart_recovery_element())
    for code in (0, 2, 2):
        armor.enqueue(ElementMessage("return_code", "app", 0.0, {"code": code}))
    actions = armor.drain()
    assert actions == [ArmorAction("restart", "app")]


# ----------------------------------------------------------------------
# migration
# ----------------------------------------------------------------------


def test_equal_loads_no_migration():
    assert recovery_migrate({"n1": 5.0, "n2": 5.0}, rho=2.0) == []


def test_imbalanced_loads_migrate_max_to_min():
    actions = recovery_migrate({"n1": 10.0, "n2": 2.0}, rho=2.0)
    assert actions == [ArmorAction("migrate", "n1", {"to": "n2", "amount": 1.0})]


def test_single_reporter_never_migrates():
    assert recovery_migrate({"n1": 100.0}, rho=2.0) == []


@given(
    st.dictionaries(
        st.sampled_from(["n1", "n2", "n3", "n4"]),
        st.integers(min_value=0, max_value=40),
        min_size=2,
        max_size=4,
    )
)
def test_repeated_migration_reaches_balance_within_bounded_steps(loads):
    # Fixed-point iteration: apply each migration to the load vector; the
    # process must stop within total-load steps, at which point either the
    # ratio is within rho or the gap is already one indivisible unit.
    rho = 2.0
    loads = dict(loads)
    total = sum(loads.values())
    for _ in range(total + 1):
        actions = recovery_migrate(loads, rho)
        if not actions:
            break
        act = actions[0]
        loads[act.target] -= act.args["amount"]
        loads[act.args["to"]] += act.args["amount"]
    else:
        pytest.fail(f"did not converge: {loads}")
    values = sorted(loads.values())
    gap_is_indivisible = values[-1] - values[0] <= 1.0
    assert gap_is_indivisible or (values[0] > 0 and values[-1] / values[0] <= rho)


def test_migration_element_wraps_rule():
    armor = ArmorProcess("a")
    armor.register_element(migration_element(rho=2.0))
    armor.enqueue(ElementMessage("load_report", "lb", 0.0, {"loads": {"n1": 9.0, "n2": 1.0}}))
    actions = armor.drain()
    assert actions and actions[0].name == "migrate"


# ----------------------------------------------------------------------
# hierarchy over severable control links
# ----------------------------------------------------------------------


def test_node_faults_reach_global_until_link_severed():
    engine = Engine(7)
    global_armor = ArmorProcess("global", "global")
    received = []
    global_armor.register_element(
        Element(
            "fault-sink",
            "analysis",
            frozenset({"node_fault"}),
            lambda state, msg: (received.append(msg) or state, [], []),
        )
    )

    def deliver(ev):
        global_armor.enqueue(ev.payload)
        global_armor.drain()

    engine.register("global", deliver)
    engine.declare_link("node-armor", "global", "control")

    msg = ElementMessage("node_fault", "node-armor", 0.0, {"detail": "disk"})
    assert engine.send(msg, "node-armor", "global", "control", event_kind="armor") == "delivered"
    engine.run_until(0.1)
    assert len(received) == 1

    engine.sever_link("node-armor", "global", "control")
    assert engine.send(msg, "node-armor", "global", "control", event_kind="armor") == "dropped"
    engine.run_until(0.2)
    assert len(received) == 1
    assert engine.links.drop_counts()[("node-armor", "global", "control")] == 1
