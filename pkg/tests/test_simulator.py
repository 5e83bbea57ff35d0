import io

import pytest

from ebdevs import (INF, SELF, Atomic, Coupled, EBCoupled, GridSampler, LegitimacyError,
                    LegitimacyGuard, RootCoordinator, SynchronizationError, Trace, simulate)
from ebdevs.simulator import Simulator

from fixtures import PIPELINE_CALENDAR, pipeline, pipeline_classic, ping_pong, tally
from oracles import classic_calendar


def test_pipeline_matches_hand_calendar():
    trace = simulate(pipeline(), 10.0)
    assert [tuple(r) for r in trace] == PIPELINE_CALENDAR


def test_pipeline_matches_reference_calendar():
    atomics, infl = pipeline_classic()
    expected = [(t, d, k, repr(s) if isinstance(s, float) else str(s))
                for t, d, k, s in classic_calendar(atomics, infl, 40.0)]
    trace = simulate(pipeline(), 40.0)
    got = [(r.time, r.path.split("/")[1], r.kind, r.state) for r in trace
           if r.kind in ("internal", "external")]
    assert got == expected


def test_ping_pong_aborts_at_budget():
    root = RootCoordinator(ping_pong(), guard=LegitimacyGuard(50))
    with pytest.raises(LegitimacyError) as info:
        root.run_until(1.0)
    assert info.value.count == 50
    assert root.cycles == 50
    assert info.value.time == 0.0
    assert info.value.path.startswith("pingpong/")


def test_guard_resets_when_time_advances():
    guard = LegitimacyGuard(2)
    for t in (0.0, 0.0, 1.0, 1.0, 2.0):
        guard.check(t, lambda: "x")
    with pytest.raises(LegitimacyError):
        guard.check(2.0, lambda: "x")
        guard.check(2.0, lambda: "x")


def test_macro_view_is_global_state_before_cycle_and_e_G():
    trace = Trace()
    root = RootCoordinator(tally((1.0, 1.5, 2.5)), recorder=trace)
    root.run_until(3.0)
    g = [r for r in trace if r.kind == "global"]
    # ticks: t0@1, t1@1.5, t0@2, t0@2.5(no), t2@2.5, t0@3, t1@3
    times = [r.time for r in g]
    assert times == [1.0, 1.5, 2.0, 2.5, 3.0, 3.0]
    coord = root.child
    total, e_G, seen = coord.s_G
    assert total == 6
    assert e_G == 0.0  # two cycles at t=3
    internal = [(r.time, r.path, r.state) for r in trace if r.kind == "internal"]
    assert internal[0] == (1.0, "tally/t0", "(1, 0)")
    assert internal[1] == (1.5, "tally/t1", "(1, 1)")
    assert internal[-1] == (3.0, "tally/t1", "(2, 5)")


def test_elapsed_global_time_is_since_last_global_transition():
    root = RootCoordinator(tally((1.0, 1.5, 2.5)))
    seen_e = []
    spec = root.child.spec
    orig = spec.global_transition

    def spy(s_G, e_G, bag, macro):
        seen_e.append(e_G)
        return orig(s_G, e_G, bag, macro)

    spec.global_transition = spy
    root.run_until(3.0)
    assert seen_e == [1.0, 0.5, 0.5, 0.5, 0.5, 0.0]


class Pinger(Atomic):
    def __init__(self):
        super().__init__(0, "pinger")

    def ta(self, s):
        return 1.0

    def output(self, s):
        return s

    def delta_int(self, s, macro):
        return s + 1, "tick"


class Echo(Atomic):
    def __init__(self):
        super().__init__((), "echo")

    def delta_ext(self, s, e, x, macro):
        return s + ((x, macro),), "heard"


class Counter(EBCoupled):
    def global_transition(self, s_G, e_G, bag, s_Gmacro):
        return s_G + len(bag), None

    def v_down(self, s_G):
        return s_G


def test_one_view_per_cycle_and_bag_collects_all_upward_messages():
    model = Counter({"a": Pinger(), "b": Echo()}, {"b": ["a"]}, initial_global=0, name="c")
    log = []
    root = RootCoordinator(model, messages=log)
    root.run_until(3.0)
    assert root.child.s_G == 6  # two upward messages per cycle
    # b saw the same view as a in each cycle: the count before that cycle
    assert root.child.children[1].s == ((0, 0), (1, 2), (2, 4))
    stars = [m for p, m in log if p == "c/a" and m.tag == "star"]
    xs = [m for p, m in log if p == "c/b" and m.tag == "x"]
    assert [m.macro_view for m in stars] == [m.macro_view for m in xs] == [0, 2, 4]


def test_global_transition_skipped_on_empty_bag_unless_requested():
    class Quiet(Atomic):
        def ta(self, s):
            return 1.0

    class G(EBCoupled):
        def global_transition(self, s_G, e_G, bag, s_Gmacro):
            return s_G + 1, None

    m = G({"q": Quiet(0, "q")}, initial_global=0)
    r = RootCoordinator(m)
    r.run_until(5.0)
    assert r.child.s_G == 0
    r = RootCoordinator(G({"q": Quiet(0, "q")}, initial_global=0), global_on_empty=True)
    r.run_until(5.0)
    assert r.child.s_G == 5


def test_input_path_defers_global_transition():
    class In(Atomic):
        def delta_ext(self, s, e, x, macro):
            return s + 1, "got"

    class G(EBCoupled):
        def global_transition(self, s_G, e_G, bag, s_Gmacro):
            return s_G + len(bag), None

    inner = G({"i": In(0, "i")}, {"i": [SELF]}, initial_global=0, name="inner")
    top = Coupled({"p": Pinger(), "inner": inner}, {"inner": ["p"]}, name="top")
    r = RootCoordinator(top)
    r.run_until(3.0)
    assert r.child.children[0].s_G == 0
    assert len(r.child.children[0].pending) == 3
    inner2 = G({"i": In(0, "i")}, {"i": [SELF]}, initial_global=0, name="inner")
    top2 = Coupled({"p": Pinger(), "inner": inner2}, {"inner": ["p"]}, name="top")
    r = RootCoordinator(top2, global_on_input=True)
    r.run_until(3.0)
    assert r.child.children[0].s_G == 3


def test_nested_output_reaches_top_level():
    inner = Coupled({"p": Pinger()}, {SELF: ["p"]}, name="inner")
    top = Coupled({"inner": inner}, {SELF: ["inner"]}, name="top")
    trace = simulate(top, 2.0)
    outs = [(r.time, r.output) for r in trace if r.kind == "output" and r.path == "top"]
    assert outs == [(1.0, "0"), (2.0, "1")]


def test_runs_start_from_fresh_global_state():
    model = tally()
    a = simulate(model, 5.0)
    b = simulate(model, 5.0)
    assert [tuple(r) for r in a] == [tuple(r) for r in b]


def test_simulator_rejects_out_of_sync_messages():
    sim = Simulator(Pinger(), "p")
    sim.init(0.0)
    with pytest.raises(SynchronizationError):
        sim.star(0.5, None)
    with pytest.raises(SynchronizationError):
        sim.x("v", 2.0, None)


def test_negative_time_advance_is_rejected():
    class Neg(Atomic):
        def ta(self, s):
            return -1.0

    with pytest.raises(ValueError):
        RootCoordinator(Coupled({"n": Neg(0, "n")}))


def test_passive_model_ends_immediately():
    r = RootCoordinator(Coupled({"n": Atomic(0, "n")}))
    assert r.tn == INF
    r.run_until(100.0)
    assert r.cycles == 0


def test_grid_sampler_zero_order_hold():
    r = RootCoordinator(tally((1.0,)))
    s = GridSampler(0.5, lambda root: root.child.s_G[0])
    r.run_until(2.0, s)
    # the state at a grid point includes every event at or before it
    assert s.rows == [(0.0, 0), (0.5, 0), (1.0, 1), (1.5, 1), (2.0, 2)]
    with pytest.raises(ValueError):
        GridSampler(0.0, lambda r: None)


def test_trace_csv(tmp_path):
    trace = simulate(pipeline(), 4.0)
    text = trace.to_csv(["seed=1"])
    lines = text.split("\n")
    assert lines[0] == "# seed=1"
    assert lines[1] == "time,model_path,kind,state,output,y_up,s_G"
    assert lines[2] == "0.0,top/gen,init,0,,,"
    assert "\r" not in text
    path = tmp_path / "t.csv"
    trace.save(path, ["seed=1"])
    assert path.read_text() == text
    buf = io.StringIO()
    trace.write_csv(buf)
    assert buf.getvalue() == text.split("\n", 1)[1]
