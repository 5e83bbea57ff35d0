"""Small hand-checkable models shared by several test modules."""

from __future__ import annotations

from ebdevs import INF, SELF, Atomic, ClassicAtomic, Coupled, EBCoupled, classic_lift


# ---------------------------------------------------------------------------
# Classic pipeline: generator -> processor -> sink

class Generator(ClassicAtomic):
    """Emits job k+1 every ``period``; the state counts emitted jobs."""

    def __init__(self, period=2.0):
        super().__init__(0, "gen")
        self.period = period

    def ta(self, s):
        return self.period

    def output(self, s):
        return s + 1

    def delta_int(self, s):
        return s + 1


class Processor(ClassicAtomic):
    """Serves one job for ``service`` time units and drops jobs arriving while busy."""

    def __init__(self, service=3.0):
        super().__init__(("idle", None, INF), "proc")
        self.service = service

    def ta(self, s):
        return s[2]

    def output(self, s):
        return f"done{s[1]}"

    def delta_int(self, s):
        return ("idle", None, INF)

    def delta_ext(self, s, e, x):
        if s[0] == "idle":
            return ("busy", x, self.service)
        return ("busy", s[1], s[2] - e)


class Sink(ClassicAtomic):
    def __init__(self):
        super().__init__((), "sink")

    def delta_ext(self, s, e, x):
        return s + (x,)


def pipeline():
    comps = {"gen": classic_lift(Generator()), "proc": classic_lift(Processor()),
             "sink": classic_lift(Sink())}
    return Coupled(comps, {"proc": ["gen"], "sink": ["proc"], SELF: ["sink"]}, name="top")


def pipeline_classic():
    return {"gen": Generator(), "proc": Processor(), "sink": Sink()}, {"proc": ["gen"], "sink": ["proc"]}


IDLE = "('idle', None, inf)"

# Event calendar worked out by hand for t <= 10: jobs arrive every 2 time
# units, service takes 3, so jobs 2 and 4 are dropped.
PIPELINE_CALENDAR = [
    (0.0, "top/gen", "init", "0", "", "", ""),
    (0.0, "top/proc", "init", IDLE, "", "", ""),
    (0.0, "top/sink", "init", "()", "", "", ""),
    (2.0, "top/gen", "output", "", "1", "", ""),
    (2.0, "top/gen", "internal", "1", "", "", ""),
    (2.0, "top/proc", "external", "('busy', 1, 3.0)", "", "", ""),
    (4.0, "top/gen", "output", "", "2", "", ""),
    (4.0, "top/gen", "internal", "2", "", "", ""),
    (4.0, "top/proc", "external", "('busy', 1, 1.0)", "", "", ""),
    (5.0, "top/proc", "output", "", "done1", "", ""),
    (5.0, "top/proc", "internal", IDLE, "", "", ""),
    (5.0, "top/sink", "external", "('done1',)", "", "", ""),
    (6.0, "top/gen", "output", "", "3", "", ""),
    (6.0, "top/gen", "internal", "3", "", "", ""),
    (6.0, "top/proc", "external", "('busy', 3, 3.0)", "", "", ""),
    (8.0, "top/gen", "output", "", "4", "", ""),
    (8.0, "top/gen", "internal", "4", "", "", ""),
    (8.0, "top/proc", "external", "('busy', 3, 1.0)", "", "", ""),
    (9.0, "top/proc", "output", "", "done3", "", ""),
    (9.0, "top/proc", "internal", IDLE, "", "", ""),
    (9.0, "top/sink", "external", "('done1', 'done3')", "", "", ""),
    (10.0, "top/gen", "output", "", "5", "", ""),
    (10.0, "top/gen", "internal", "5", "", "", ""),
    (10.0, "top/proc", "external", "('busy', 5, 3.0)", "", "", ""),
]


# ---------------------------------------------------------------------------
# Zero-time ping-pong (illegitimate model)

class Bouncer(ClassicAtomic):
    """Fires immediately whenever it holds the ball."""

    def __init__(self, name, has_ball):
        super().__init__(has_ball, name)

    def ta(self, s):
        return 0.0 if s else INF

    def output(self, s):
        return "ball"

    def delta_int(self, s):
        return False

    def delta_ext(self, s, e, x):
        return True


def ping_pong():
    comps = {"a": classic_lift(Bouncer("a", True)), "b": classic_lift(Bouncer("b", False))}
    return Coupled(comps, {"a": ["b"], "b": ["a"]}, name="pingpong")


# ---------------------------------------------------------------------------
# EB-DEVS counter: ticking agents reporting to a global tally

class Ticker(Atomic):
    """Ticks every ``period``; reports its tick count upwards and records the
    macro value seen at each tick."""

    def __init__(self, period, name=None):
        super().__init__((0, None), name)
        self.period = period

    def ta(self, s):
        return self.period

    def delta_int(self, s, macro):
        n = s[0] + 1
        return (n, macro), n


class Tally(EBCoupled):
    """Global state: total ticks and last elapsed time passed to the global transition."""

    def global_transition(self, s_G, e_G, bag, s_Gmacro):
        total, _, seen = s_G
        return (total + len(bag), e_G, seen + (tuple(bag),)), None

    def v_down(self, s_G):
        return s_G[0]


def tally(periods=(1.0, 1.5, 2.5)):
    comps = {f"t{k}": Ticker(p, f"t{k}") for k, p in enumerate(periods)}
    return Tally(comps, {}, initial_global=(0, 0.0, ()), name="tally")
