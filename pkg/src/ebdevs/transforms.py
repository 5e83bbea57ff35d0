"""Spec-to-spec transformations and trace comparison.

* :func:`flatten` builds one atomic model that behaves like a coupled model
  (closure under coupling), including its global state.
* :func:`lower_to_classic` builds a Classic DEVS coupled model in which every
  child keeps a private replica of the global state, kept in sync through a
  fully connected broadcast mesh.
* :func:`trace_equivalent` compares two traces under an observation
  projection and reports the first divergence.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple

from .core import BROADCAST_IN, BROADCAST_OUT, INF, SELF, PortValue
from .model import Atomic, Coupled, ensure_valid, format_value
from .simulator import LegitimacyGuard, Trace, TraceRecord


# ---------------------------------------------------------------------------
# Flattening

class FlattenedState(NamedTuple):
    """Composite state of a flattened coupled model.

    ``children`` holds ``(s_d, tl_d)`` per child in select order, where
    ``tl_d`` is the child's last transition time on the composite ``clock``;
    the elapsed time of child d is ``clock - tl_d``.  ``pending`` holds upward
    messages received on the input path that still wait for the global
    transition.  ``events`` and ``global_ran`` describe the step that produced
    this state and exist for trace projection only.
    """

    children: tuple
    tn: tuple
    clock: float
    s_G: Any
    tl_G: float
    pending: tuple
    events: tuple
    global_ran: bool

    def elapsed(self, k: int) -> float:
        return self.clock - self.children[k][1]


class FlattenedAtomic(Atomic):
    """Atomic model equivalent to a coupled model.

    ``ta`` is the least remaining time over the children; an internal
    transition runs the imminent child (lowest select key among ties), feeds
    its output to the influenced children, then applies the global transition
    once over the collected upward messages.  Nested coupled children are
    flattened first.
    """

    def __init__(self, coupled: Coupled, global_on_empty=False, global_on_input=False):
        ensure_valid(coupled)
        super().__init__(None, coupled.name)
        self.coupled = coupled
        self.global_on_empty = global_on_empty
        self.global_on_input = global_on_input
        self.ids = sorted(coupled.components, key=coupled.select)
        self.rank = {d: k for k, d in enumerate(self.ids)}
        self.specs = [
            flatten(c, global_on_empty, global_on_input) if isinstance(c, Coupled) else c
            for c in (coupled.components[d] for d in self.ids)
        ]
        self.routes = {
            src: tuple((self.rank[r], r) for r in coupled.receivers(src))
            for src in list(self.ids) + [SELF]
        }

    def reset(self):
        for spec in self.specs:
            spec.reset()
        children = tuple((spec.initial_state, 0.0) for spec in self.specs)
        tn = tuple(spec.ta(s) for spec, (s, _) in zip(self.specs, children))
        self.initial_state = FlattenedState(
            children, tn, 0.0, copy.deepcopy(self.coupled.initial_global), 0.0, (), (), False
        )

    def ta(self, S: FlattenedState):
        if not S.tn:
            return INF
        return min(S.tn) - S.clock

    def _imminent(self, S):
        tmin = min(S.tn)
        return S.tn.index(tmin)

    def output(self, S):
        if not S.tn or min(S.tn) == INF:
            return None
        k = self._imminent(S)
        d = self.ids[k]
        if not self.coupled.feeds_output(d):
            return None
        y = self.specs[k].output(S.children[k][0])
        if y is None:
            return None
        return self.coupled.translate(d, SELF, y)

    def _deliver(self, src, value, clock, children, tn, view, bag, events):
        coupled = self.coupled
        for kr, r in self.routes[src]:
            xr = coupled.translate(src, r, value)
            if xr is None:
                continue
            spec = self.specs[kr]
            s_r, tl_r = children[kr]
            s_r, yu = spec.delta_ext(s_r, clock - tl_r, xr, view)
            children[kr] = (s_r, clock)
            tn[kr] = clock + spec.ta(s_r)
            events.append((r, "external", spec.format_state(s_r)))
            if yu is not None:
                bag.append((kr, r, yu))

    def _finish(self, S, clock, children, tn, bag, events, macro, run_global):
        coupled = self.coupled
        s_G, tl_G = S.s_G, S.tl_G
        y_Gup = None
        ran = False
        if not coupled.has_global:
            bag = []
        elif run_global and (bag or self.global_on_empty):
            bag.sort(key=lambda item: item[0])
            pairs = [(d, payload) for _, d, payload in bag]
            s_G, y_Gup = coupled.global_transition(s_G, clock - tl_G, pairs, macro)
            tl_G = clock
            bag = []
            ran = True
        new = FlattenedState(tuple(children), tuple(tn), clock, s_G, tl_G, tuple(bag),
                             tuple(events), ran)
        return new, y_Gup

    def delta_int(self, S, macro):
        coupled = self.coupled
        k = self._imminent(S)
        d = self.ids[k]
        spec = self.specs[k]
        clock = S.clock + (S.tn[k] - S.clock)
        view = coupled.v_down(S.s_G) if coupled.has_global else None
        children = list(S.children)
        tn = list(S.tn)
        s_k = children[k][0]
        y = spec.output(s_k)
        s_k, yu = spec.delta_int(s_k, view)
        children[k] = (s_k, clock)
        tn[k] = clock + spec.ta(s_k)
        events = [(d, "internal", spec.format_state(s_k))]
        bag = list(S.pending)
        if yu is not None:
            bag.append((k, d, yu))
        if y is not None:
            self._deliver(d, y, clock, children, tn, view, bag, events)
        return self._finish(S, clock, children, tn, bag, events, macro, True)

    def delta_ext(self, S, e, x, macro):
        coupled = self.coupled
        clock = S.clock + e
        view = coupled.v_down(S.s_G) if coupled.has_global else None
        children = list(S.children)
        tn = list(S.tn)
        bag = list(S.pending)
        events = []
        self._deliver(SELF, x, clock, children, tn, view, bag, events)
        return self._finish(S, clock, children, tn, bag, events, macro, self.global_on_input)

    def format_state(self, S):
        g = self.coupled.format_global(S.s_G) if S.global_ran else None
        return ("flat", S.events, g)

    def format_output(self, y):
        return self.coupled.format_output(y)


def flatten(coupled: Coupled, global_on_empty=False, global_on_input=False) -> FlattenedAtomic:
    """Atomic model behaviourally equivalent to ``coupled``.

    The two option flags must match the kernel options the hierarchical model
    is run with for the traces to coincide.
    """
    return FlattenedAtomic(coupled, global_on_empty, global_on_input)


# ---------------------------------------------------------------------------
# Lowering to Classic DEVS

class LoweredState(NamedTuple):
    """State of one child of a lowered model.

    ``y_up`` is the tuple of upward messages not yet broadcast, ``s`` the
    original child state, ``s_macro`` the local replica of the global state.
    ``sigma`` is the remaining time advance of ``s``; ``since_macro`` and
    ``since_inner`` are the times since the replica and ``s`` last changed.
    ``phase`` names the transition that produced this state.
    """

    y_up: tuple
    s: Any
    s_macro: Any
    broadcast: int
    sigma: float
    since_macro: float
    since_inner: float
    phase: str


class LoweredAtomic(Atomic):
    """Child wrapper used by :func:`lower_to_classic`."""

    def __init__(self, inner: Atomic, ident, coupled: Coupled):
        super().__init__(None, getattr(inner, "name", None))
        self.inner = inner
        self.ident = ident
        self.coupled = coupled

    def reset(self):
        self.inner.reset()
        s = self.inner.initial_state
        replica = copy.deepcopy(self.coupled.initial_global)
        self.initial_state = LoweredState((), s, replica, 0, self.inner.ta(s), 0.0, 0.0, "init")

    def _view(self, S):
        c = self.coupled
        return c.v_down(S.s_macro) if c.has_global else None

    def _replica(self, S, e_G, senders):
        c = self.coupled
        if not c.has_global:
            return S.s_macro
        bag = [(sender, y) for sender, ys in senders for y in ys]
        s_macro, _ = c.global_transition(S.s_macro, e_G, bag, None)
        return s_macro

    def ta(self, S):
        return 0.0 if S.broadcast else S.sigma

    def output(self, S):
        if S.broadcast:
            return PortValue(BROADCAST_OUT, (self.ident, S.y_up))
        return self.inner.output(S.s)

    def delta_int(self, S, macro):
        if S.broadcast:
            replica = self._replica(S, S.since_macro, [(self.ident, S.y_up)])
            return S._replace(y_up=(), s_macro=replica, broadcast=0, since_macro=0.0,
                              phase="broadcast"), None
        s, yu = self.inner.delta_int(S.s, self._view(S))
        pending = S.y_up + ((yu,) if yu is not None else ())
        return LoweredState(pending, s, S.s_macro, 1 if pending else 0, self.inner.ta(s),
                            S.since_macro + S.sigma, 0.0, "internal"), None

    def delta_ext(self, S, e, x, macro):
        if isinstance(x, PortValue) and x.port == BROADCAST_IN:
            replica = self._replica(S, S.since_macro + e, [x.value])
            return S._replace(s_macro=replica, sigma=S.sigma - e, since_macro=0.0,
                              since_inner=S.since_inner + e, phase="macro"), None
        s, yu = self.inner.delta_ext(S.s, S.since_inner + e, x, self._view(S))
        pending = S.y_up + ((yu,) if yu is not None else ())
        return LoweredState(pending, s, S.s_macro, 1 if pending else 0, self.inner.ta(s),
                            S.since_macro + e, 0.0, "external"), None

    def format_state(self, S):
        return ("lowered", S.phase, self.inner.format_state(S.s),
                self.coupled.format_global(S.s_macro))

    def format_output(self, y):
        if isinstance(y, PortValue):
            return str(y.value)
        return self.inner.format_output(y)


class LoweredCoupled(Coupled):
    """Classic coupled model: original couplings plus a full broadcast mesh."""

    def __init__(self, original: Coupled):
        comps = {d: LoweredAtomic(c, d, original) for d, c in original.components.items()}
        infl = {j: set(srcs) for j, srcs in original.influencers.items()}
        for j in comps:
            infl.setdefault(j, set()).update(i for i in comps if i != j)
        super().__init__(
            comps,
            {j: sorted(srcs, key=lambda i: (i == SELF, original.select(i) if i != SELF else 0))
             for j, srcs in infl.items()},
            select=original.select,
            initial_global=None,
            name=original.name,
        )
        self.original = original
        self._original_edges = {
            (i, j) for j, srcs in original.influencers.items() for i in srcs
        }

    def translate(self, src, dst, value):
        if isinstance(value, PortValue) and value.port == BROADCAST_OUT:
            if src == SELF or dst == SELF:
                return None
            return PortValue(BROADCAST_IN, value.value)
        if (src, dst) not in self._original_edges:
            return None
        return self.original.translate(src, dst, value)

    def format_output(self, y):
        return self.original.format_output(y)


def lower_to_classic(coupled: Coupled) -> LoweredCoupled:
    """Classic DEVS coupled model bisimilar to the root model ``coupled``.

    Only flat models are accepted: flatten coupled components first.  The
    replicas call the global transition with a null parent view, so any
    upward message the global transition would produce is discarded, as it
    is for a root model.
    """
    ensure_valid(coupled)
    nested = [d for d, c in coupled.components.items() if isinstance(c, Coupled)]
    if nested:
        raise ValueError(
            f"lower_to_classic needs atomic children; flatten components {nested!r} first"
        )
    return LoweredCoupled(coupled)


# ---------------------------------------------------------------------------
# Legitimacy

def legitimacy_guard(budget: int) -> LegitimacyGuard:
    """Kernel hook aborting a run after ``budget`` cycles at one instant."""
    return LegitimacyGuard(budget)


# ---------------------------------------------------------------------------
# Trace equivalence

def identity_projection(trace) -> list:
    return [(r.time, (r.path, r.kind, r.state, r.output, r.y_up, r.s_G)) for r in trace]


def _relative(path: str) -> str:
    head, sep, rest = path.partition("/")
    return rest if sep else ""


def _expand_flat(time, prefix, state, out, include_global):
    _, events, g = state
    for cid, kind, st in events:
        if isinstance(st, tuple) and st and st[0] == "flat":
            _expand_flat(time, f"{prefix}{cid}/", st, out, include_global)
        else:
            out.append((time, ("X", f"{prefix}{cid}", kind, st)))
    if g is not None and include_global:
        out.append((time, ("G", prefix.rstrip("/"), g)))


def observation_projection(trace, include_global=True) -> list:
    """Map a trace to comparable observations.

    Leaf transitions become ``("X", leaf, kind, state)``, global transitions
    ``("G", coupled, s_G)`` and top-level outputs ``("Y", output)``.
    Flattened composite states are expanded into the leaf transitions they
    contain, and the broadcast bookkeeping steps of lowered models are
    dropped.  Initial records and inner outputs are skipped.  Outputs form a
    separate stream appended at the end, since a composite model emits its
    output before the transitions of the same step are recorded.
    """
    out = []
    outputs = []
    for r in trace:
        kind = r.kind
        if kind == "init":
            continue
        rel = _relative(r.path)
        if kind == "output":
            if "/" not in r.path and r.output not in ("", None):
                outputs.append((r.time, ("Y", r.output)))
            continue
        if kind == "global":
            if include_global:
                out.append((r.time, ("G", rel, r.s_G)))
            continue
        st = r.state
        if isinstance(st, tuple) and st and st[0] == "flat":
            prefix = f"{rel}/" if rel else ""
            _expand_flat(r.time, prefix, st, out, include_global)
        elif isinstance(st, tuple) and st and st[0] == "lowered":
            if st[1] in ("internal", "external"):
                out.append((r.time, ("X", rel, st[1], st[2])))
        else:
            out.append((r.time, ("X", rel, kind, st)))
    return out + outputs


def state_projection(trace) -> list:
    """Observation projection without global-state records."""
    return observation_projection(trace, include_global=False)


@dataclass(frozen=True)
class Equivalence:
    equivalent: bool
    index: int | None = None
    left: Any = None
    right: Any = None
    compared: int = 0

    def __bool__(self):
        return self.equivalent

    def describe(self) -> str:
        if self.equivalent:
            return f"equivalent over {self.compared} observations"
        return f"diverge at observation {self.index}: {self.left!r} != {self.right!r}"


def _same(a, b, rel):
    if isinstance(a, float) and isinstance(b, float):
        return a == b or math.isclose(a, b, rel_tol=rel, abs_tol=rel)
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_same(x, y, rel) for x, y in zip(a, b))
    return a == b


def trace_equivalent(a, b, projection: Callable = identity_projection,
                     time_tol: float = 1e-9) -> Equivalence:
    """Compare two traces observation by observation.

    Observations must match exactly except event times, which may differ by
    ``time_tol`` relative error (composite models sum elapsed times in a
    different order than the hierarchical kernel).
    """
    pa, pb = projection(a), projection(b)
    for i, (x, y) in enumerate(zip(pa, pb)):
        if not (_same(x[0], y[0], time_tol) and _same(x[1], y[1], 0.0)):
            return Equivalence(False, i, x, y, i)
    if len(pa) != len(pb):
        i = min(len(pa), len(pb))
        return Equivalence(False, i, pa[i] if i < len(pa) else None,
                           pb[i] if i < len(pb) else None, i)
    return Equivalence(True, compared=len(pa))


__all__ = [
    "FlattenedAtomic", "FlattenedState", "flatten",
    "LoweredAtomic", "LoweredCoupled", "LoweredState", "lower_to_classic",
    "legitimacy_guard", "identity_projection", "observation_projection",
    "state_projection", "Equivalence", "trace_equivalent", "Trace", "TraceRecord",
]
