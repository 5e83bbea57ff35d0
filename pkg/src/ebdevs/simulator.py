"""Sequential abstract simulator for EB-DEVS hierarchies.

The processor tree mirrors the model tree: a :class:`Simulator` per atomic
model, a :class:`Coordinator` per coupled model and a :class:`RootCoordinator`
driving the clock.  Messages are plain method calls; a call returning is the
*done* message.

Within one star cycle a coordinator forwards the star to its imminent child,
routes the child's output to the influenced children as x-messages, gathers
every upward message produced on the way, and only then runs its global
transition once.  All star and x messages of a cycle carry the macro view
computed from the global state as it was before the cycle.
"""

from __future__ import annotations

import copy
import csv
import heapq
import io
import os
from typing import Any, Callable, NamedTuple

from .core import (
    INF,
    SELF,
    KernelMessage,
    LegitimacyError,
    SynchronizationError,
    check_time,
)
from .model import Atomic, Coupled, ensure_valid


class TraceRecord(NamedTuple):
    time: float
    path: str
    kind: str
    state: Any
    output: Any
    y_up: Any
    s_G: Any


TRACE_COLUMNS = ("time", "model_path", "kind", "state", "output", "y_up", "s_G")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Trace:
    """Full event trace: one record per handled message.

    Values are stored already formatted by the owning model's formatters, so
    later mutation of model objects cannot alter a recorded trace.
    """

    def __init__(self):
        self.records: list[TraceRecord] = []

    def record(self, time, path, kind, state="", output="", y_up="", s_G=""):
        self.records.append(TraceRecord(time, path, kind, state, output, y_up, s_G))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def write_csv(self, fh, header_lines=()):
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow([_cell(v) for v in r])

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        self.write_csv(buf, header_lines)
        return buf.getvalue()

    def save(self, path, header_lines=()):
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            self.write_csv(fh, header_lines)
        os.replace(tmp, path)


class LegitimacyGuard:
    """Abort a run when more than ``budget`` root cycles happen at one instant."""

    def __init__(self, budget: int):
        if budget < 1:
            raise ValueError("legitimacy budget must be >= 1")
        self.budget = int(budget)
        self.time = None
        self.count = 0

    def check(self, t: float, imminent_path: Callable[[], str]):
        if t != self.time:
            self.time = t
            self.count = 0
        if self.count >= self.budget:
            raise LegitimacyError(imminent_path(), t, self.count)
        self.count += 1


class GridSampler:
    """Zero-order-hold snapshots of the run on the grid ``0, dt, 2dt, ...``.

    ``observe(root)`` is called once per grid point with the state reached
    after every event at or before that point.
    """

    def __init__(self, dt: float, observe: Callable[["RootCoordinator"], Any], t0: float = 0.0):
        if not dt > 0:
            raise ValueError("sampling step must be positive")
        self.dt = float(dt)
        self.observe = observe
        self.t0 = t0
        self.k = 0
        self.rows: list[tuple[float, Any]] = []

    def _next(self):
        return self.t0 + self.k * self.dt

    def advance(self, t, root):
        while self._next() < t:
            self.rows.append((self._next(), self.observe(root)))
            self.k += 1

    def finish(self, t_end, root):
        while self._next() <= t_end:
            self.rows.append((self._next(), self.observe(root)))
            self.k += 1


class Simulator:
    __slots__ = ("spec", "path", "s", "tl", "tn", "rec", "log")

    def __init__(self, spec: Atomic, path: str, rec=None, log=None):
        self.spec = spec
        self.path = path
        self.rec = rec
        self.log = log
        self.s = None
        self.tl = 0.0
        self.tn = INF

    def init(self, t):
        self.spec.reset()
        self.s = self.spec.initial_state
        self.tl = t
        self.tn = t + self._ta()
        if self.rec is not None:
            self.rec.record(t, self.path, "init", self.spec.format_state(self.s))

    def _ta(self):
        sigma = self.spec.ta(self.s)
        if sigma < 0:
            raise ValueError(f"{self.path}: negative time advance {sigma!r}")
        return sigma

    def star(self, t, macro):
        if t != self.tn:
            raise SynchronizationError(f"{self.path}: star at t={t!r} but tn={self.tn!r}")
        spec = self.spec
        y = spec.output(self.s)
        rec = self.rec
        if rec is not None:
            rec.record(t, self.path, "output", output=spec.format_output(y))
        if self.log is not None:
            self.log.append((self.path, KernelMessage("star", t, None, macro)))
        self.s, y_up = spec.delta_int(self.s, macro)
        self.tl = t
        self.tn = t + self._ta()
        if rec is not None:
            rec.record(t, self.path, "internal", spec.format_state(self.s),
                       y_up=spec.format_y_up(y_up))
        return y, y_up

    def x(self, x, t, macro):
        if not (self.tl <= t <= self.tn):
            raise SynchronizationError(
                f"{self.path}: x at t={t!r} outside [{self.tl!r}, {self.tn!r}]")
        if self.log is not None:
            self.log.append((self.path, KernelMessage("x", t, x, macro)))
        spec = self.spec
        self.s, y_up = spec.delta_ext(self.s, t - self.tl, x, macro)
        self.tl = t
        self.tn = t + self._ta()
        if self.rec is not None:
            self.rec.record(t, self.path, "external", spec.format_state(self.s),
                            y_up=spec.format_y_up(y_up))
        return y_up

    def imminent_path(self):
        return self.path


class Coordinator:
    """Processor for a coupled model.

    ``global_on_empty``: also run the global transition when a cycle produced
    no upward message.  ``global_on_input``: run the global transition at the
    end of the x-message path too, instead of deferring the collected upward
    messages to the next star cycle.
    """

    def __init__(self, spec: Coupled, path: str, rec=None, log=None,
                 global_on_empty=False, global_on_input=False):
        self.spec = spec
        self.path = path
        self.rec = rec
        self.log = log
        self.global_on_empty = global_on_empty
        self.global_on_input = global_on_input
        order = sorted(spec.components, key=spec.select)
        self.ids = order
        self.rank = {d: k for k, d in enumerate(order)}
        self.children = [
            make_processor(spec.components[d], f"{path}/{d}", rec, log,
                           global_on_empty, global_on_input)
            for d in order
        ]
        self._routes = {}
        self.heap: list = []
        self.pending: list = []
        self.s_G = None
        self.tl = 0.0
        self.tl_G = 0.0
        self.tn = INF

    def _route(self, src):
        r = self._routes.get(src)
        if r is None:
            rank = self.rank
            r = tuple((rank[d], d) for d in self.spec.receivers(src))
            self._routes[src] = r
        return r

    def init(self, t):
        for c in self.children:
            c.init(t)
        self.heap = [(c.tn, k) for k, c in enumerate(self.children) if c.tn != INF]
        heapq.heapify(self.heap)
        self.pending = []
        self.tl = max(c.tl for c in self.children) if self.children else t
        self.tl_G = self.tl
        self.tn = self._peek()
        self.s_G = copy.deepcopy(self.spec.initial_global)
        if self.rec is not None and self.spec.has_global:
            self.rec.record(t, self.path, "init", s_G=self.spec.format_global(self.s_G))

    def _peek(self):
        heap = self.heap
        children = self.children
        while heap:
            tn, k = heap[0]
            if children[k].tn == tn:
                return tn
            heapq.heappop(heap)
        return INF

    def _view(self):
        spec = self.spec
        return spec.v_down(self.s_G) if spec.has_global else None

    def _global(self, t, macro):
        spec = self.spec
        bag = self.pending
        self.pending = []
        if not spec.has_global:
            return None
        if not bag and not self.global_on_empty:
            return None
        bag.sort(key=lambda item: item[0])
        pairs = [(d, payload) for _, d, payload in bag]
        self.s_G, y_Gup = spec.global_transition(self.s_G, t - self.tl_G, pairs, macro)
        self.tl_G = t
        if self.rec is not None:
            self.rec.record(t, self.path, "global", y_up=_cell(y_Gup),
                            s_G=spec.format_global(self.s_G))
        if self.log is not None and y_Gup is not None:
            self.log.append((self.path, KernelMessage("y-up", t, y_Gup)))
        return y_Gup

    def star(self, t, macro):
        if t != self.tn:
            raise SynchronizationError(f"{self.path}: star at t={t!r} but tn={self.tn!r}")
        if self.log is not None:
            self.log.append((self.path, KernelMessage("star", t, None, macro)))
        heap = self.heap
        children = self.children
        k = heapq.heappop(heap)[1]
        child = children[k]
        view = self._view()
        y, y_up = child.star(t, view)
        if child.tn != INF:
            heapq.heappush(heap, (child.tn, k))
        pending = self.pending
        d = self.ids[k]
        if y_up is not None:
            pending.append((k, d, y_up))
        y_out = None
        if y is not None:
            spec = self.spec
            if spec.feeds_output(d):
                y_out = spec.translate(d, SELF, y)
                if self.rec is not None and y_out is not None:
                    self.rec.record(t, self.path, "output", output=spec.format_output(y_out))
            for kr, r in self._route(d):
                xr = spec.translate(d, r, y)
                if xr is None:
                    continue
                c = children[kr]
                before = c.tn
                yu = c.x(xr, t, view)
                if c.tn != before and c.tn != INF:
                    heapq.heappush(heap, (c.tn, kr))
                if yu is not None:
                    pending.append((kr, r, yu))
        y_Gup = self._global(t, macro)
        self.tl = t
        self.tn = self._peek()
        return y_out, y_Gup

    def x(self, x, t, macro):
        if not (self.tl <= t <= self.tn):
            raise SynchronizationError(
                f"{self.path}: x at t={t!r} outside [{self.tl!r}, {self.tn!r}]")
        if self.log is not None:
            self.log.append((self.path, KernelMessage("x", t, x, macro)))
        spec = self.spec
        view = self._view()
        for kr, r in self._route(SELF):
            xr = spec.translate(SELF, r, x)
            if xr is None:
                continue
            c = self.children[kr]
            before = c.tn
            yu = c.x(xr, t, view)
            if c.tn != before and c.tn != INF:
                heapq.heappush(self.heap, (c.tn, kr))
            if yu is not None:
                self.pending.append((kr, r, yu))
        y_Gup = self._global(t, macro) if self.global_on_input else None
        self.tl = t
        self.tn = self._peek()
        return y_Gup

    def imminent_path(self):
        if self._peek() == INF:
            return self.path
        return self.children[self.heap[0][1]].imminent_path()


def make_processor(spec, path, rec=None, log=None, global_on_empty=False, global_on_input=False):
    if isinstance(spec, Atomic):
        return Simulator(spec, path, rec, log)
    if isinstance(spec, Coupled):
        return Coordinator(spec, path, rec, log, global_on_empty, global_on_input)
    raise TypeError(f"not a model specification: {type(spec).__name__}")


class RootCoordinator:
    """Owns the clock of one run.

    Parameters
    ----------
    model:
        Top-level :class:`Atomic` or :class:`Coupled` spec (validated here).
    recorder:
        Optional :class:`Trace` (or any object with the same ``record``
        signature) receiving every handled message.
    guard:
        Optional :class:`LegitimacyGuard`.
    messages:
        Optional list that receives ``(path, KernelMessage)`` pairs.
    """

    def __init__(self, model, t0: float = 0.0, recorder=None, guard=None,
                 global_on_empty=False, global_on_input=False, messages=None):
        ensure_valid(model)
        self.model = model
        self.recorder = recorder
        self.guard = guard
        name = getattr(model, "name", None) or "root"
        self.child = make_processor(model, str(name), recorder, messages,
                                    global_on_empty, global_on_input)
        self.t0 = check_time(t0)
        self.child.init(self.t0)
        self.time = self.t0
        self.cycles = 0

    @property
    def tn(self):
        return self.child.tn

    def run_until(self, t_end: float, sampler: GridSampler | None = None):
        """Advance until the next event lies beyond ``t_end`` (or never comes)."""
        child = self.child
        guard = self.guard
        t = child.tn
        while t <= t_end and t != INF:
            if sampler is not None:
                sampler.advance(t, self)
            if guard is not None:
                guard.check(t, child.imminent_path)
            child.star(t, None)
            self.cycles += 1
            self.time = t
            t = child.tn
        if sampler is not None:
            sampler.finish(t_end, self)
        return self.recorder


def simulate(model, t_end, **kwargs) -> Trace:
    """Run ``model`` to ``t_end`` with a full trace and return the trace."""
    trace = Trace()
    RootCoordinator(model, recorder=trace, **kwargs).run_until(t_end)
    return trace
