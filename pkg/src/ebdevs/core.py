"""Kernel vocabulary shared by every other module.

Simulation time is a plain ``float``; passivity is ``INF``.  Component
identifiers (``ModelId``) are any totally ordered hashable values, usually
ints or short strings.  Tie-breaking between simultaneous events is expressed
as a *select key*: a function mapping a ModelId to a sortable value, lowest
first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, Sequence

INF = math.inf

ModelId = Hashable
SelectKey = Callable[[Any], Any]

#: Sentinel standing for the coupled model itself in influencer sets and
#: translation functions (``N`` / ``CN`` in the usual notation).
SELF = "@self"


class DevsError(Exception):
    """Base class for every error raised by the kernel."""


class SynchronizationError(DevsError):
    """A processor received a message outside its allowed time window."""


class ValidationError(DevsError):
    """A model specification failed structural validation."""

    def __init__(self, report):
        self.report = list(report)
        super().__init__("; ".join(str(v) for v in self.report))


class LegitimacyError(DevsError):
    """Too many transitions happened without simulation time advancing."""

    def __init__(self, path: str, time: float, count: int):
        self.path = path
        self.time = time
        self.count = count
        super().__init__(
            f"legitimacy budget exhausted at t={time!r}: {count} transitions "
            f"without time advance (imminent model {path})"
        )


class CapacityError(DevsError):
    """A model ran out of a fixed resource pool (e.g. inactive agents)."""


def check_time(t: float) -> float:
    t = float(t)
    if math.isnan(t) or t < 0:
        raise ValueError(f"simulation time must be a nonnegative real or +inf, got {t!r}")
    return t


def time_min(times: Iterable[float]) -> float:
    """Least element of a non-empty collection of times."""
    times = list(times)
    if not times:
        raise ValueError("time_min() of an empty collection")
    return min(times)


def default_select(model_id):
    return model_id


def compare_then_tiebreak(
    entries: Sequence[tuple[Any, float]], select: SelectKey = default_select
):
    """Return the id with minimal time; ties go to the lowest select key."""
    if not entries:
        raise ValueError("compare_then_tiebreak() of an empty collection")
    tmin = min(t for _, t in entries)
    return min((d for d, t in entries if t == tmin), key=select)


@dataclass(frozen=True)
class PortRef:
    """A named port of a given kind.

    Broadcast kinds only appear in models produced by
    :func:`ebdevs.transforms.lower_to_classic`.
    """

    kind: str
    name: str

    KINDS = ("regular-in", "regular-out", "broadcast-in", "broadcast-out", "up", "macro")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown port kind {self.kind!r}")


BROADCAST_IN = PortRef("broadcast-in", "bIPort")
BROADCAST_OUT = PortRef("broadcast-out", "bOPort")


@dataclass(frozen=True)
class PortValue:
    """A value travelling through an explicit port."""

    port: PortRef
    value: Any


@dataclass(frozen=True)
class KernelMessage:
    """One message of the processor protocol.

    ``tag`` is one of ``init``, ``star``, ``x``, ``y``, ``y-up`` or ``done``.
    The sequential kernel dispatches through direct method calls; this type
    is what gets logged when a caller asks for the message stream.
    """

    tag: str
    time: float
    payload: Any = None
    macro_view: Any = None

    TAGS = ("init", "star", "x", "y", "y-up", "done")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise ValueError(f"unknown message tag {self.tag!r}")
        check_time(self.time)
