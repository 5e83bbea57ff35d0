"""Atomic and coupled model contracts.

An :class:`Atomic` bundles the functions of an EB-DEVS atomic model.  The
running state ``s`` is *not* stored on the model object; processors own it.  Models are
meant to be immutable after construction, and states, outputs, upward
messages and macro views are treated as opaque values.  Atomic states must not
be mutated after being returned (transforms keep several of them alive).  The
global state of a coupled model may be updated in place by
``global_transition``; each run starts from a deep copy of ``initial_global``.

A :class:`Coupled` holds the components, influencer sets and translation
function of a Classic DEVS coupled model, plus the optional global state
machinery (``global_transition`` and ``v_down``).  A coupled model whose
``global_transition`` is left unimplemented behaves as a Classic DEVS coupled
model.

Upward messages arrive at ``global_transition`` as a list of
``(sender_id, payload)`` pairs sorted by the select key.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from .core import INF, SELF, ValidationError, default_select


def format_value(value) -> str:
    """Deterministic text form used in trace exports (empty for None)."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Atomic:
    """EB-DEVS atomic model.

    Subclasses override :meth:`ta`, :meth:`delta_int`, :meth:`delta_ext` and
    :meth:`output`.  Both transition functions return ``(new_state, y_up)``;
    return ``None`` as ``y_up`` when there is nothing to report upwards.
    """

    def __init__(self, initial_state=None, name=None):
        self.initial_state = initial_state
        self.name = name

    def reset(self):
        """Called by the kernel before reading :attr:`initial_state` at init.

        Stochastic models rewind their random streams here so one spec can
        be run repeatedly with identical results.
        """

    def ta(self, s) -> float:
        return INF

    def delta_int(self, s, macro):
        return s, None

    def delta_ext(self, s, e, x, macro):
        return s, None

    def output(self, s):
        return None

    # Trace serialization hooks.
    def format_state(self, s):
        return format_value(s)

    def format_output(self, y):
        return format_value(y)

    def format_y_up(self, y_up):
        return format_value(y_up)


class Coupled:
    """EB-DEVS coupled model.

    Parameters
    ----------
    components:
        Mapping from ModelId to child spec (:class:`Atomic` or :class:`Coupled`).
    influencers:
        Mapping ``j -> iterable of i`` giving the influencer set ``I_j``.  Use
        :data:`~ebdevs.core.SELF` as ``i`` for external input couplings and as
        ``j`` for external output couplings.
    select:
        Key function over ModelIds; the imminent child with the lowest key wins.
    initial_global:
        Initial global state ``s_G``.
    """

    def __init__(
        self,
        components: Mapping[Any, Any],
        influencers: Mapping[Any, Iterable[Any]] | None = None,
        select: Callable[[Any], Any] = default_select,
        initial_global=None,
        name: str = "root",
    ):
        self.components = dict(components)
        self.influencers = {j: tuple(srcs) for j, srcs in (influencers or {}).items()}
        self.select = select
        self.initial_global = initial_global
        self.name = name
        self._receivers = None

    # -- Classic structure -------------------------------------------------
    def translate(self, src, dst, value):
        """Translation ``Z_{src,dst}``; return None to drop the value."""
        return value

    def receivers(self, src):
        """Components influenced by ``src`` (``SELF`` for external inputs), in select order."""
        if self._receivers is None:
            table: dict[Any, list] = {}
            for dst, srcs in self.influencers.items():
                if dst == SELF:
                    continue
                for i in srcs:
                    table.setdefault(i, []).append(dst)
            self._receivers = {
                i: tuple(sorted(dsts, key=self.select)) for i, dsts in table.items()
            }
        return self._receivers.get(src, ())

    def feeds_output(self, src) -> bool:
        return src in self.influencers.get(SELF, ())

    # -- EB-DEVS extension -------------------------------------------------
    has_global = False

    def global_transition(self, s_G, e_G, bag, s_Gmacro):
        """Return ``(s_G', y_Gup)``.  Only called when :attr:`has_global` is true."""
        raise NotImplementedError

    def v_down(self, s_G):
        return None

    def format_global(self, s_G):
        return format_value(s_G)

    def format_output(self, y):
        return format_value(y)


class EBCoupled(Coupled):
    """Coupled model with a global state; subclasses implement ``global_transition``."""

    has_global = True


class ClassicAtomic:
    """Plain Classic DEVS atomic model (no macro channels).

    ``delta_int(s)`` and ``delta_ext(s, e, x)`` return the new state only.
    """

    def __init__(self, initial_state=None, name=None):
        self.initial_state = initial_state
        self.name = name

    def ta(self, s) -> float:
        return INF

    def delta_int(self, s):
        return s

    def delta_ext(self, s, e, x):
        return s

    def output(self, s):
        return None


class LiftedAtomic(Atomic):
    """A Classic DEVS atomic embedded with null upward and macro channels."""

    def __init__(self, classic: ClassicAtomic):
        super().__init__(classic.initial_state, getattr(classic, "name", None))
        self.classic = classic

    def reset(self):
        self.initial_state = self.classic.initial_state

    def ta(self, s):
        return self.classic.ta(s)

    def delta_int(self, s, macro):
        return self.classic.delta_int(s), None

    def delta_ext(self, s, e, x, macro):
        return self.classic.delta_ext(s, e, x), None

    def output(self, s):
        return self.classic.output(s)

    def format_state(self, s):
        fmt = getattr(self.classic, "format_state", None)
        return fmt(s) if fmt else format_value(s)


def classic_lift(classic: ClassicAtomic) -> Atomic:
    """Embed a Classic DEVS atomic into EB-DEVS with null channels."""
    return LiftedAtomic(classic)


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


def _check_select(spec: Coupled) -> bool:
    try:
        sorted(spec.components, key=spec.select)
    except TypeError:
        return False
    return True


def validate(spec, path: str | None = None) -> list[Violation]:
    """Structural checks over a model hierarchy.  Returns an empty list when valid."""
    if isinstance(spec, Atomic):
        return []
    if not isinstance(spec, Coupled):
        return [Violation(path or "?", f"not a model specification: {type(spec).__name__}")]
    path = path or spec.name
    report: list[Violation] = []
    if not spec.components:
        report.append(Violation(path, "coupled model has no components"))
    if SELF in spec.components:
        report.append(Violation(path, f"component id {SELF!r} is reserved"))
    known = set(spec.components) | {SELF}
    for dst, srcs in spec.influencers.items():
        if dst not in known:
            report.append(Violation(path, f"influencer set for unknown component {dst!r}"))
        for i in srcs:
            if i == dst:
                report.append(Violation(path, f"self-influence at {dst!r}"))
            elif i not in known:
                report.append(Violation(path, f"unknown influencer {i!r} of {dst!r}"))
        if dst == SELF and SELF in srcs:
            report.append(Violation(path, "direct input-to-output coupling is not allowed"))
    if spec.components and not _check_select(spec):
        report.append(Violation(path, "select key does not totally order the components"))
    if not spec.has_global and type(spec).v_down is not Coupled.v_down:
        report.append(Violation(path, "v_down defined without a global transition"))
    for d, child in spec.components.items():
        report.extend(validate(child, f"{path}/{d}"))
    return report


def ensure_valid(spec):
    report = validate(spec)
    if report:
        raise ValidationError(report)
    return spec
