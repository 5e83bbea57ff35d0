"""Mitochondrial fusion/fission dynamics in a 2D annular cell.

Every mitochondrion is an atomic model stepping once per second.  Active
mitochondria wander through the perinuclear band (slow) and the cytosol
(fast).  Every ``cycle_period`` seconds each active mitochondrion draws one
uniform number: below ``fission_p`` it splits, in the next band of width
``fusion_p`` it absorbs its nearest neighbour, otherwise nothing
happens.

Creation and destruction are emulated with a fixed pool of agents.  The cell
(the coupled model) owns the authoritative census: on a fission report it
immediately activates the lowest free inactive agent with the split-off
mass, and on a fusion report it immediately deactivates the absorbed agent,
so total active mass is conserved after every global transition.  Agents
learn about their own activation or absorption from the cell's state at
their next transition; inactive agents look at half-past each cycle tick.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..core import CapacityError
from ..model import Atomic, EBCoupled
from ..stochastic import RngStream

SMALL, MEDIUM, LARGE = "small", "medium", "large"


@dataclass(frozen=True)
class MitoParams:
    fission_p: float = 0.5
    fusion_p: float = 0.5
    total_mass: float = 300.0
    m_min: float = 0.5
    m_max: float = 3.0
    cycle_period: float = 300.0
    horizon: float = 3600.0
    r_nucleus: float = 5.0
    r_perinuclear: float = 10.0
    r_cell: float = 20.0
    speed_perinuclear: float = 0.2
    speed_cytosol: float = 0.5
    pool_size: int | None = None

    def __post_init__(self):
        if not (0 <= self.fission_p and 0 <= self.fusion_p and self.fission_p + self.fusion_p <= 1):
            raise ValueError("fission_p and fusion_p must be probabilities with sum <= 1")
        if not 0 < self.m_min < self.m_max:
            raise ValueError("need 0 < m_min < m_max")
        if not 0 < self.r_nucleus < self.r_perinuclear < self.r_cell:
            raise ValueError("need r_nucleus < r_perinuclear < r_cell")
        if self.cycle_period < 1 or self.cycle_period != int(self.cycle_period):
            raise ValueError("cycle_period must be a whole number of seconds")
        if not self.total_mass >= self.m_min:
            raise ValueError("total_mass must be at least m_min")

    @property
    def pool(self) -> int:
        """Agents in the pool: the most that could ever be active at once."""
        if self.pool_size is not None:
            return int(self.pool_size)
        return int(math.floor(self.total_mass / self.m_min + 1e-9))


# ---------------------------------------------------------------------------
# Pure helpers

def fission_split(mass: float, x_f: float, m_min: float = 0.5) -> tuple[float, float]:
    """Split ``mass`` into ``(m1, m2)`` with ``m1 = (x_f*(0.5 - m_min/mass) + m_min/mass)*mass``.

    ``m1`` is rounded to a multiple of ``ulp(mass)`` so that ``m2 = mass - m1``
    is exact and ``m1 + m2 == mass`` holds bit for bit.
    """
    if mass < 2 * m_min:
        raise ValueError("fission needs mass >= 2*m_min")
    if not 0.0 <= x_f <= 1.0:
        raise ValueError("x_f must lie in [0, 1]")
    ratio = m_min / mass
    m1 = (x_f * (0.5 - ratio) + ratio) * mass
    q = math.ulp(mass)
    m1 = round(m1 / q) * q
    m1 = min(max(m1, m_min), 0.5 * mass)
    m2 = mass - m1
    return m1, m2


def size_group(mass: float, m_min: float = 0.5, m_max: float = 3.0) -> str:
    if not m_min <= mass <= m_max:
        raise ValueError(f"mass {mass!r} outside [{m_min}, {m_max}]")
    if mass <= 1.0:
        return SMALL
    if mass <= 2.0:
        return MEDIUM
    return LARGE


def region_of(x: float, y: float, p: MitoParams) -> str:
    r = math.hypot(x, y)
    if r <= p.r_nucleus or r > p.r_cell:
        raise ValueError(f"position ({x!r}, {y!r}) is outside the cytoplasm")
    return "perinuclear" if r <= p.r_perinuclear else "cytosolic"


def inside_cell(x: float, y: float, p: MitoParams) -> bool:
    r = math.hypot(x, y)
    return p.r_nucleus < r <= p.r_cell


def move(x, y, heading, speed, p: MitoParams):
    """One step of length ``speed``; a step leaving the cytoplasm is retried in
    the opposite direction, and if that fails too the mitochondrion stays."""
    nx = x + speed * math.cos(heading)
    ny = y + speed * math.sin(heading)
    if inside_cell(nx, ny, p):
        return nx, ny, heading
    heading = (heading + math.pi) % (2 * math.pi)
    nx = x + speed * math.cos(heading)
    ny = y + speed * math.sin(heading)
    if inside_cell(nx, ny, p):
        return nx, ny, heading
    return x, y, heading


def initial_masses(rng: RngStream, p: MitoParams) -> list[float]:
    """Uniform masses in [m_min, m_max] adding up to ``total_mass``.

    When the next draw would leave less than ``m_min`` behind, the remainder
    is taken whole if it fits below ``m_max`` and otherwise halved.
    """
    masses = []
    remaining = p.total_mass
    while remaining > 0:
        m = rng.uniform_range(p.m_min, p.m_max)
        if remaining - m >= p.m_min:
            masses.append(m)
            remaining -= m
            continue
        if remaining <= p.m_max:
            masses.append(remaining)
        else:
            masses.extend([remaining / 2, remaining - remaining / 2])
        break
    return masses


def random_position(rng: RngStream, p: MitoParams):
    while True:
        x = rng.uniform_range(-p.r_cell, p.r_cell)
        y = rng.uniform_range(-p.r_cell, p.r_cell)
        if inside_cell(x, y, p):
            return x, y


# ---------------------------------------------------------------------------
# Agent

class MitoState(NamedTuple):
    time: float
    active: bool
    x: float
    y: float
    heading: float
    mass: float

    def __str__(self):
        tag = "A" if self.active else "-"
        return f"{tag}({self.x!r},{self.y!r},{self.mass!r})"


class Report(NamedTuple):
    """Upward message: ``kind`` plus the fields that kind needs."""

    kind: str  # move, fission, fusion, idle, deactivated, activated, inactive
    x: float = 0.0
    y: float = 0.0
    mass: float = 0.0
    other: float = 0.0  # old mass for fission, absorbed id for fusion

    def __str__(self):
        return f"{self.kind}({self.x!r},{self.y!r},{self.mass!r},{self.other!r})"


class Mitochondrion(Atomic):
    def __init__(self, ident: int, params: MitoParams, rng: RngStream, start):
        super().__init__(None, f"mito{ident}")
        self.ident = ident
        self.params = params
        self.base_rng = rng
        self.start = start  # (active, x, y, mass)

    def reset(self):
        self.rng = self.base_rng.child()
        active, x, y, mass = self.start
        self.initial_state = MitoState(0.0, active, x, y, 0.0, mass)

    def _next_check(self, now: float) -> float:
        """Inactive agents wake half a second after each cycle tick."""
        period = self.params.cycle_period
        k = math.floor(now / period)
        t = k * period + 0.5
        if t <= now:
            t += period
        return t

    def ta(self, s):
        if s.active:
            return 1.0
        return self._next_check(s.time) - s.time

    def delta_int(self, s: MitoState, cell: "CellGlobal"):
        p = self.params
        now = s.time + self.ta(s)
        i = self.ident
        if not s.active:
            if cell is not None and cell.active[i]:
                # Granted by a fission: take over mass and position; realign
                # to whole seconds before the first move.
                new = MitoState(now - 0.5, True, cell.x[i], cell.y[i], 0.0, cell.mass[i])
                return new, Report("activated", new.x, new.y, new.mass)
            return s._replace(time=now), None
        if cell is not None and not cell.active[i]:
            return MitoState(now, False, s.x, s.y, 0.0, 0.0), Report("deactivated")
        rng = self.rng
        if now % p.cycle_period != 0:
            region = region_of(s.x, s.y, p)
            vmax = p.speed_perinuclear if region == "perinuclear" else p.speed_cytosol
            heading = rng.uniform() * 2 * math.pi
            speed = rng.uniform() * vmax
            x, y, heading = move(s.x, s.y, heading, speed, p)
            return MitoState(now, True, x, y, heading, s.mass), Report("move", x, y, s.mass)
        u = rng.uniform()
        if u <= p.fission_p:
            if s.mass >= 2 * p.m_min:
                m1, _ = fission_split(s.mass, rng.uniform(), p.m_min)
                return (s._replace(time=now, mass=m1),
                        Report("fission", s.x, s.y, m1, s.mass))
        elif u <= p.fission_p + p.fusion_p and cell is not None:
            j = cell.fusion_partner(i, s.x, s.y)
            if j is not None:
                total = s.mass + cell.mass[j]
                if total <= p.m_max:
                    return (s._replace(time=now, mass=total),
                            Report("fusion", s.x, s.y, total, j))
        return s._replace(time=now), Report("idle", s.x, s.y, s.mass)

    def format_state(self, s):
        return str(s)


# ---------------------------------------------------------------------------
# Cell

class CellGlobal:
    """Authoritative census of the pool; passed down to agents as their view."""

    def __init__(self, starts, params: MitoParams):
        self.params = params
        self.active = [a for a, _, _, _ in starts]
        self.x = [x for _, x, _, _ in starts]
        self.y = [y for _, _, y, _ in starts]
        self.mass = [m for _, _, _, m in starts]
        self.free = [i for i, a in enumerate(self.active) if not a]
        heapq.heapify(self.free)
        self.involved = set()  # took part in a fission or fusion this cycle
        self.born = set()  # activated by a fission this cycle
        self.absorbed = set()  # deactivated by a fusion this cycle
        self.clock = 0.0
        self.involved_at = -1.0
        self.fissions = 0
        self.fusions = 0

    def fusion_partner(self, i: int, x: float, y: float):
        """Nearest active agent that has not taken part in a fission or fusion
        this cycle, or None."""
        involved = self.involved
        cand = np.fromiter((a and j not in involved for j, a in enumerate(self.active)),
                           dtype=bool, count=len(self.active))
        cand[i] = False
        if not cand.any():
            return None
        idx = np.flatnonzero(cand)
        dx = np.asarray(self.x)[idx] - x
        dy = np.asarray(self.y)[idx] - y
        return int(idx[np.argmin(dx * dx + dy * dy)])

    def census(self):
        """``(n_small, n_medium, n_large, total_mass, n_active)``."""
        p = self.params
        counts = {SMALL: 0, MEDIUM: 0, LARGE: 0}
        masses = [m for a, m in zip(self.active, self.mass) if a]
        for m in masses:
            counts[size_group(m, p.m_min, p.m_max)] += 1
        return counts[SMALL], counts[MEDIUM], counts[LARGE], math.fsum(masses), len(masses)


class Cell(EBCoupled):
    def __init__(self, params: MitoParams, starts, rng: RngStream, name="cell"):
        agents = {
            i: Mitochondrion(i, params, rng.child("mito", i), st) for i, st in enumerate(starts)
        }
        super().__init__(agents, {}, initial_global=CellGlobal(starts, params), name=name)
        self.params = params

    def v_down(self, s_G):
        return s_G

    def global_transition(self, s_G: CellGlobal, e_G, bag, s_Gmacro):
        s_G.clock += e_G
        if s_G.clock != s_G.involved_at:
            s_G.involved.clear()
            s_G.born.clear()
            s_G.absorbed.clear()
            s_G.involved_at = s_G.clock
        for i, rep in bag:
            kind = rep.kind
            if kind == "move":
                s_G.x[i] = rep.x
                s_G.y[i] = rep.y
            elif kind == "fission":
                if not s_G.free:
                    raise CapacityError(
                        f"fission of agent {i} at t={s_G.clock!r}: no inactive agent left")
                j = heapq.heappop(s_G.free)
                s_G.mass[i] = rep.mass
                s_G.active[j] = True
                s_G.mass[j] = rep.other - rep.mass
                s_G.x[j], s_G.y[j] = rep.x, rep.y
                s_G.involved.update((i, j))
                s_G.born.add(j)
                s_G.fissions += 1
            elif kind == "fusion":
                j = int(rep.other)
                s_G.mass[i] = rep.mass
                s_G.active[j] = False
                s_G.involved.update((i, j))
                s_G.absorbed.add(j)
                s_G.fusions += 1
            elif kind == "deactivated":
                heapq.heappush(s_G.free, i)
        return s_G, None

    def format_global(self, s_G):
        ns, nm, nl, total, na = s_G.census()
        return f"active={na};small={ns};medium={nm};large={nl};mass={total!r}"


def build_mito(params: MitoParams, seed: int, stream: int = 0, name="cell") -> Cell:
    rng = RngStream(seed, stream)
    init = rng.child("mito-init")
    masses = initial_masses(init, params)
    pool = params.pool
    if len(masses) > pool:
        raise CapacityError(f"{len(masses)} initial mitochondria exceed the pool of {pool}")
    starts = []
    for k in range(pool):
        if k < len(masses):
            x, y = random_position(init, params)
            starts.append((True, x, y, masses[k]))
        else:
            starts.append((False, 0.0, 0.0, 0.0))
    return Cell(params, starts, rng, name=name)


MITO_COLUMNS = ("time", "n_small", "n_medium", "n_large", "frac_small", "frac_medium",
                "frac_large", "total_mass", "n_active")


def mito_observe(root) -> tuple:
    ns, nm, nl, total, na = root.child.s_G.census()
    n = max(na, 1)
    return (ns, nm, nl, ns / n, nm / n, nl / n, total, na)
