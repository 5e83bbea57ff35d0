"""Boids flocking on a torus with macro-level neighbour information.

Birds are atomic models stepping once per time unit.  They never talk to
each other directly: after every move a bird reports its position and
heading upwards, and once the whole flock has reported for a step the flock
model rebuilds a :class:`FlockSnapshot` (nearest bird, flock-mates within
the visibility radius, clusters of the proximity graph).  Birds steer using
the snapshot taken before the current step, which makes the update
synchronous.

Two variants use the cluster count as feedback.  In the fearful variant
(``fa``) birds replace alignment and cohesion by anti-cohesion, turning to
face away from their flock-mates' centre of mass, while the flock has
coalesced into at most ``fa_threshold`` clusters (``fa_trigger="above"``
flips the condition to "more than ``fa_threshold``").  In the brave variant (``ba``)
birds enter a super-cohesion period with an enlarged cohesion turn when the
count is above a threshold; each bird has a limited number of periods, each
shorter than the previous one, separated by a cooldown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..model import Atomic, EBCoupled
from ..stochastic import RngStream

TWO_PI = 2.0 * math.pi
VARIANTS = ("vanilla", "fa", "ba")


@dataclass(frozen=True)
class BoidsParams:
    n_birds: int = 200
    grid_size: float = 70.0
    radius: float = 5.0
    min_dist: float = 0.5
    velocity: float = 1.0
    horizon: float = 250.0
    variant: str = "vanilla"
    separation_turn: float = math.radians(30)
    alignment_turn: float = math.radians(15)
    cohesion_turn: float = math.radians(10)
    fa_threshold: int = 12
    fa_trigger: str = "below"
    anti_cohesion_turn: float = math.pi
    ba_threshold: int = 10
    ba_duration: float = 20.0
    ba_decay: float = 0.5
    ba_activations: int = 3
    ba_cooldown: int = 30
    super_factor: float = 2.0

    def __post_init__(self):
        if self.n_birds < 1:
            raise ValueError("need at least one bird")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.fa_trigger not in ("below", "above"):
            raise ValueError("fa_trigger must be 'below' or 'above'")
        if not (self.radius > 0 and self.grid_size > 0 and self.velocity >= 0):
            raise ValueError("radius and grid_size must be positive, velocity >= 0")


# ---------------------------------------------------------------------------
# Geometry

def wrap_angle(a: float) -> float:
    """Angle normalised to [0, 2*pi)."""
    a = a % TWO_PI
    return 0.0 if a >= TWO_PI else a


def signed_angle(a: float) -> float:
    """Angle normalised to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


def wrap_coord(v: float, L: float) -> float:
    v = v % L
    return 0.0 if v >= L else v


def torus_distance(p, q, L: float) -> float:
    """Euclidean distance with the minimum-image convention on each axis."""
    dx = abs(p[0] - q[0])
    dy = abs(p[1] - q[1])
    dx = min(dx, L - dx)
    dy = min(dy, L - dy)
    return math.sqrt(dx * dx + dy * dy)


def torus_offset(frm, to, L: float):
    """Shortest displacement vector from ``frm`` to ``to``."""
    dx = to[0] - frm[0]
    dy = to[1] - frm[1]
    half = L / 2.0
    if dx > half:
        dx -= L
    elif dx < -half:
        dx += L
    if dy > half:
        dy -= L
    elif dy < -half:
        dy += L
    return dx, dy


def angular_mean(headings):
    """Circular mean of angles as ``(angle, ok)``.

    ``ok`` is False when the mean resultant vanishes (e.g. two opposite
    headings); the angle is then 0 and callers should keep their heading.
    """
    if len(headings) == 0:
        raise ValueError("angular_mean() of an empty collection")
    s = math.fsum(math.sin(h) for h in headings) / len(headings)
    c = math.fsum(math.cos(h) for h in headings) / len(headings)
    if math.hypot(s, c) < 1e-12:
        return 0.0, False
    return wrap_angle(math.atan2(s, c)), True


def distance_matrix(pos: np.ndarray, L: float) -> np.ndarray:
    """All-pairs torus distances, evaluated with the same float operations as
    :func:`torus_distance`."""
    d = np.abs(pos[:, None, :] - pos[None, :, :])
    d = np.minimum(d, L - d)
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1])


def radius_neighbors(pos: np.ndarray, r: float, L: float):
    """Neighbour lists within ``r`` (inclusive, self excluded) and global nearest.

    Returns ``(neighbors, closest, dist)`` where ``closest[i]`` is -1 for a
    lone bird; ties for the nearest go to the lowest index.
    """
    n = len(pos)
    dist = distance_matrix(pos, L)
    np.fill_diagonal(dist, np.inf)
    within = dist <= r
    neighbors = [np.flatnonzero(row).tolist() for row in within]
    if n > 1:
        closest = np.argmin(dist, axis=1)
    else:
        closest = np.full(n, -1)
    return neighbors, closest, dist


def clusters(dist: np.ndarray, r: float):
    """Connected components of the ``dist <= r`` graph.

    Labels are canonical: clusters numbered by their lowest member.
    """
    n = dist.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0
    adj = csr_matrix(dist <= r)
    k, raw = connected_components(adj, directed=False)
    first = {}
    labels = np.empty(n, dtype=np.int64)
    for i, lab in enumerate(raw.tolist()):
        labels[i] = first.setdefault(lab, len(first))
    return labels, k


class FlockSnapshot:
    """Neighbour and cluster information for one configuration of the flock.

    Birds query it through :meth:`closest`, :meth:`flockmates` and
    :attr:`n_clusters`.
    """

    def __init__(self, pos: np.ndarray, headings: np.ndarray, params: BoidsParams):
        L, r = params.grid_size, params.radius
        self.n = len(pos)
        self.pos = pos
        self.headings = headings
        neighbors, closest, dist = radius_neighbors(pos, r, L)
        self.neighbors = neighbors
        self._closest = closest.tolist()
        finite = np.where(np.isfinite(dist), dist, 0.0)
        self._closest_dist = [float(dist[i, c]) if c >= 0 else math.inf
                              for i, c in enumerate(self._closest)]
        self.labels, self.n_clusters = clusters(dist, r)
        sizes = np.bincount(self.labels, minlength=self.n_clusters) if self.n else np.zeros(0)
        self.sizes = sizes
        self.mean_cluster_size = float(self.n / self.n_clusters) if self.n_clusters else 0.0
        avg, comp = [], []
        for lab in np.flatnonzero(sizes >= 2).tolist():
            members = np.flatnonzero(self.labels == lab)
            sub = finite[np.ix_(members, members)]
            iu = np.triu_indices(len(members), 1)
            pair = sub[iu]
            avg.append(float(pair.mean()))
            comp.append(float(pair.max()))
        self.intra_avg_dist = float(np.mean(avg)) if avg else 0.0
        self.intra_complete_dist = float(np.mean(comp)) if comp else 0.0
        self._summaries(dist, r, L)

    def _summaries(self, dist, r, L):
        pos, n = self.pos, self.n
        off = pos[None, :, :] - pos[:, None, :]
        half = L / 2.0
        off = np.where(off > half, off - L, np.where(off < -half, off + L, off))
        within = (dist <= r).astype(float)
        count = within.sum(axis=1)
        safe = np.maximum(count, 1.0)
        com_dx = (within * off[..., 0]).sum(axis=1) / safe
        com_dy = (within * off[..., 1]).sum(axis=1) / safe
        ms = within @ np.sin(self.headings) / safe
        mc = within @ np.cos(self.headings) / safe
        mean_h = np.mod(np.arctan2(ms, mc), TWO_PI)
        degenerate = np.hypot(ms, mc) < 1e-12
        self._count = count.astype(int).tolist()
        self._com = list(zip(com_dx.tolist(), com_dy.tolist()))
        self._mean_h = [None if bad else wrap_angle(h)
                        for h, bad in zip(mean_h.tolist(), degenerate.tolist())]
        idx = np.arange(n)
        c = np.asarray(self._closest)
        if n > 1:
            self._closest_off = list(zip(off[idx, c, 0].tolist(), off[idx, c, 1].tolist()))
        else:
            self._closest_off = [None] * n

    def closest(self, i: int):
        """``(id, distance, dx, dy)`` of the nearest other bird, or None."""
        c = self._closest[i]
        if c < 0:
            return None
        dx, dy = self._closest_off[i]
        return c, self._closest_dist[i], dx, dy

    def flockmates(self, i: int):
        """``(count, com_dx, com_dy, mean_heading)`` over neighbours within the radius.

        ``com_*`` is the offset from bird ``i`` to the neighbours' centre of
        mass; ``mean_heading`` is None when the circular mean is undefined.
        """
        k = self._count[i]
        if k == 0:
            return 0, 0.0, 0.0, None
        cx, cy = self._com[i]
        return k, cx, cy, self._mean_h[i]


# ---------------------------------------------------------------------------
# Bird

def fa_active(p: BoidsParams, n_clusters: int) -> bool:
    """Whether the fearful variant's anti-cohesion is on for this cluster count."""
    if p.fa_trigger == "above":
        return n_clusters > p.fa_threshold
    return n_clusters <= p.fa_threshold


class BirdState(NamedTuple):
    x: float
    y: float
    heading: float
    super_ticks: int = 0
    activations_used: int = 0
    cooldown: int = 0

    def __str__(self):
        return f"({self.x!r},{self.y!r},{self.heading!r},{self.super_ticks})"


class BirdReport(NamedTuple):
    x: float
    y: float
    heading: float
    super_active: bool


def _turn_towards(heading, target, bound):
    delta = signed_angle(target - heading)
    return max(-bound, min(bound, delta))


class Bird(Atomic):
    def __init__(self, ident: int, state: BirdState, params: BoidsParams):
        super().__init__(state, f"bird{ident}")
        self.ident = ident
        self.params = params

    def ta(self, s):
        return 1.0

    def steer(self, s: BirdState, view: "FlockSnapshot | None"):
        """New heading plus the BA bookkeeping fields, before moving."""
        p = self.params
        heading = s.heading
        super_ticks, used, cooldown = s.super_ticks, s.activations_used, s.cooldown
        if view is None:
            return heading, super_ticks, used, cooldown
        if p.variant == "ba":
            if super_ticks > 0:
                super_ticks -= 1
                if super_ticks == 0:
                    # the step that ends a period is the first cooldown step
                    cooldown = max(p.ba_cooldown - 1, 0)
            elif cooldown > 0:
                cooldown -= 1
            elif used < p.ba_activations and view.n_clusters > p.ba_threshold:
                super_ticks = max(1, int(round(p.ba_duration * p.ba_decay ** used)))
                used += 1
        closest = view.closest(self.ident)
        if closest is None:
            return heading, super_ticks, used, cooldown
        _, dist, dx, dy = closest
        if dist < p.min_dist:
            away = math.atan2(dy, dx) + math.pi
            heading += _turn_towards(heading, away, p.separation_turn)
            return wrap_angle(heading), super_ticks, used, cooldown
        count, cx, cy, mean_h = view.flockmates(self.ident)
        if count == 0:
            return heading, super_ticks, used, cooldown
        com = math.atan2(cy, cx)
        if p.variant == "fa" and fa_active(p, view.n_clusters):
            heading += _turn_towards(heading, com + math.pi, p.anti_cohesion_turn)
            return wrap_angle(heading), super_ticks, used, cooldown
        if mean_h is not None:
            heading += _turn_towards(heading, mean_h, p.alignment_turn)
        bound = p.cohesion_turn * (p.super_factor if super_ticks > 0 else 1.0)
        if cx != 0.0 or cy != 0.0:
            heading += _turn_towards(heading, com, bound)
        return wrap_angle(heading), super_ticks, used, cooldown

    def delta_int(self, s, macro):
        p = self.params
        heading, super_ticks, used, cooldown = self.steer(s, macro)
        x = wrap_coord(s.x + p.velocity * math.cos(heading), p.grid_size)
        y = wrap_coord(s.y + p.velocity * math.sin(heading), p.grid_size)
        new = BirdState(x, y, heading, super_ticks, used, cooldown)
        return new, BirdReport(x, y, heading, super_ticks > 0)

    def format_state(self, s):
        return str(s)

    def format_y_up(self, y_up):
        return "" if y_up is None else f"({y_up.x!r},{y_up.y!r},{y_up.heading!r})"


# ---------------------------------------------------------------------------
# Flock

class FlockGlobal:
    """Current snapshot plus the reports gathered for the step in progress."""

    def __init__(self, snapshot: FlockSnapshot, n: int):
        self.snapshot = snapshot
        self.pos = snapshot.pos.copy()
        self.headings = snapshot.headings.copy()
        self.super_active = np.zeros(n, dtype=bool)
        self.reported = 0
        self.steps = 0
        self.event_active = False


class Flock(EBCoupled):
    def __init__(self, params: BoidsParams, states, name="flock"):
        birds = {i: Bird(i, st, params) for i, st in enumerate(states)}
        pos = np.array([[s.x, s.y] for s in states], dtype=float)
        headings = np.array([s.heading for s in states], dtype=float)
        snap = FlockSnapshot(pos, headings, params)
        super().__init__(birds, {}, initial_global=FlockGlobal(snap, len(states)), name=name)
        self.params = params
        self.initial_global.event_active = self._event(self.initial_global)

    def v_down(self, s_G):
        return s_G.snapshot

    def _event(self, s_G) -> bool:
        p = self.params
        if p.variant == "fa":
            return fa_active(p, s_G.snapshot.n_clusters)
        if p.variant == "ba":
            return bool(s_G.super_active.any())
        return False

    def global_transition(self, s_G: FlockGlobal, e_G, bag, s_Gmacro):
        for i, rep in bag:
            s_G.pos[i, 0] = rep.x
            s_G.pos[i, 1] = rep.y
            s_G.headings[i] = rep.heading
            s_G.super_active[i] = rep.super_active
            s_G.reported += 1
        if s_G.reported >= self.params.n_birds:
            s_G.snapshot = FlockSnapshot(s_G.pos.copy(), s_G.headings.copy(), self.params)
            s_G.reported = 0
            s_G.steps += 1
            s_G.event_active = self._event(s_G)
        return s_G, None

    def format_global(self, s_G):
        snap = s_G.snapshot
        return (f"step={s_G.steps};n_clusters={snap.n_clusters};"
                f"pending={s_G.reported};event={int(s_G.event_active)}")


def random_birds(params: BoidsParams, rng: RngStream):
    g = rng.generator
    L = params.grid_size
    xy = g.random((params.n_birds, 2)) * L
    h = g.random(params.n_birds) * TWO_PI
    return [BirdState(wrap_coord(float(x), L), wrap_coord(float(y), L), wrap_angle(float(a)))
            for (x, y), a in zip(xy.tolist(), h.tolist())]


def build_boids(params: BoidsParams, seed: int, stream: int = 0, name="flock") -> Flock:
    rng = RngStream(seed, stream).child("boids-init")
    return Flock(params, random_birds(params, rng), name=name)


BOIDS_COLUMNS = ("time", "n_clusters", "mean_cluster_size", "intra_avg_dist",
                 "intra_complete_dist", "event_active")


def boids_observe(root) -> tuple:
    g = root.child.s_G
    snap = g.snapshot
    return (snap.n_clusters, snap.mean_cluster_size, snap.intra_avg_dist,
            snap.intra_complete_dist, int(g.event_active))
