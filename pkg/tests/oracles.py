"""Independent reference implementations used to cross-check the package.

None of these import the code under test beyond plain data types; they are
deliberately naive (linear scans, double loops, explicit union-find).
"""

from __future__ import annotations

import math

INF = math.inf


def classic_calendar(atomics: dict, influencers: dict, t_end: float):
    """Reference Classic DEVS run of a flat network of classic atomics.

    ``atomics`` maps id -> object with ``initial_state``, ``ta``, ``output``,
    ``delta_int`` and ``delta_ext``.  Ties go to the lowest id; outputs reach
    receivers in id order.  Returns ``(time, id, kind, state)`` tuples.
    """
    ids = sorted(atomics)
    state = {d: atomics[d].initial_state for d in ids}
    last = {d: 0.0 for d in ids}
    nxt = {d: atomics[d].ta(state[d]) for d in ids}
    receivers = {d: sorted(j for j, srcs in influencers.items() if d in srcs) for d in ids}
    events = []
    while True:
        t = min(nxt.values())
        if t > t_end or t == INF:
            return events
        d = min(k for k in ids if nxt[k] == t)
        y = atomics[d].output(state[d])
        state[d] = atomics[d].delta_int(state[d])
        last[d] = t
        nxt[d] = t + atomics[d].ta(state[d])
        events.append((t, d, "internal", state[d]))
        if y is None:
            continue
        for r in receivers[d]:
            state[r] = atomics[r].delta_ext(state[r], t - last[r], y)
            last[r] = t
            nxt[r] = t + atomics[r].ta(state[r])
            events.append((t, r, "external", state[r]))


def torus_dist(p, q, L):
    dx = abs(p[0] - q[0])
    dy = abs(p[1] - q[1])
    dx = min(dx, L - dx)
    dy = min(dy, L - dy)
    return math.sqrt(dx * dx + dy * dy)


def brute_neighbors(points, r, L):
    """All-pairs neighbour lists (within distance r, excluding self)."""
    n = len(points)
    return [
        [j for j in range(n) if j != i and torus_dist(points[i], points[j], L) <= r]
        for i in range(n)
    ]


def union_find_clusters(points, r, L):
    """Connected components of the proximity graph as a sorted list of sorted tuples."""
    n = len(points)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if torus_dist(points[i], points[j], L) <= r:
                ra, rb = find(i), find(j)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(sorted(g)) for g in groups.values())


def race_probabilities(rates):
    total = sum(rates)
    return [r / total for r in rates]


def fission_formula(mass, x_f, m_min=0.5):
    """The split formula evaluated literally."""
    m1 = (x_f * (0.5 - m_min / mass) + m_min / mass) * mass
    return m1, mass - m1


def size_bins(mass):
    if 0.5 <= mass <= 1:
        return "small"
    if 1 < mass <= 2:
        return "medium"
    if 2 < mass <= 3:
        return "large"
    raise ValueError(mass)


def sir_counts(labels):
    s = sum(1 for v in labels if v in ("S", "Sv"))
    i = sum(1 for v in labels if v == "I")
    r = sum(1 for v in labels if v == "R")
    return s, i, r
