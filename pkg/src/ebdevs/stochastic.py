"""Seeded random streams, sampling helpers and configuration-model graphs."""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

_BLOCK = 512


def _key_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream keys must be nonnegative")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


class RngStream:
    """Reproducible random stream identified by ``(seed, stream, *key)``.

    ``stream`` is the replication index.  :meth:`child` derives independent
    sub-streams (one per agent, one for the graph, ...) from the same seed
    through numpy's ``SeedSequence`` spawn keys, so streams never overlap
    and the sequence only depends on the identifying tuple.
    """

    def __init__(self, seed: int, stream: int = 0, key: tuple = ()):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.stream = int(stream)
        self.key = tuple(key)
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream,) + tuple(_key_int(k) for k in self.key)
        )
        self.generator = np.random.Generator(np.random.PCG64(ss))
        self._buf = None
        self._pos = _BLOCK

    def child(self, *key) -> "RngStream":
        return RngStream(self.seed, self.stream, self.key + key)

    def uniform(self) -> float:
        """One draw from U[0, 1)."""
        pos = self._pos
        if pos >= _BLOCK:
            self._buf = self.generator.random(_BLOCK).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def index(self, n: int) -> int:
        """Uniform integer in ``range(n)``."""
        if n <= 0:
            raise ValueError("index() needs n >= 1")
        return min(int(self.uniform() * n), n - 1)

    def exponential(self, rate: float) -> float:
        return sample_exponential(self, rate)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream}, key={self.key!r})"


def sample_exponential(rng: RngStream, rate: float) -> float:
    """Exponential sample with mean ``1/rate`` by inversion."""
    if not rate > 0:
        raise ValueError(f"exponential rate must be positive, got {rate!r}")
    return -math.log1p(-rng.uniform()) / rate


def race_winner(rng: RngStream, rates: Sequence[float]) -> tuple[int, float]:
    """Winner and finishing time of a race between independent exponential clocks.

    The time is exponential with the total rate; the winner ``i`` is drawn
    separately with probability ``rates[i] / sum(rates)``.
    """
    if len(rates) == 0:
        raise ValueError("race_winner() needs at least one rate")
    if any(not r > 0 for r in rates):
        raise ValueError("race rates must be positive")
    total = math.fsum(rates)
    t = sample_exponential(rng, total)
    u = rng.uniform() * total
    acc = 0.0
    for i, r in enumerate(rates):
        acc += r
        if u < acc:
            return i, t
    return len(rates) - 1, t


def gamma_degrees(rng: RngStream, n: int, shape: float = 10.0, scale: float = 1.0,
                  fixed: Sequence[int] | None = None) -> list[int]:
    """Degree sequence drawn from Gamma(shape, scale).

    Samples are rounded to the nearest integer with a floor of 1; if the sum
    is odd the last node gets one more stub.  ``fixed`` bypasses sampling
    and returns the given sequence with the same parity fix.
    """
    if n < 1:
        raise ValueError("gamma_degrees() needs n >= 1")
    if fixed is not None:
        degrees = [int(d) for d in fixed]
        if len(degrees) != n:
            raise ValueError("fixed degree sequence length differs from n")
    else:
        if not (shape > 0 and scale > 0):
            raise ValueError("gamma shape and scale must be positive")
        raw = rng.generator.gamma(shape, scale, size=n)
        degrees = [max(1, int(v)) for v in np.rint(raw)]
    if sum(degrees) % 2:
        degrees[-1] += 1
    return degrees


@dataclass(frozen=True)
class DegreeGraph:
    n: int
    adjacency: tuple
    requested: tuple
    dropped: int

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def edges(self):
        return [(i, j) for i, nb in enumerate(self.adjacency) for j in nb if i < j]


def configuration_model(rng: RngStream, degrees: Sequence[int]) -> DegreeGraph:
    """Random simple graph with (approximately) the given degree sequence.

    Stubs are shuffled and paired; self-loops and repeated edges are then
    discarded, so realized degrees may fall slightly short.
    """
    n = len(degrees)
    if n < 2:
        raise ValueError("configuration_model() needs at least two nodes")
    if any(d < 0 for d in degrees):
        raise ValueError("degrees must be nonnegative")
    if sum(degrees) % 2:
        raise ValueError("sum of degrees must be even")
    stubs = np.repeat(np.arange(n), np.asarray(degrees, dtype=np.int64))
    stubs = rng.generator.permutation(stubs)
    adj = [set() for _ in range(n)]
    dropped = 0
    for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
        if a == b or b in adj[a]:
            dropped += 1
            continue
        adj[a].add(b)
        adj[b].add(a)
    if dropped:
        log.debug("configuration model dropped %d of %d stub pairs", dropped, len(stubs) // 2)
    return DegreeGraph(n, tuple(tuple(sorted(s)) for s in adj), tuple(int(d) for d in degrees),
                       dropped)
