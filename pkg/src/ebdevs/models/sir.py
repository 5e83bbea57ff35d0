"""Agent-based SIR epidemic on a configuration-model contact network.

Each agent is an atomic model.  An infected agent runs two exponential clocks,
infection at rate ``k * beta`` (k = number of neighbours) and recovery at rate
``gamma``.  The race is resolved when the agent enters (or stays in) the
infected state: the winner, its time and, for an infection, the uniformly
chosen neighbour are stored in the state, so the output function knows
whether to emit ``Infect`` before the internal transition runs.

The environment keeps compartment counts as its global state.  With
vaccination enabled it also tracks the growth of the infected count over
fixed time bins and exposes it to the agents; a susceptible agent receiving
an infection while the growth is at or above the threshold gets vaccinated
instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..core import INF
from ..model import Atomic, EBCoupled
from ..stochastic import RngStream, configuration_model, gamma_degrees, race_winner, sample_exponential

SUSCEPTIBLE = "S"
VACCINATED = "Sv"
INFECTED = "I"
RECOVERED = "R"


@dataclass(frozen=True)
class SirParams:
    n: int = 500
    beta: float = 0.05
    gamma: float = 0.1
    gamma_shape: float = 10.0
    gamma_scale: float = 1.0
    initial_infected: float = 0.1
    vaccination: bool = False
    threshold: float = 2.0
    bin_width: float = 1.0
    horizon: float = 150.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("SIR model needs at least two agents")
        if self.beta < 0 or not self.gamma > 0:
            raise ValueError("beta must be >= 0 and gamma > 0")
        if not 0 <= self.initial_infected <= 1:
            raise ValueError("initial_infected is a fraction in [0, 1]")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")


class Infect(NamedTuple):
    """Infection message; ``target`` tells the environment which neighbour gets it."""

    source: int
    target: int

    def __str__(self):
        return f"Infect->{self.target}"


class AgentState(NamedTuple):
    label: str
    event: str | None = None  # "infect" or "recover" while infected
    target: int | None = None
    sojourn: float = INF

    def __str__(self):
        return self.label


class SirAgent(Atomic):
    def __init__(self, ident: int, neighbors, params: SirParams, rng: RngStream, label: str):
        super().__init__(None, f"agent{ident}")
        self.ident = ident
        self.neighbors = tuple(neighbors)
        self.params = params
        self.base_rng = rng
        self.initial_label = label
        self.infect_rate = len(self.neighbors) * params.beta

    def reset(self):
        self.rng = self.base_rng.child()
        self.initial_state = self._enter(self.initial_label)

    def _enter(self, label):
        if label != INFECTED:
            return AgentState(label)
        rng = self.rng
        if self.infect_rate <= 0:
            return AgentState(INFECTED, "recover", None, sample_exponential(rng, self.params.gamma))
        winner, t = race_winner(rng, (self.infect_rate, self.params.gamma))
        if winner == 0:
            target = self.neighbors[rng.index(len(self.neighbors))]
            return AgentState(INFECTED, "infect", target, t)
        return AgentState(INFECTED, "recover", None, t)

    def ta(self, s):
        return s.sojourn

    def output(self, s):
        if s.event == "infect":
            return Infect(self.ident, s.target)
        return None

    def delta_int(self, s, macro):
        label = INFECTED if s.event == "infect" else RECOVERED
        return self._enter(label), label

    def delta_ext(self, s, e, x, macro):
        if s.label == SUSCEPTIBLE:
            p = self.params
            if p.vaccination and macro is not None and macro >= p.threshold:
                return AgentState(VACCINATED), VACCINATED
            return self._enter(INFECTED), INFECTED
        if s.label == INFECTED:
            return s._replace(sojourn=s.sojourn - e), INFECTED
        return s, s.label

    def format_state(self, s):
        return s.label


@dataclass
class SirGlobal:
    """Compartment counts, per-agent labels and infected-growth bookkeeping."""

    labels: list
    nS: int
    nI: int
    nR: int
    nV: int = 0
    clock: float = 0.0
    bin: int = 0
    history: list = field(default_factory=list)
    growth: float = 0.0

    @property
    def n(self):
        return self.nS + self.nI + self.nR


class SirEnvironment(EBCoupled):
    def __init__(self, params: SirParams, graph, initial_labels, rng: RngStream, name="sir"):
        agents = {
            i: SirAgent(i, graph.adjacency[i], params, rng.child("agent", i), initial_labels[i])
            for i in range(params.n)
        }
        influencers = {j: graph.adjacency[j] for j in range(params.n)}
        nI = sum(1 for lab in initial_labels if lab == INFECTED)
        g = SirGlobal(list(initial_labels), params.n - nI, nI, 0)
        super().__init__(agents, influencers, initial_global=g, name=name)
        self.params = params
        self.graph = graph

    def translate(self, src, dst, value):
        return value if value.target == dst else None

    def v_down(self, s_G):
        return s_G.growth if self.params.vaccination else None

    def global_transition(self, s_G: SirGlobal, e_G, bag, s_Gmacro):
        p = self.params
        s_G.clock += e_G
        b = math.floor(s_G.clock / p.bin_width)
        if b > s_G.bin:
            s_G.history = (s_G.history + [s_G.nI] * min(b - s_G.bin, 2))[-2:]
            s_G.bin = b
            if len(s_G.history) == 2:
                s_G.growth = (s_G.history[1] - s_G.history[0]) / p.bin_width
        labels = s_G.labels
        for sender, new in bag:
            old = labels[sender]
            if old == new:
                continue
            labels[sender] = new
            _shift(s_G, old, -1)
            _shift(s_G, new, +1)
        if min(s_G.nS, s_G.nI, s_G.nR) < 0 or s_G.n != p.n:
            raise AssertionError(f"compartment counts broke conservation: {self.format_global(s_G)}")
        return s_G, None

    def outbreak_active(self, s_G) -> bool:
        return s_G.growth >= self.params.threshold

    def format_global(self, s_G):
        return (f"nS={s_G.nS};nI={s_G.nI};nR={s_G.nR};nV={s_G.nV};"
                f"growth={s_G.growth!r}")


def _shift(s_G, label, delta):
    if label == INFECTED:
        s_G.nI += delta
    elif label == RECOVERED:
        s_G.nR += delta
    else:
        s_G.nS += delta
        if label == VACCINATED:
            s_G.nV += delta


def build_sir(params: SirParams, seed: int, stream: int = 0, name="sir") -> SirEnvironment:
    """SIR-CM (or SIR-CM-V) environment for one replication.

    Graph, initial infections and agent clocks come from separate
    sub-streams, so the same ``(seed, stream)`` with and without vaccination
    yields the same network and the same initially infected agents.
    """
    rng = RngStream(seed, stream)
    degrees = gamma_degrees(rng.child("degrees"), params.n, params.gamma_shape, params.gamma_scale)
    graph = configuration_model(rng.child("graph"), degrees)
    n_inf = int(round(params.initial_infected * params.n))
    chosen = rng.child("init").generator.choice(params.n, size=n_inf, replace=False)
    labels = [SUSCEPTIBLE] * params.n
    for i in chosen.tolist():
        labels[i] = INFECTED
    return SirEnvironment(params, graph, labels, rng, name=name)


def sir_observe(root) -> tuple:
    """Row ``(nS, nI, nR, outbreak_active)`` of the running environment."""
    coord = root.child
    g = coord.s_G
    return (g.nS, g.nI, g.nR, int(coord.spec.outbreak_active(g)))


SIR_COLUMNS = ("time", "nS", "nI", "nR", "outbreak_active")


def sir_ode(beta, gamma, N, S0, I0, horizon, step):
    """Fixed-step RK4 solution of the mean-field SIR equations.

    Returns arrays ``(t, S, I, R)`` with ``R(0) = N - S0 - I0``.
    """
    if not step > 0:
        raise ValueError("step must be positive")

    def f(y):
        S, I, _ = y
        inf = beta * S * I / N
        return np.array([-inf, inf - gamma * I, gamma * I])

    steps = int(math.ceil(horizon / step))
    t = np.arange(steps + 1) * step
    ys = np.empty((steps + 1, 3))
    y = np.array([S0, I0, N - S0 - I0], dtype=float)
    ys[0] = y
    for i in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * step * k1)
        k3 = f(y + 0.5 * step * k2)
        k4 = f(y + step * k3)
        y = y + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    return t, ys[:, 0], ys[:, 1], ys[:, 2]
