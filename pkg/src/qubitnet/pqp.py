"""Pairwise qubit projection engine.

Slotted time: at each slot a random adjacent pair measures at the canonical
midpoint of their angles and both qubits collapse independently. The engine
records full trajectories, exposes agreement diagnostics, and provides the
exact one-step enumeration of the expected pairwise-overlap sum used to check
the drift identity.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

from .graph import NetworkGraph, pair_selection_distribution
from .qstate import (
    HALF_PI,
    PI,
    Outcome,
    canonicalize_measurement,
    canonicalize_state,
    eigenstate,
    measure,
)

NetworkState = tuple[float, ...]


@dataclass(frozen=True)
class PqpEvent:
    """One protocol slot: the selected pair, its midpoint measurement, and the
    two independent collapse results (lower node index first)."""

    time: int
    edge: tuple[int, int]
    measurement: float
    outcomes: tuple[Outcome, Outcome]
    post_states: tuple[float, float]


@dataclass
class Trajectory:
    """Full record of one run; replaying events from initial reproduces final."""

    initial: NetworkState
    events: list[PqpEvent] = field(default_factory=list)
    final: NetworkState = ()
    seed: int | None = None
    reached_consensus: bool = False

    @property
    def consensus_time(self) -> int | None:
        return len(self.events) if self.reached_consensus else None


def make_state(angles) -> NetworkState:
    """Canonicalize a sequence of radians into a network state tuple."""
    return tuple(canonicalize_state(a) for a in angles)


def select_pair(g: NetworkGraph, rng) -> tuple[int, int]:
    """Sample node i uniformly, then a uniform neighbor j; returns the
    unordered pair as (min, max). Consumes exactly two uniform variates."""
    n = g.node_count
    i = int(rng.random() * n)
    if i >= n:
        i = n - 1
    nbrs = g.neighbors[i]
    j = nbrs[min(int(rng.random() * len(nbrs)), len(nbrs) - 1)]
    return (i, j) if i < j else (j, i)


def pqp_step(state: NetworkState, edge: tuple[int, int], rng, t: int = 0):
    """Measure both endpoints of edge at the midpoint of their angles.

    The midpoint is taken on the raw angles in [0, pi) before the mod-pi/2
    reduction. Endpoints are measured independently in ascending node order,
    consuming exactly two uniform variates; all other coordinates are
    untouched. Returns the new state and the recorded event.
    """
    i, j = (edge[0], edge[1]) if edge[0] < edge[1] else (edge[1], edge[0])
    u = canonicalize_measurement((state[i] + state[j]) / 2.0)
    y_i, s_i = measure(state[i], u, rng)
    y_j, s_j = measure(state[j], u, rng)
    out = list(state)
    out[i] = s_i
    out[j] = s_j
    event = PqpEvent(
        time=t, edge=(i, j), measurement=u, outcomes=(y_i, y_j), post_states=(s_i, s_j)
    )
    return tuple(out), event


def disagreement_h(state: NetworkState) -> float:
    """Sum over unordered pairs of squared overlaps cos^2(x_i - x_j).

    Ranges over [0, N(N-1)/2] and hits the top exactly when all pairwise
    fidelities are one.
    """
    total = 0.0
    n = len(state)
    for i in range(n):
        xi = state[i]
        for j in range(i + 1, n):
            total += math.cos(xi - state[j]) ** 2
    return total


def consensus_reached(state: NetworkState, eps: float) -> bool:
    """True iff every pairwise squared overlap is at least 1 - eps."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    n = len(state)
    for i in range(n):
        xi = state[i]
        for j in range(i + 1, n):
            if math.cos(xi - state[j]) ** 2 < 1.0 - eps:
                return False
    return True


def run(
    g: NetworkGraph,
    init: NetworkState,
    max_steps: int,
    eps: float,
    rng,
    seed: int | None = None,
) -> Trajectory:
    """Run the protocol until consensus or max_steps slots.

    Hitting max_steps is reported in the trajectory (reached_consensus False),
    not an error. Deterministic given (graph, init, seed, eps, max_steps).
    """
    if len(init) != g.node_count:
        raise ValueError(
            f"initial state has {len(init)} angles but graph has {g.node_count} nodes"
        )
    state = make_state(init)
    traj = Trajectory(initial=state, seed=seed)
    t = 0
    while True:
        if consensus_reached(state, eps):
            traj.reached_consensus = True
            break
        if t >= max_steps:
            break
        edge = select_pair(g, rng)
        state, event = pqp_step(state, edge, rng, t=t)
        traj.events.append(event)
        t += 1
    traj.final = state
    return traj


def replay(initial: NetworkState, events) -> NetworkState:
    """Reapply recorded post-states; must reproduce the trajectory final."""
    state = list(initial)
    for ev in events:
        i, j = ev.edge
        state[i], state[j] = ev.post_states
    return tuple(state)


def evolve_angles(g: NetworkGraph, init, steps: int, rng) -> list[float]:
    """Advance a state by `steps` slots without recording events.

    Consumes the rng stream in the same order as select_pair + pqp_step (four
    uniforms per slot), so it reproduces run() state for state at equal seeds.
    Used by the Monte Carlo batches where event records would dominate cost.
    """
    n = g.node_count
    neighbors = g.neighbors
    x = list(init)
    if steps == 0:
        return x
    draws = rng.random(4 * steps).tolist()
    cos = math.cos
    k = 0
    for _ in range(steps):
        i = int(draws[k] * n)
        if i >= n:
            i = n - 1
        nbrs = neighbors[i]
        j = nbrs[min(int(draws[k + 1] * len(nbrs)), len(nbrs) - 1)]
        a, b = (i, j) if i < j else (j, i)
        xa = x[a]
        xb = x[b]
        m = (xa + xb) / 2.0
        u = m if m < HALF_PI else m - HALF_PI
        hi = u + HALF_PI
        if hi >= PI:
            hi -= PI
        c = cos(u - xa)
        x[a] = u if draws[k + 2] < c * c else hi
        c = cos(u - xb)
        x[b] = u if draws[k + 3] < c * c else hi
        k += 4
    return x


def expected_h_after_step(g: NetworkGraph, state: NetworkState) -> float:
    """Exact one-step conditional expectation of the pairwise-overlap sum,
    enumerated over every edge and all four joint collapse outcomes.

    Test oracle: independent of the closed-form drift it is checked against.
    """
    dist = pair_selection_distribution(g)
    total = 0.0
    for (i, j), p_edge in dist.items():
        u = canonicalize_measurement((state[i] + state[j]) / 2.0)
        for y_i in (Outcome.LEFT, Outcome.RIGHT):
            s_i = eigenstate(u, y_i)
            p_i = math.cos(s_i - state[i]) ** 2
            for y_j in (Outcome.LEFT, Outcome.RIGHT):
                s_j = eigenstate(u, y_j)
                p_j = math.cos(s_j - state[j]) ** 2
                nxt = list(state)
                nxt[i] = s_i
                nxt[j] = s_j
                total += p_edge * p_i * p_j * disagreement_h(tuple(nxt))
    return total


def expected_h_drift(g: NetworkGraph, state: NetworkState) -> float:
    """Closed-form E[h(t+1) | state]: h plus half the selection-weighted
    pairwise infidelities along the edges."""
    dist = pair_selection_distribution(g)
    drift = 0.0
    for (i, j), p_edge in dist.items():
        drift += (p_edge / 2.0) * (1.0 - math.cos(state[i] - state[j]) ** 2)
    return disagreement_h(state) + drift


def trajectory_csv(traj: Trajectory) -> str:
    """Serialize a trajectory: one row per step with the post-step state.

    Columns: t, i, j, u, y_i, y_j, x_1..x_N, h. Node indices 1-based, angles
    with 17 significant digits, outcomes as L/R.
    """
    n = len(traj.initial)
    buf = io.StringIO()
    cols = ["t", "i", "j", "u", "y_i", "y_j"]
    cols += [f"x_{k}" for k in range(1, n + 1)]
    cols += ["h"]
    buf.write(",".join(cols) + "\n")
    state = list(traj.initial)
    for ev in traj.events:
        i, j = ev.edge
        state[i], state[j] = ev.post_states
        row = [
            str(ev.time),
            str(i + 1),
            str(j + 1),
            f"{ev.measurement:.17g}",
            "L" if ev.outcomes[0] == Outcome.LEFT else "R",
            "L" if ev.outcomes[1] == Outcome.LEFT else "R",
        ]
        row += [f"{x:.17g}" for x in state]
        row.append(f"{disagreement_h(tuple(state)):.17g}")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
