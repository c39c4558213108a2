"""Centralized measurement planners over the discretized angle grid.

The measurement circle is discretized into K angles j*pi/(2K), j = 0..K-1;
the induced state grid has 2K points (every eigenstate of a grid measurement
is again a grid point, by integer index arithmetic). States and actions are
integer index vectors end to end; trigonometry enters only through the Born
probabilities, so agreement detection and post-measurement states are exact.

solve_finite maximizes the expected terminal pairwise-fidelity sum by backward
recursion; solve_infinite minimizes the expected number of slots to exact
agreement by value iteration on the stochastic shortest-path equation. Both
refuse instances whose estimated operation count exceeds the budget, since
the sweep cost grows like (2K)^N * K^N * 2^N per stage.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import qstate
from .errors import BudgetExceededError, ConfigError, NumericalError
from .qstate import Outcome

DEFAULT_BUDGET = 10**9
DEFAULT_VI_TOL = 1e-10
DEFAULT_MAX_ITERS = 10**5


@dataclass(frozen=True)
class GridSpec:
    """Discretization with K measurement angles and 2K state angles."""

    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2:
            raise ConfigError(f"grid needs K >= 2 measurement angles, got {self.k!r}")

    @property
    def state_count(self) -> int:
        return 2 * self.k

    @property
    def step(self) -> float:
        return math.pi / (2 * self.k)

    def state_angle(self, j: int) -> float:
        return j * self.step

    def measurement_angle(self, j: int) -> float:
        return j * self.step


def born_left_table(spec: GridSpec) -> list[float]:
    """p[d] = probability of the LEFT outcome when the measurement index leads
    the state index by d (mod 2K). Exact 1 at d = 0 and exact 0 at d = K, so
    on-grid orthogonality prunes to true zero-probability branches."""
    k = spec.k
    table = []
    for d in range(2 * k):
        if d == 0:
            table.append(1.0)
        elif d == k:
            table.append(0.0)
        else:
            table.append(math.cos(d * spec.step) ** 2)
    return table


def _overlap_table(spec: GridSpec, power: int) -> list[float]:
    """|cos(d*step)|^power over index differences, with exact 1/0 endpoints."""
    k = spec.k
    table = []
    for d in range(2 * k):
        if d == 0:
            table.append(1.0)
        elif d == k:
            table.append(0.0)
        else:
            table.append(abs(math.cos(d * spec.step)) ** power)
    return table


def state_index(x, base: int) -> int:
    """Mixed-radix index of an index vector (first coordinate most significant)."""
    idx = 0
    for j in x:
        idx = idx * base + j
    return idx


def index_state(idx: int, n: int, base: int) -> tuple[int, ...]:
    out = [0] * n
    for pos in range(n - 1, -1, -1):
        out[pos] = idx % base
        idx //= base
    return tuple(out)


def transition_distribution(x, u, spec: GridSpec):
    """All collapse branches for measuring state vector x with action u.

    Enumerates outcome vectors lexicographically (LEFT < RIGHT); branch
    probability is the product of per-qubit Born factors; the next state is
    u_i (LEFT) or u_i + K (RIGHT) by integer arithmetic. Branches of exactly
    zero probability are pruned. Returns (outcomes, probability, next_state)
    triples; probabilities sum to one.
    """
    n = len(x)
    if len(u) != n:
        raise ValueError(f"action length {len(u)} does not match state length {n}")
    k = spec.k
    m = 2 * k
    for j in x:
        if not 0 <= j < m:
            raise ValueError(f"state index {j} outside 0..{m - 1}")
    for j in u:
        if not 0 <= j < k:
            raise ValueError(f"measurement index {j} outside 0..{k - 1}")
    left = born_left_table(spec)
    branches = []
    for y in itertools.product((Outcome.LEFT, Outcome.RIGHT), repeat=n):
        prob = 1.0
        nxt = []
        for xi, ui, yi in zip(x, u, y):
            d = (ui - xi) % m
            prob *= left[d] if yi == Outcome.LEFT else left[(d + k) % m]
            nxt.append(ui if yi == Outcome.LEFT else ui + k)
        if prob == 0.0:
            continue
        branches.append((y, prob, tuple(nxt)))
    return branches


def terminal_reward(x, spec: GridSpec, power: int = 2) -> float:
    """Sum of |<x_i|x_j>|^power over ordered pairs including i = j.

    Ranges over [N, N^2] and equals N^2 exactly at full agreement.
    """
    if power not in (1, 2):
        raise ConfigError(f"power must be 1 or 2, got {power!r}")
    table = _overlap_table(spec, power)
    m = 2 * spec.k
    n = len(x)
    total = float(n)  # diagonal terms
    for i in range(n):
        for j in range(i + 1, n):
            total += 2.0 * table[(x[i] - x[j]) % m]
    return total


def finite_cost(n: int, k: int, horizon: int) -> int:
    """Operation estimate of the finite-horizon sweep."""
    return (2 * k) ** n * k**n * 2**n * horizon


def check_budget(cost: int, budget: int) -> None:
    if cost > budget:
        raise BudgetExceededError(cost, budget)


@dataclass(frozen=True)
class FinitePlan:
    n: int
    spec: GridSpec
    horizon: int
    power: int
    values: np.ndarray  # (horizon+1, (2K)^N)
    actions: np.ndarray  # (horizon, (2K)^N), mixed-radix action indices

    def value_at(self, x, t: int = 0) -> float:
        return float(self.values[t, state_index(x, self.spec.state_count)])

    def action_at(self, x, t: int) -> tuple[int, ...]:
        a = int(self.actions[t, state_index(x, self.spec.state_count)])
        return index_state(a, self.n, self.spec.k)


@dataclass(frozen=True)
class StationaryPlan:
    n: int
    spec: GridSpec
    values: np.ndarray  # ((2K)^N,)
    actions: np.ndarray  # ((2K)^N,)
    iterations: int

    def value_at(self, x) -> float:
        return float(self.values[state_index(x, self.spec.state_count)])

    def action_at(self, x) -> tuple[int, ...]:
        a = int(self.actions[state_index(x, self.spec.state_count)])
        return index_state(a, self.n, self.spec.k)


def _per_action_factors(spec: GridSpec):
    """Probability columns per measurement index: PL[u][x] and PR[u][x] give
    the LEFT/RIGHT probability as a function of the state index x."""
    k = spec.k
    m = 2 * k
    left = born_left_table(spec)
    pl = np.empty((k, m))
    pr = np.empty((k, m))
    for u in range(k):
        for x in range(m):
            d = (u - x) % m
            pl[u, x] = left[d]
            pr[u, x] = left[(d + k) % m]
    return pl, pr


def _sweep(values_next: np.ndarray, n: int, spec: GridSpec, pl, pr, minimize: bool):
    """One Bellman sweep over every state, vectorized over the state grid.

    For each action the branch next-state is state-independent, so the
    expectation is a sum of scalar next-values times outer products of
    per-qubit probability columns. Updates read only values_next, never the
    array being built, so the sweep order cannot matter. Returns the new value
    array and the argmax/argmin action indices, ties broken by the smallest
    lexicographic action.
    """
    k = spec.k
    m = 2 * k
    size = m**n
    best = None
    best_action = np.zeros(size, dtype=np.int64)
    for a_idx, u in enumerate(itertools.product(range(k), repeat=n)):
        w = np.zeros(size)
        for y in itertools.product((0, 1), repeat=n):
            nxt = tuple(u[i] + k * y[i] for i in range(n))
            v = values_next[state_index(nxt, m)]
            if v == 0.0:
                continue
            factors = [pl[u[i]] if y[i] == 0 else pr[u[i]] for i in range(n)]
            w += v * reduce(np.multiply.outer, factors).ravel()
        if best is None:
            best = w
        else:
            improved = (w < best) if minimize else (w > best)
            best_action[improved] = a_idx
            best = np.where(improved, w, best)
    return best, best_action


def solve_finite(
    n: int,
    spec: GridSpec,
    horizon: int,
    power: int = 2,
    budget: int = DEFAULT_BUDGET,
) -> FinitePlan:
    """Backward recursion for the maximal expected terminal reward.

    values[t] satisfies terminal_reward(x) <= C(x,t) <= C(x,t-1) <= N^2:
    measuring each qubit at its own angle mod pi/2 is an on-grid no-op, so
    value can never decrease with a longer horizon.
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    check_budget(finite_cost(n, spec.k, horizon), budget)
    m = spec.state_count
    size = m**n
    values = np.empty((horizon + 1, size))
    actions = np.empty((horizon, size), dtype=np.int64)
    for idx in range(size):
        values[horizon, idx] = terminal_reward(index_state(idx, n, m), spec, power)
    pl, pr = _per_action_factors(spec)
    for t in range(horizon - 1, -1, -1):
        values[t], actions[t] = _sweep(values[t + 1], n, spec, pl, pr, minimize=False)
    return FinitePlan(n=n, spec=spec, horizon=horizon, power=power, values=values, actions=actions)


def agreement_indices(n: int, spec: GridSpec) -> np.ndarray:
    """Mixed-radix indices of the states with all coordinates equal."""
    m = spec.state_count
    stride = sum(m**p for p in range(n))
    return np.array([j * stride for j in range(m)], dtype=np.int64)


def solve_infinite(
    n: int,
    spec: GridSpec,
    vi_tol: float = DEFAULT_VI_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    budget: int = DEFAULT_BUDGET,
) -> StationaryPlan:
    """Value iteration for the minimal expected number of slots to agreement.

    G is pinned to zero on the agreement set; iterates start from zero and
    increase pointwise to the fixed point of G = 1 + min_u E[G(next)]. Stops
    when the sup-norm change drops below vi_tol.
    """
    if vi_tol <= 0:
        raise ConfigError(f"vi_tol must be positive, got {vi_tol}")
    check_budget(finite_cost(n, spec.k, max_iters), budget)
    m = spec.state_count
    size = m**n
    agree = agreement_indices(n, spec)
    pl, pr = _per_action_factors(spec)
    values = np.zeros(size)
    actions = np.zeros(size, dtype=np.int64)
    for iteration in range(1, max_iters + 1):
        expect, actions = _sweep(values, n, spec, pl, pr, minimize=True)
        new_values = 1.0 + expect
        new_values[agree] = 0.0
        delta = float(np.max(np.abs(new_values - values)))
        values = new_values
        if delta < vi_tol:
            return StationaryPlan(
                n=n, spec=spec, values=values, actions=actions, iterations=iteration
            )
    raise NumericalError(
        f"value iteration did not converge within {max_iters} iterations "
        f"(last sup-norm change {delta:.3e})"
    )


ORACLE_BUDGET = 10**7


def expectimax_oracle(
    n: int,
    spec: GridSpec,
    horizon: int,
    power: int,
    x,
    budget: int = ORACLE_BUDGET,
) -> float:
    """Optimal expected terminal reward by explicit recursion over the full
    action/outcome tree, no memoization, all arithmetic on angles through the
    measurement primitives. Verification oracle for small instances only.
    """
    cost = (spec.k**n * 2**n) ** horizon
    check_budget(cost, budget)
    meas_angles = [spec.measurement_angle(j) for j in range(spec.k)]

    def reward(angles) -> float:
        total = 0.0
        for a in angles:
            for b in angles:
                total += qstate.fidelity(a, b) ** power
        return total

    def best_value(angles, depth: int) -> float:
        if depth == horizon:
            return reward(angles)
        best = -math.inf
        for u in itertools.product(meas_angles, repeat=n):
            total = 0.0
            for y in itertools.product((Outcome.LEFT, Outcome.RIGHT), repeat=n):
                prob = 1.0
                for xi, ui, yi in zip(angles, u, y):
                    prob *= qstate.outcome_probability(xi, ui, yi)
                if prob == 0.0:
                    continue
                nxt = [qstate.eigenstate(ui, yi) for ui, yi in zip(u, y)]
                total += prob * best_value(nxt, depth + 1)
            best = max(best, total)
        return best

    return best_value([spec.state_angle(j) for j in x], 0)


@dataclass(frozen=True)
class RolloutStats:
    mean: float
    se: float
    trials: int


def rollout(plan, init, rng, trials: int, step_cap: int = 10**6) -> RolloutStats:
    """Monte Carlo execution of a computed policy.

    Finite plans report the sample mean and standard error of the terminal
    reward; stationary plans report those of the hitting time of exact index
    agreement. Outcome sampling consumes one uniform variate per qubit per
    slot in ascending node order.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    spec = plan.spec
    k = spec.k
    m = spec.state_count
    left = born_left_table(spec)
    n = plan.n
    init = tuple(init)
    if len(init) != n:
        raise ValueError(f"initial state has {len(init)} entries, plan expects {n}")
    for j in init:
        if not 0 <= j < m:
            raise ValueError(f"state index {j} outside 0..{m - 1}")
    finite = isinstance(plan, FinitePlan)

    total = 0.0
    total_sq = 0.0
    for _ in range(trials):
        x = init
        if finite:
            for t in range(plan.horizon):
                u = plan.action_at(x, t)
                x = _sample_next(x, u, k, m, left, rng)
            sample = terminal_reward(x, spec, plan.power)
        else:
            steps = 0
            while any(j != x[0] for j in x):
                if steps >= step_cap:
                    raise NumericalError(
                        f"rollout exceeded {step_cap} steps without reaching agreement"
                    )
                u = plan.action_at(x)
                x = _sample_next(x, u, k, m, left, rng)
                steps += 1
            sample = float(steps)
        total += sample
        total_sq += sample * sample
    mean = total / trials
    if trials > 1:
        var = max(0.0, (total_sq - total * total / trials) / (trials - 1))
        se = math.sqrt(var / trials)
    else:
        se = 0.0
    return RolloutStats(mean=mean, se=se, trials=trials)


def _sample_next(x, u, k, m, left, rng):
    nxt = []
    for xi, ui in zip(x, u):
        p_left = left[(ui - xi) % m]
        nxt.append(ui if rng.random() < p_left else ui + k)
    return tuple(nxt)


def plan_json(plan) -> dict:
    """Policy export object: states ordered by mixed-radix index, actions as
    measurement-index vectors."""
    spec = plan.spec
    if isinstance(plan, FinitePlan):
        return {
            "n": plan.n,
            "k": spec.k,
            "horizon": plan.horizon,
            "power": plan.power,
            "values": [[float(v) for v in row] for row in plan.values],
            "actions": [
                [list(index_state(int(a), plan.n, spec.k)) for a in row]
                for row in plan.actions
            ],
        }
    return {
        "n": plan.n,
        "k": spec.k,
        "horizon": "stationary",
        "power": None,
        "values": [float(v) for v in plan.values],
        "actions": [list(index_state(int(a), plan.n, spec.k)) for a in plan.actions],
    }


def values_csv(plan) -> str:
    """Value tables as CSV rows of state indices and value."""
    spec = plan.spec
    m = spec.state_count
    n = plan.n
    idx_cols = ",".join(f"x_{i}" for i in range(1, n + 1))
    lines = []
    if isinstance(plan, FinitePlan):
        lines.append(f"t,{idx_cols},value")
        for t in range(plan.horizon + 1):
            for idx in range(m**n):
                st = index_state(idx, n, m)
                lines.append(
                    f"{t}," + ",".join(str(j) for j in st) + f",{plan.values[t, idx]:.17g}"
                )
    else:
        lines.append(f"{idx_cols},value")
        for idx in range(m**n):
            st = index_state(idx, n, m)
            lines.append(",".join(str(j) for j in st) + f",{plan.values[idx]:.17g}")
    return "\n".join(lines) + "\n"
