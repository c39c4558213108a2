import itertools
import json
import math

import numpy as np
import pytest

from qubitnet import planner, qstate
from qubitnet.errors import BudgetExceededError, ConfigError
from qubitnet.planner import (
    FinitePlan,
    GridSpec,
    agreement_indices,
    expectimax_oracle,
    finite_cost,
    index_state,
    plan_json,
    rollout,
    solve_finite,
    solve_infinite,
    state_index,
    terminal_reward,
    transition_distribution,
    values_csv,
)
from qubitnet.qstate import Outcome
from qubitnet.seeding import make_rng

PI = math.pi


def brute_force_vi(n, k, sweeps=2000, tol=1e-11):
    """Independent stationary solver: dict-based value iteration computing all
    probabilities through the angle-level measurement primitives."""
    step = PI / (2 * k)
    states = list(itertools.product(range(2 * k), repeat=n))
    g = {s: 0.0 for s in states}
    for _ in range(sweeps):
        nxt = {}
        delta = 0.0
        for s in states:
            if all(j == s[0] for j in s):
                nxt[s] = 0.0
                continue
            best = math.inf
            for u in itertools.product(range(k), repeat=n):
                total = 0.0
                for y in itertools.product((Outcome.LEFT, Outcome.RIGHT), repeat=n):
                    prob = 1.0
                    for xi, ui, yi in zip(s, u, y):
                        prob *= qstate.outcome_probability(xi * step, ui * step, yi)
                    if prob == 0.0:
                        continue
                    landing = tuple(ui if yi == Outcome.LEFT else ui + k for ui, yi in zip(u, y))
                    total += prob * g[landing]
                best = min(best, total)
            nxt[s] = 1.0 + best
            delta = max(delta, abs(nxt[s] - g[s]))
        g = nxt
        if delta < tol:
            break
    return g


class TestGridSpec:
    def test_rejects_small_k(self):
        with pytest.raises(ConfigError):
            GridSpec(1)

    def test_grid_closure(self):
        spec = GridSpec(5)
        for u in range(spec.k):
            for x in range(spec.state_count):
                for _, _, nxt in transition_distribution((x,), (u,), spec):
                    assert 0 <= nxt[0] < spec.state_count

    def test_state_grid_extends_measurement_grid(self):
        spec = GridSpec(4)
        for j in range(spec.k):
            assert spec.state_angle(j) == spec.measurement_angle(j)
            shifted = spec.measurement_angle(j) + PI / 2
            assert spec.state_angle(j + spec.k) == pytest.approx(shifted, abs=1e-12)


class TestTransitions:
    def test_eigenstate_input_single_branch(self):
        spec = GridSpec(3)
        branches = transition_distribution((2,), (2,), spec)
        assert branches == [((Outcome.LEFT,), 1.0, (2,))]

    def test_quarter_branches(self):
        spec = GridSpec(2)
        branches = transition_distribution((0, 2), (1, 1), spec)
        assert len(branches) == 4
        for _, prob, _ in branches:
            assert prob == pytest.approx(0.25, abs=1e-12)
        # lexicographic outcome enumeration, LEFT before RIGHT
        outcomes = [y for y, _, _ in branches]
        assert outcomes == sorted(outcomes)

    def test_aligned_pair_prunes_to_one_branch(self):
        spec = GridSpec(2)
        branches = transition_distribution((0, 0), (0, 0), spec)
        assert branches == [((Outcome.LEFT, Outcome.LEFT), 1.0, (0, 0))]

    def test_probabilities_sum_to_one(self):
        spec = GridSpec(4)
        rng = make_rng(21)
        for _ in range(50):
            x = tuple(int(v * 8) for v in rng.random(3))
            u = tuple(int(v * 4) for v in rng.random(3))
            total = sum(p for _, p, _ in transition_distribution(x, u, spec))
            assert abs(total - 1.0) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            transition_distribution((0, 1), (0,), GridSpec(2))


class TestTerminalReward:
    def test_examples(self):
        spec = GridSpec(2)
        assert terminal_reward((1, 1), spec, 2) == pytest.approx(4.0, abs=1e-12)
        assert terminal_reward((1, 1), spec, 1) == pytest.approx(4.0, abs=1e-12)
        assert terminal_reward((0, 2), spec, 2) == pytest.approx(2.0, abs=1e-12)
        assert terminal_reward((0, 2), spec, 1) == pytest.approx(2.0, abs=1e-12)
        assert terminal_reward((0, 1), spec, 2) == pytest.approx(3.0, abs=1e-12)

    def test_bounds(self):
        spec = GridSpec(3)
        for idx in range(36):
            st = index_state(idx, 2, 6)
            r = terminal_reward(st, spec, 2)
            assert 2.0 - 1e-12 <= r <= 4.0 + 1e-12

    def test_bad_power(self):
        with pytest.raises(ConfigError):
            terminal_reward((0,), GridSpec(2), 3)


class TestFiniteHorizon:
    def test_agreement_states_saturate(self):
        spec = GridSpec(2)
        plan = solve_finite(2, spec, horizon=3, power=2)
        for j in range(4):
            for t in range(4):
                assert plan.values[t, state_index((j, j), 4)] == pytest.approx(4.0, abs=1e-12)

    def test_orthogonal_pair_values(self):
        spec = GridSpec(2)
        assert solve_finite(2, spec, 1, 2).value_at((0, 2), 0) == pytest.approx(3.0, abs=1e-12)
        assert solve_finite(2, spec, 2, 2).value_at((0, 2), 0) == pytest.approx(3.5, abs=1e-12)

    def test_matches_expectimax_oracle(self):
        spec = GridSpec(2)
        for horizon in (1, 2):
            plan = solve_finite(2, spec, horizon, power=2)
            for idx in range(16):
                st = index_state(idx, 2, 4)
                oracle = expectimax_oracle(2, spec, horizon, 2, st)
                assert abs(plan.value_at(st, 0) - oracle) <= 1e-12

    def test_matches_oracle_power_one(self):
        spec = GridSpec(2)
        plan = solve_finite(2, spec, 1, power=1)
        for idx in range(16):
            st = index_state(idx, 2, 4)
            assert abs(plan.value_at(st, 0) - expectimax_oracle(2, spec, 1, 1, st)) <= 1e-12

    def test_monotone_in_horizon(self):
        spec = GridSpec(2)
        plan = solve_finite(2, spec, horizon=4, power=2)
        for t in range(plan.horizon):
            assert np.all(plan.values[t] >= plan.values[t + 1] - 1e-12)

    def test_values_bounded(self):
        spec = GridSpec(2)
        plan = solve_finite(2, spec, horizon=3, power=2)
        for idx in range(16):
            st = index_state(idx, 2, 4)
            terminal = terminal_reward(st, spec, 2)
            for t in range(4):
                assert terminal - 1e-12 <= plan.values[t, idx] <= 4.0 + 1e-12

    def test_midpoint_action_attains_optimum(self):
        # several actions tie at the optimum for the orthogonal pair; the
        # common-midpoint measurement must be among them
        spec = GridSpec(2)
        plan = solve_finite(2, spec, 1, 2)
        branches = transition_distribution((0, 2), (1, 1), spec)
        q = sum(p * terminal_reward(nxt, spec, 2) for _, p, nxt in branches)
        assert q == pytest.approx(plan.value_at((0, 2), 0), abs=1e-12)

    def test_policy_action_is_consistent(self):
        spec = GridSpec(2)
        plan = solve_finite(2, spec, 1, 2)
        for idx in range(16):
            st = index_state(idx, 2, 4)
            u = plan.action_at(st, 0)
            branches = transition_distribution(st, u, spec)
            q = sum(p * terminal_reward(nxt, spec, 2) for _, p, nxt in branches)
            assert q == pytest.approx(plan.value_at(st, 0), abs=1e-12)

    def test_single_qubit_degenerate(self):
        spec = GridSpec(2)
        plan = solve_finite(1, spec, 1, 2)
        for j in range(4):
            assert plan.value_at((j,), 0) == pytest.approx(1.0, abs=1e-12)

    def test_budget_refusal(self):
        with pytest.raises(BudgetExceededError) as exc:
            solve_finite(4, GridSpec(8), horizon=5)
        assert exc.value.estimated_ops == 21474836480
        assert exc.value.estimated_ops == finite_cost(4, 8, 5)

    def test_oracle_budget_refusal(self):
        with pytest.raises(BudgetExceededError):
            expectimax_oracle(3, GridSpec(4), 4, 2, (0, 0, 0))


class TestInfiniteHorizon:
    def test_agreement_is_zero(self):
        plan = solve_infinite(2, GridSpec(4))
        for idx in agreement_indices(2, GridSpec(4)):
            assert plan.values[idx] == 0.0

    def test_orthogonal_and_diagonal_values(self):
        plan = solve_infinite(2, GridSpec(4))
        assert plan.value_at((0, 2)) == pytest.approx(1.5, abs=1e-6)
        assert plan.value_at((0, 4)) == pytest.approx(2.0, abs=1e-6)

    def test_analytic_pair_law_on_grid(self):
        # wherever the midpoint is grid-representable the optimum is one step
        # plus the squared sine of the angle difference
        k = 4
        plan = solve_infinite(2, GridSpec(k))
        for idx in range(64):
            st = index_state(idx, 2, 2 * k)
            if st[0] == st[1] or (st[0] + st[1]) % 2 != 0:
                continue
            target = 1.0 + math.sin((st[0] - st[1]) * PI / (2 * k)) ** 2
            assert plan.value_at(st) == pytest.approx(target, abs=1e-6)

    def test_analytic_pair_law_at_k8(self):
        plan = solve_infinite(2, GridSpec(8), budget=10**11)
        for idx in range(256):
            st = index_state(idx, 2, 16)
            if st[0] == st[1] or (st[0] + st[1]) % 2 != 0:
                continue
            target = 1.0 + math.sin((st[0] - st[1]) * PI / 16) ** 2
            assert plan.value_at(st) == pytest.approx(target, abs=1e-6)

    def test_off_agreement_at_least_one(self):
        plan = solve_infinite(2, GridSpec(4))
        agree = set(agreement_indices(2, GridSpec(4)).tolist())
        for idx in range(64):
            if idx not in agree:
                assert plan.values[idx] >= 1.0 - 1e-12

    def test_matches_brute_force_oracle(self):
        plan = solve_infinite(2, GridSpec(4))
        oracle = brute_force_vi(2, 4)
        for st, val in oracle.items():
            assert plan.value_at(st) == pytest.approx(val, abs=1e-8)

    def test_iterates_monotone_nondecreasing(self):
        spec = GridSpec(4)
        pl, pr = planner._per_action_factors(spec)
        agree = agreement_indices(2, spec)
        values = np.zeros(spec.state_count**2)
        for _ in range(30):
            expect, _ = planner._sweep(values, 2, spec, pl, pr, minimize=True)
            nxt = 1.0 + expect
            nxt[agree] = 0.0
            assert np.all(nxt >= values - 1e-12)
            values = nxt

    def test_budget_refusal_uses_iteration_cap(self):
        with pytest.raises(BudgetExceededError):
            solve_infinite(2, GridSpec(8))  # default cap makes this exceed 1e9


class TestRollout:
    def test_finite_rollout_matches_value(self):
        spec = GridSpec(2)
        plan = solve_finite(2, spec, 1, 2)
        stats = rollout(plan, (0, 2), make_rng(22), trials=20000)
        assert abs(stats.mean - 3.0) <= 4 * stats.se

    def test_stationary_rollout_matches_value(self):
        plan = solve_infinite(2, GridSpec(4))
        stats = rollout(plan, (0, 2), make_rng(23), trials=20000)
        assert abs(stats.mean - 1.5) <= 4 * stats.se

    def test_agreement_start_hits_immediately(self):
        plan = solve_infinite(2, GridSpec(4))
        stats = rollout(plan, (3, 3), make_rng(24), trials=50)
        assert stats.mean == 0.0
        assert stats.se == 0.0

    def test_bad_init_rejected(self):
        plan = solve_infinite(2, GridSpec(4))
        with pytest.raises(ValueError):
            rollout(plan, (0, 9), make_rng(0), trials=5)


class TestExport:
    def test_finite_json_schema(self):
        spec = GridSpec(2)
        plan = solve_finite(2, spec, 2, 2)
        obj = plan_json(plan)
        assert set(obj) == {"n", "k", "horizon", "power", "values", "actions"}
        assert obj["horizon"] == 2
        assert len(obj["values"]) == 3 and len(obj["values"][0]) == 16
        assert len(obj["actions"]) == 2
        assert obj["actions"][0][0] == list(plan.action_at((0, 0), 0))
        json.dumps(obj)  # serializable

    def test_stationary_json_schema(self):
        plan = solve_infinite(2, GridSpec(4))
        obj = plan_json(plan)
        assert obj["horizon"] == "stationary"
        assert obj["power"] is None
        assert len(obj["values"]) == 64
        assert len(obj["actions"]) == 64
        json.dumps(obj)

    def test_values_csv_mixed_radix_order(self):
        plan = solve_infinite(2, GridSpec(2))
        lines = values_csv(plan).strip().split("\n")
        assert lines[0] == "x_1,x_2,value"
        assert lines[1].startswith("0,0,")
        assert lines[2].startswith("0,1,")
        assert len(lines) == 17

    def test_finite_values_csv_has_time_column(self):
        plan = solve_finite(1, GridSpec(2), 1, 2)
        lines = values_csv(plan).strip().split("\n")
        assert lines[0] == "t,x_1,value"
        assert len(lines) == 1 + 2 * 4
