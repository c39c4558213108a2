"""Acceptance suite: one test per criterion, each at its stated tolerance and
runtime limit, printing a PASS line on success (run with -s to see them)."""

import json
import math
import time

import numpy as np
import pytest

from qubitnet import cli
from qubitnet.density import (
    convergence_rate_check,
    density_vector,
    monte_carlo_density,
    propagate_expected,
)
from qubitnet.graph import complete_graph, lambda2, laplacian, path_graph, ring_graph
from qubitnet.planner import (
    GridSpec,
    expectimax_oracle,
    index_state,
    rollout,
    solve_finite,
    solve_infinite,
)
from qubitnet.pqp import (
    disagreement_h,
    expected_h_after_step,
    expected_h_drift,
    make_state,
    run,
)
from qubitnet.qstate import Outcome, measure, outcome_probability
from qubitnet.seeding import make_rng, seed_stream

PI = math.pi
HALF_PI = math.pi / 2
INIT6 = (0.0, 0.0, 0.0, HALF_PI, HALF_PI, HALF_PI)


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.monotonic() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"exceeded {self.limit}s ({self.elapsed:.1f}s)"

    def report(self, criterion, text):
        print(f"PASS criterion {criterion}: {text} [{self.elapsed:.1f}s]")


def test_criterion_01_born_normalization_and_sampling():
    with Timer(10) as t:
        step = PI / 200
        for ix in range(200):
            for iu in range(100):
                total = outcome_probability(ix * step, iu * step, Outcome.LEFT)
                total += outcome_probability(ix * step, iu * step, Outcome.RIGHT)
                assert abs(total - 1.0) <= 1e-12
        n = 100000
        for pos, (x, u) in enumerate([(PI / 4, 0.0), (PI / 8, 0.3), (2.9, 1.1)]):
            p = outcome_probability(x, u, Outcome.LEFT)
            rng = make_rng(seed_stream(1, pos))
            hits = sum(1 for _ in range(n) if measure(x, u, rng)[0] == Outcome.LEFT)
            assert abs(hits / n - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12
    t.report(1, "Born normalization on pi/200 grid and 1e5-draw frequencies")


def test_criterion_02_one_step_pair_averaging():
    with Timer(10) as t:
        g = complete_graph(2)
        mean, se = monte_carlo_density(g, (0.0, HALF_PI), 1, 100000, seed=2)
        err = np.abs(mean - 0.5 * np.eye(2))
        assert np.all(err <= 4 * se + 1e-12)
        assert err.max() < 0.01
    t.report(2, "1e5-trial mean density of an orthogonal pair is I/2 after one step")


def test_criterion_03_expected_density_matches_monte_carlo():
    with Timer(120) as t:
        cases = [
            (complete_graph(6), INIT6),
            (ring_graph(6), INIT6),
            (path_graph(3), (0.0, 0.0, HALF_PI)),
        ]
        for g, init in cases:
            rho0 = density_vector(init)
            for steps in (1, 5, 20):
                exact = propagate_expected(g, rho0, steps)
                mean, se = monte_carlo_density(g, init, steps, 100000, seed=3)
                z = np.abs(mean - exact) / np.where(se > 0, se, 1.0)
                assert z.max() <= 4.0, (g.node_count, steps, float(z.max()))
    t.report(3, "1e5-trial Monte Carlo densities match the linear law at t in {1,5,20}")


def test_criterion_04_spectral_rate():
    with Timer(5) as t:
        for n in range(2, 11):
            gap = lambda2(laplacian(complete_graph(n)))
            assert abs(gap - 1.0 / (n - 1)) <= 1e-10
        rho0 = density_vector(INIT6)
        report = convergence_rate_check(complete_graph(6), rho0, 50)
        assert report.bound_ok
        for ratio in report.ratios:
            assert abs(ratio - 0.8) <= 1e-10
        report3 = convergence_rate_check(
            path_graph(3), density_vector((0.0, 0.0, HALF_PI)), 50
        )
        assert report3.bound_ok
        trivial = convergence_rate_check(
            complete_graph(3), density_vector((0.4, 0.4, 0.4)), 20
        )
        assert trivial.bound_ok
    t.report(4, "complete-graph gaps, 0.8 deviation ratios, exponential bound on presets")


def test_criterion_05_exact_one_step_drift():
    with Timer(5) as t:
        rng = make_rng(5)
        for g in (complete_graph(6), path_graph(3)):
            for _ in range(100):
                state = make_state(tuple(rng.random(g.node_count) * PI))
                enum = expected_h_after_step(g, state)
                closed = expected_h_drift(g, state)
                assert abs(enum - closed) <= 1e-12
    t.report(5, "enumerated one-step drift equals the closed form on 100 random states")


def test_criterion_06_desk_scale_convergence():
    with Timer(30) as t:
        g = complete_graph(6)
        init = make_state(INIT6)
        horizon = 2000
        runs = 100
        h_curves = np.empty((runs, horizon + 1))
        for trial in range(runs):
            rng = make_rng(seed_stream(6, trial))
            traj = run(g, init, horizon, 1e-9, rng)
            assert traj.reached_consensus, f"run {trial} missed consensus"
            state = list(traj.initial)
            h = disagreement_h(tuple(state))
            h_curves[trial, 0] = h
            for tt in range(horizon):
                if tt < len(traj.events):
                    ev = traj.events[tt]
                    i, j = ev.edge
                    state[i], state[j] = ev.post_states
                    h = disagreement_h(tuple(state))
                h_curves[trial, tt + 1] = h
        assert h_curves.max() <= 15.0 + 1e-9
        diffs = np.diff(h_curves, axis=1)
        mean_diff = diffs.mean(axis=0)
        se_diff = diffs.std(axis=0, ddof=1) / math.sqrt(runs)
        assert np.all(mean_diff >= -4.0 * se_diff - 1e-12)
    t.report(6, "100/100 six-node runs reach consensus; mean h never drops beyond 4 SE")


def test_criterion_07_pair_hitting_time():
    with Timer(5) as t:
        g = complete_graph(2)
        init = make_state((0.0, HALF_PI))
        total = 0
        for trial in range(10000):
            rng = make_rng(seed_stream(7, trial))
            traj = run(g, init, 1000, 1e-9, rng)
            total += traj.consensus_time
        mean = total / 10000
        assert abs(mean - 2.0) <= 0.05
    t.report(7, f"orthogonal-pair mean consensus time {mean:.3f} within 2.0 +/- 0.05")


def test_criterion_08_finite_horizon_dp_vs_oracle():
    with Timer(5) as t:
        spec = GridSpec(2)
        plans = {h: solve_finite(2, spec, h, power=2) for h in (1, 2)}
        for horizon, plan in plans.items():
            for idx in range(16):
                st = index_state(idx, 2, 4)
                oracle = expectimax_oracle(2, spec, horizon, 2, st)
                assert abs(plan.value_at(st, 0) - oracle) <= 1e-12
            for tt in range(horizon):
                assert np.all(plan.values[tt] >= plan.values[tt + 1] - 1e-12)
        assert abs(plans[1].value_at((0, 2), 0) - 3.0) <= 1e-12
        assert abs(plans[2].value_at((0, 2), 0) - 3.5) <= 1e-12
    t.report(8, "finite-horizon DP equals the expectimax oracle; C = 3 and 3.5")


def test_criterion_09_infinite_horizon_dp():
    with Timer(30) as t:
        k = 4
        plan = solve_infinite(2, GridSpec(k))
        assert abs(plan.value_at((0, 2)) - 1.5) <= 1e-6
        assert abs(plan.value_at((0, 4)) - 2.0) <= 1e-6
        for idx in range(64):
            st = index_state(idx, 2, 2 * k)
            if st[0] == st[1] or (st[0] + st[1]) % 2 != 0:
                continue
            target = 1.0 + math.sin((st[0] - st[1]) * PI / (2 * k)) ** 2
            assert abs(plan.value_at(st) - target) <= 1e-6
        stats = rollout(plan, (0, 2), make_rng(9), trials=100000)
        assert abs(stats.mean - plan.value_at((0, 2))) <= 4 * stats.se
    t.report(9, "stationary DP matches 1 + sin^2 law; 1e5-trial rollout agrees")


def test_criterion_10_complexity_guard(tmp_path, capsys):
    with Timer(1) as t:
        code = cli.main(
            [
                "plan-finite",
                "--init", "0,0,0,0",
                "--k", "8",
                "--t", "5",
                "--out", str(tmp_path / "refused"),
            ]
        )
        captured = capsys.readouterr()
        assert code == 3
        assert captured.err.startswith("ERROR[budget]:")
        assert "21474836480" in captured.err
    t.report(10, "four-qubit K=8 T=5 plan refused with exit 3 and printed estimate")


def test_criterion_11_reproducibility(tmp_path):
    with Timer(30) as t:
        jobs = [
            ["simulate", "--preset", "k6-sample"],
            ["density", "--preset", "k6-deviation"],
        ]
        for job in jobs:
            dirs = []
            for attempt in ("first", "second"):
                out = tmp_path / f"{job[0]}_{attempt}"
                assert cli.main(job + ["--out", str(out)]) == 0
                dirs.append(out)
            first = sorted(p.name for p in dirs[0].iterdir())
            second = sorted(p.name for p in dirs[1].iterdir())
            assert first == second
            for name in first:
                assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name
    t.report(11, "preset reruns with equal seeds emit byte-identical artifacts")
