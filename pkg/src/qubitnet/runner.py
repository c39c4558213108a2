"""Batch execution and artifact writing for every CLI mode.

All emitted CSV/JSON artifacts are byte-identical for identical (config,
seed): floats are printed with 17 significant digits, JSON keys are sorted,
trial reduction happens in trial order regardless of worker count, and
wall-clock times never enter the files.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import statistics
from dataclasses import dataclass, field

import numpy as np

from . import checks, density, planner, pqp
from .config import ExperimentConfig
from .errors import ConfigError
from .graph import jacobi_eigh, lambda2, laplacian, pair_selection_distribution
from .seeding import make_rng, seed_stream


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_json(path: str, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


@dataclass
class RunRecord:
    trial: int
    seed: int
    consensus_time: int | None
    censored: bool
    steps: int
    final_h: float


@dataclass
class BatchResult:
    mode: str
    out_dir: str | None
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    check_results: list[checks.CheckResult] = field(default_factory=list)


def _trial_payload(args):
    """One simulate trial; top-level so worker processes can import it."""
    g, init, horizon, eps, seed, want_traj, want_states = args
    rng = make_rng(seed)
    traj = pqp.run(g, init, horizon, eps, rng, seed=seed)
    record = (
        traj.consensus_time,
        not traj.reached_consensus,
        len(traj.events),
        pqp.disagreement_h(traj.final),
    )
    csv_text = pqp.trajectory_csv(traj) if want_traj else None
    states = None
    if want_states:
        n = len(traj.initial)
        states = np.empty((horizon + 1, n))
        state = list(traj.initial)
        states[0] = state
        for tt in range(horizon):
            if tt < len(traj.events):
                ev = traj.events[tt]
                i, j = ev.edge
                state[i], state[j] = ev.post_states
            states[tt + 1] = state
    return record, csv_text, states


def _simulate(cfg: ExperimentConfig, result: BatchResult) -> None:
    g = cfg.build_graph()
    init = cfg.init_angles
    want_states = cfg.trials >= 2
    args = [
        (g, init, cfg.horizon, cfg.eps, seed_stream(cfg.seed, trial), cfg.save_trajectories, want_states)
        for trial in range(cfg.trials)
    ]

    if cfg.workers > 1:
        executor = concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers)
        chunk = max(1, cfg.trials // (cfg.workers * 4))
        payloads = executor.map(_trial_payload, args, chunksize=chunk)
    else:
        executor = None
        payloads = map(_trial_payload, args)

    records: list[RunRecord] = []
    angle_sums = np.zeros((cfg.horizon + 1, g.node_count)) if want_states else None
    try:
        for trial, (rec, csv_text, states) in enumerate(payloads):
            consensus_time, censored, steps, final_h = rec
            records.append(
                RunRecord(trial, args[trial][4], consensus_time, censored, steps, final_h)
            )
            if csv_text is not None:
                path = os.path.join(result.out_dir, f"trajectory_{trial:05d}.csv")
                _write_text(path, csv_text)
                result.files.append(path)
            if states is not None:
                angle_sums += states
    finally:
        if executor is not None:
            executor.shutdown()

    runs_path = os.path.join(result.out_dir, "runs.csv")
    lines = ["trial,seed,consensus_time,censored,steps,final_h"]
    for r in records:
        ct = "" if r.consensus_time is None else str(r.consensus_time)
        lines.append(
            f"{r.trial},{r.seed},{ct},{int(r.censored)},{r.steps},{_fmt(r.final_h)}"
        )
    _write_text(runs_path, "\n".join(lines) + "\n")
    result.files.append(runs_path)

    if want_states:
        mean_path = os.path.join(result.out_dir, "mean_angles.csv")
        header = "t," + ",".join(f"mean_x_{i}" for i in range(1, g.node_count + 1))
        rows = [header]
        for tt in range(cfg.horizon + 1):
            rows.append(
                f"{tt}," + ",".join(_fmt(v / cfg.trials) for v in angle_sums[tt])
            )
        _write_text(mean_path, "\n".join(rows) + "\n")
        result.files.append(mean_path)

    result.summary = {
        "mode": "simulate",
        "graph": cfg.graph,
        "n": g.node_count,
        "init": list(init),
        "seed": cfg.seed,
        "trials": cfg.trials,
        "horizon": cfg.horizon,
        "eps": cfg.eps,
        "aggregate": aggregate_records(records),
    }
    summary_path = os.path.join(result.out_dir, "summary.json")
    _write_json(summary_path, result.summary)
    result.files.append(summary_path)


def aggregate_records(records: list[RunRecord]) -> dict:
    """Batch aggregates, recomputable from the per-run rows."""
    times = [r.consensus_time for r in records if r.consensus_time is not None]
    total = len(records)
    agg = {
        "consensus_fraction": len(times) / total,
        "final_h_mean": sum(r.final_h for r in records) / total,
        "consensus_time_mean": None,
        "consensus_time_median": None,
        "consensus_time_se": None,
    }
    if times:
        agg["consensus_time_mean"] = sum(times) / len(times)
        agg["consensus_time_median"] = float(statistics.median(times))
        if len(times) > 1:
            agg["consensus_time_se"] = statistics.stdev(times) / math.sqrt(len(times))
    return agg


def _density(cfg: ExperimentConfig, result: BatchResult) -> None:
    g = cfg.build_graph()
    rho0 = density.density_vector(cfg.init_angles)
    curve = density.deviation_curve(g, rho0, cfg.horizon)

    dev_path = os.path.join(result.out_dir, "deviations.csv")
    header = "t," + ",".join(f"D_{i}" for i in range(1, g.node_count + 1))
    rows = [header]
    for tt in range(cfg.horizon + 1):
        rows.append(f"{tt}," + ",".join(_fmt(v) for v in curve[tt]))
    _write_text(dev_path, "\n".join(rows) + "\n")
    result.files.append(dev_path)

    # density operator snapshots at every recorded time
    snapshots = []
    rho = rho0
    for tt in range(cfg.horizon + 1):
        snapshots.append([[list(map(float, row)) for row in op] for op in rho])
        if tt < cfg.horizon:
            rho = density.propagate_expected(g, rho, 1)
    gap = lambda2(laplacian(g))
    out = {
        "mode": "density",
        "graph": cfg.graph,
        "n": g.node_count,
        "init": list(cfg.init_angles),
        "horizon": cfg.horizon,
        "lambda2": gap,
        "contraction_rate": 1.0 - gap,
        "times": list(range(cfg.horizon + 1)),
        "operators": snapshots,
        "average_limit": [list(map(float, row)) for row in density.average_limit(rho0)],
    }
    if cfg.trials >= 2:
        mc_mean, mc_se = density.monte_carlo_density(
            g, cfg.init_angles, cfg.horizon, cfg.trials, cfg.seed
        )
        out["monte_carlo"] = {
            "t": cfg.horizon,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "mean": [[list(map(float, row)) for row in op] for op in mc_mean],
            "se": [[list(map(float, row)) for row in op] for op in mc_se],
        }
    json_path = os.path.join(result.out_dir, "density.json")
    _write_json(json_path, out)
    result.files.append(json_path)
    result.summary = {"mode": "density", "lambda2": gap, "final_max_deviation": float(curve[-1].max())}


def _spectrum(cfg: ExperimentConfig, result: BatchResult) -> None:
    g = cfg.build_graph()
    dist = pair_selection_distribution(g)
    lap = laplacian(g)
    values, vectors = jacobi_eigh(lap)
    out = {
        "mode": "spectrum",
        "graph": cfg.graph,
        "n": g.node_count,
        "edges": [[i + 1, j + 1] for i, j in g.edges],
        "degrees": [g.degree(i) for i in range(g.node_count)],
        "pair_probabilities": [[i + 1, j + 1, dist[(i, j)]] for i, j in g.edges],
        "laplacian": [list(map(float, row)) for row in lap],
        "eigenvalues": [float(v) for v in values],
        "lambda2": float(values[1]),
    }
    del vectors
    json_path = os.path.join(result.out_dir, "spectrum.json")
    _write_json(json_path, out)
    result.files.append(json_path)
    result.summary = {"mode": "spectrum", "lambda2": out["lambda2"]}


def snap_to_grid(angles, spec: planner.GridSpec) -> tuple[tuple[int, ...], list[str]]:
    """Round angles half-up to the nearest state index; report real snaps."""
    m = spec.state_count
    indices = []
    notes = []
    for pos, angle in enumerate(angles, start=1):
        idx = int(math.floor(angle / spec.step + 0.5)) % m
        snapped = spec.state_angle(idx)
        if abs(angle - snapped) > 1e-12:
            notes.append(
                f"snapped angle {pos} from {angle:.12g} to grid index {idx} ({snapped:.12g})"
            )
        indices.append(idx)
    return tuple(indices), notes


def _plan(cfg: ExperimentConfig, result: BatchResult) -> None:
    spec = planner.GridSpec(cfg.k)
    n = len(cfg.init_angles)
    init_idx, notes = snap_to_grid(cfg.init_angles, spec)
    result.notes.extend(notes)

    if cfg.mode == "plan-finite":
        plan = planner.solve_finite(n, spec, cfg.t, cfg.power, budget=cfg.budget)
        cost = planner.finite_cost(n, cfg.k, cfg.t)
    else:
        plan = planner.solve_infinite(
            n, spec, vi_tol=cfg.vi_tol, max_iters=cfg.max_iters, budget=cfg.budget
        )
        cost = planner.finite_cost(n, cfg.k, cfg.max_iters)

    policy_path = os.path.join(result.out_dir, "policy.json")
    _write_json(policy_path, planner.plan_json(plan))
    result.files.append(policy_path)

    values_path = os.path.join(result.out_dir, "values.csv")
    _write_text(values_path, planner.values_csv(plan))
    result.files.append(values_path)

    summary = {
        "mode": cfg.mode,
        "n": n,
        "k": cfg.k,
        "power": cfg.power if cfg.mode == "plan-finite" else None,
        "budget": cfg.budget,
        "cost_estimate": cost,
        "initial_state_indices": list(init_idx),
    }
    if cfg.mode == "plan-finite":
        summary["horizon"] = cfg.t
        summary["initial_value"] = plan.value_at(init_idx, 0)
    else:
        summary["iterations"] = plan.iterations
        summary["initial_value"] = plan.value_at(init_idx)
    if cfg.trials >= 2:
        stats = planner.rollout(plan, init_idx, make_rng(cfg.seed), cfg.trials)
        summary["rollout"] = {"mean": stats.mean, "se": stats.se, "trials": stats.trials}
    result.summary = summary
    summary_path = os.path.join(result.out_dir, "summary.json")
    _write_json(summary_path, summary)
    result.files.append(summary_path)


def _verify(cfg: ExperimentConfig, result: BatchResult) -> None:
    result.check_results = checks.run_all(seed=cfg.seed)
    payload = {
        "mode": "verify",
        "seed": cfg.seed,
        "results": [
            {"name": c.name, "passed": c.passed, "detail": c.detail}
            for c in result.check_results
        ],
        "all_passed": all(c.passed for c in result.check_results),
    }
    result.summary = payload
    if result.out_dir is not None:
        json_path = os.path.join(result.out_dir, "verify.json")
        _write_json(json_path, payload)
        result.files.append(json_path)


def run_batch(cfg: ExperimentConfig) -> BatchResult:
    """Execute one configured experiment and write its artifacts."""
    result = BatchResult(mode=cfg.mode, out_dir=cfg.out)
    if cfg.out is not None:
        os.makedirs(cfg.out, exist_ok=True)
    if cfg.mode == "simulate":
        _simulate(cfg, result)
    elif cfg.mode == "density":
        _density(cfg, result)
    elif cfg.mode == "spectrum":
        _spectrum(cfg, result)
    elif cfg.mode in ("plan-finite", "plan-infinite"):
        _plan(cfg, result)
    elif cfg.mode == "verify":
        _verify(cfg, result)
    else:
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    return result
