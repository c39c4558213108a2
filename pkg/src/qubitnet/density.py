"""Exact evolution of the expected density operators and its verification.

Conditioned on nothing, the per-node expected density operators follow the
linear law rho(t+1) = (I - L) rho(t) applied entrywise to the 2x2 operators,
with L the graph module's pair-selection Laplacian. Everything here is plain
linear algebra; the Monte Carlo estimator cross-validates the law against the
stochastic engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import NetworkGraph, lambda2, laplacian
from .pqp import evolve_angles
from .qstate import TOL, density_of
from .seeding import make_rng, seed_stream


def density_vector(angles) -> np.ndarray:
    """Stack pure-state density operators for a list of angles: shape (N,2,2)."""
    return np.stack([density_of(a) for a in angles])


def propagate_expected(g: NetworkGraph, rho0: np.ndarray, t: int) -> np.ndarray:
    """Apply the expected one-step averaging map t times."""
    if t < 0:
        raise ValueError(f"step count must be >= 0, got {t}")
    rho = np.asarray(rho0, dtype=float)
    if rho.shape != (g.node_count, 2, 2):
        raise ValueError(
            f"density vector shape {rho.shape} does not match graph with {g.node_count} nodes"
        )
    w = np.eye(g.node_count) - laplacian(g)
    for _ in range(t):
        rho = np.tensordot(w, rho, axes=(1, 0))
    return rho


def average_limit(rho0: np.ndarray) -> np.ndarray:
    """Arithmetic mean of the entries; the common limit on a connected graph."""
    return np.asarray(rho0, dtype=float).mean(axis=0)


def spectral_norm_2x2(m: np.ndarray) -> float:
    """Largest absolute eigenvalue of a symmetric 2x2 matrix, in closed form."""
    half_tr = (m[0, 0] + m[1, 1]) / 2.0
    radius = math.sqrt(max(0.0, ((m[0, 0] - m[1, 1]) / 2.0) ** 2 + m[0, 1] * m[1, 0]))
    return max(abs(half_tr + radius), abs(half_tr - radius))


def deviation(g: NetworkGraph, rho0: np.ndarray, t: int) -> np.ndarray:
    """Spectral-norm distance of each propagated entry from the average limit."""
    target = average_limit(rho0)
    rho = propagate_expected(g, rho0, t)
    return np.array([spectral_norm_2x2(rho[i] - target) for i in range(len(rho))])


def deviation_curve(g: NetworkGraph, rho0: np.ndarray, t_max: int) -> np.ndarray:
    """Deviations for every t in 0..t_max, shape (t_max+1, N)."""
    target = average_limit(rho0)
    rho = np.asarray(rho0, dtype=float)
    w = np.eye(g.node_count) - laplacian(g)
    rows = []
    for _ in range(t_max + 1):
        rows.append([spectral_norm_2x2(rho[i] - target) for i in range(len(rho))])
        rho = np.tensordot(w, rho, axes=(1, 0))
    return np.array(rows)


def monte_carlo_density(
    g: NetworkGraph, init, t: int, trials: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Estimate the expected density operators at time t by independent runs.

    Each trial evolves the protocol for exactly t slots under its own derived
    seed and maps the final angles through the pure-state density. Returns the
    entrywise sample mean and standard error, both shaped (N, 2, 2); the
    standard error is zero when trials < 2.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    n = g.node_count
    if len(init) != n:
        raise ValueError(f"initial state has {len(init)} angles but graph has {n} nodes")
    init = list(init)
    if t == 0:
        # no randomness has acted yet: the estimator is exact with zero spread
        return density_vector(init), np.zeros((n, 2, 2))
    cos = math.cos
    sin = math.sin
    sums = [[0.0, 0.0, 0.0] for _ in range(n)]
    sums_sq = [[0.0, 0.0, 0.0] for _ in range(n)]
    for trial in range(trials):
        rng = make_rng(seed_stream(seed, trial))
        x = evolve_angles(g, init, t, rng)
        for i in range(n):
            c = cos(x[i])
            s = sin(x[i])
            e = (c * c, c * s, s * s)
            si = sums[i]
            qi = sums_sq[i]
            for p in range(3):
                si[p] += e[p]
                qi[p] += e[p] * e[p]
    mean = np.empty((n, 2, 2))
    se = np.zeros((n, 2, 2))
    for i in range(n):
        m00, m01, m11 = (v / trials for v in sums[i])
        mean[i] = [[m00, m01], [m01, m11]]
        if trials > 1:
            errs = []
            for p in range(3):
                var = max(0.0, (sums_sq[i][p] - sums[i][p] ** 2 / trials) / (trials - 1))
                errs.append(math.sqrt(var / trials))
            se[i] = [[errs[0], errs[1]], [errs[1], errs[2]]]
    return mean, se


@dataclass(frozen=True)
class RateReport:
    """Outcome of the exponential-contraction check."""

    rate: float  # 1 - lambda2
    max_deviation: tuple[float, ...]  # m(t) for t = 0..t_max
    ratios: tuple[float, ...]  # m(t+1)/m(t) where defined
    bound_ok: bool


def convergence_rate_check(g: NetworkGraph, rho0: np.ndarray, t_max: int) -> RateReport:
    """Verify m(t) <= m(0) * (1 - lambda2)^t up to a 1e-9 prefix slack and
    report the raw ratio sequence for inspection.

    A 1e-14 absolute floor absorbs round-off when the input is already at the
    average (the propagation of an exactly constant vector is not bit-exact).
    """
    rate = 1.0 - lambda2(laplacian(g))
    curve = deviation_curve(g, rho0, t_max)
    m = tuple(float(row.max()) for row in curve)
    ratios = tuple(m[i + 1] / m[i] for i in range(t_max) if m[i] > 0.0)
    bound_ok = all(
        m[i] <= m[0] * rate**i * (1.0 + 1e-9) + 1e-14 for i in range(t_max + 1)
    )
    return RateReport(rate=rate, max_deviation=m, ratios=ratios, bound_ok=bound_ok)


def check_density_vector(rho: np.ndarray, tol: float = TOL) -> bool:
    """Every entry symmetric, trace one, eigenvalues >= -tol."""
    for mtx in rho:
        if abs(mtx[0, 1] - mtx[1, 0]) > tol or abs(mtx[0, 0] + mtx[1, 1] - 1.0) > tol:
            return False
        half_tr = (mtx[0, 0] + mtx[1, 1]) / 2.0
        radius = math.sqrt(
            max(0.0, ((mtx[0, 0] - mtx[1, 1]) / 2.0) ** 2 + mtx[0, 1] * mtx[1, 0])
        )
        if half_tr - radius < -tol:
            return False
    return True
