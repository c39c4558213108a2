"""Angle arithmetic on the projective circle and two-outcome projective measurements.

A qubit state cos(x)|0> + sin(x)|1> is identified with its angle x, canonical
in [0, pi); a measurement with eigenstates at angles u and u + pi/2 is
identified with u, canonical in [0, pi/2). Collapse returns the eigenstate
angle exactly (never a trig round-trip), so post-measurement states compare
bit-identically against grid angles.
"""

from __future__ import annotations

import enum
import math

import numpy as np

# Tolerance for double-precision trig identities, shared by all modules.
TOL = 1e-12

PI = math.pi
HALF_PI = math.pi / 2

# Canonical radians: [0, pi) for states, [0, pi/2) for measurements.
StateAngle = float
MeasurementAngle = float


class Outcome(enum.IntEnum):
    """The two outcomes of a projective measurement at angle u.

    LEFT collapses onto the eigenstate at u, RIGHT onto the orthogonal one at
    u + pi/2. The integer order LEFT < RIGHT fixes outcome-vector enumeration.
    """

    LEFT = 0
    RIGHT = 1


def canonicalize_state(raw: float) -> StateAngle:
    """Reduce radians into the canonical state range [0, pi)."""
    if not math.isfinite(raw):
        raise ValueError(f"state angle must be finite, got {raw!r}")
    x = math.fmod(raw, PI)
    if x < 0.0:
        x += PI
    if x >= PI:  # the addition above can round up to exactly pi
        x -= PI
    return x


def canonicalize_measurement(raw: float) -> MeasurementAngle:
    """Reduce radians into the canonical measurement range [0, pi/2)."""
    if not math.isfinite(raw):
        raise ValueError(f"measurement angle must be finite, got {raw!r}")
    u = math.fmod(raw, HALF_PI)
    if u < 0.0:
        u += HALF_PI
    if u >= HALF_PI:
        u -= HALF_PI
    return u


def eigenstate(u: MeasurementAngle, y: Outcome) -> StateAngle:
    """Post-measurement state for outcome y of the measurement at angle u."""
    if y == Outcome.LEFT:
        return u
    return canonicalize_state(u + HALF_PI)


def outcome_probability(x: StateAngle, u: MeasurementAngle, y: Outcome) -> float:
    """Born probability of outcome y when measuring state x at angle u."""
    return math.cos(eigenstate(u, y) - x) ** 2


def measure(x: StateAngle, u: MeasurementAngle, rng) -> tuple[Outcome, StateAngle]:
    """Sample one projective measurement; consumes exactly one uniform variate.

    Returns the outcome and the collapsed state, which is exactly
    eigenstate(u, outcome).
    """
    p_left = outcome_probability(x, u, Outcome.LEFT)
    y = Outcome.LEFT if rng.random() < p_left else Outcome.RIGHT
    return y, eigenstate(u, y)


def fidelity(a: StateAngle, b: StateAngle) -> float:
    """Overlap magnitude |cos(a - b)| between two states; 1 iff identical."""
    return abs(math.cos(a - b))


def density_of(x: StateAngle) -> np.ndarray:
    """Rank-one density operator of the pure state at angle x (2x2, trace 1)."""
    c = math.cos(x)
    s = math.sin(x)
    cs = c * s
    return np.array([[c * c, cs], [cs, s * s]])


def trace_product(p: np.ndarray, q: np.ndarray) -> float:
    """Tr(pq); equals fidelity(a, b)**2 for pure states at angles a, b."""
    return float(np.trace(p @ q))


def is_density(m: np.ndarray, tol: float = TOL) -> bool:
    """Check the density-operator invariants: symmetric, trace one, PSD."""
    if m.shape != (2, 2) or abs(m[0, 1] - m[1, 0]) > tol:
        return False
    if abs(m[0, 0] + m[1, 1] - 1.0) > tol:
        return False
    # 2x2 symmetric eigenvalues from trace and determinant
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = math.sqrt(max(0.0, (tr / 2) ** 2 - det))
    return tr / 2 - disc >= -tol
