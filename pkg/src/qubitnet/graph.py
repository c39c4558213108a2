"""Classical communication topology: connectivity validation, the pair-selection
law induced by uniform-node-then-uniform-neighbor sampling, the consensus
Laplacian, and its spectral gap.

Node labels are 1-indexed in all I/O (edge-list files, error messages) and
0-indexed internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

TOL = 1e-12

Edge = tuple[int, int]


@dataclass(frozen=True)
class NetworkGraph:
    """Validated undirected connected graph.

    edges are 0-indexed pairs (i, j) with i < j, sorted; neighbors[i] is the
    sorted adjacency of node i.
    """

    node_count: int
    edges: tuple[Edge, ...]
    neighbors: tuple[tuple[int, ...], ...]

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)


def from_edge_list(n: int, edges) -> NetworkGraph:
    """Build a validated graph from 1-indexed edge pairs.

    Raises ConfigError naming the offending element for self-loops, duplicate
    edges, out-of-range endpoints, or a disconnected graph.
    """
    if not isinstance(n, int) or n < 2:
        raise ConfigError(f"node count must be an integer >= 2, got {n!r}")
    seen: set[Edge] = set()
    ordered: list[Edge] = []
    for a, b in edges:
        if not (isinstance(a, int) and isinstance(b, int)):
            raise ConfigError(f"edge endpoints must be integers, got ({a!r}, {b!r})")
        if not (1 <= a <= n) or not (1 <= b <= n):
            raise ConfigError(f"edge ({a}, {b}) has an endpoint outside 1..{n}")
        if a == b:
            raise ConfigError(f"self-loop at node {a}")
        e = (min(a, b) - 1, max(a, b) - 1)
        if e in seen:
            raise ConfigError(f"duplicate edge ({e[0] + 1}, {e[1] + 1})")
        seen.add(e)
        ordered.append(e)
    ordered.sort()

    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in ordered:
        adj[i].append(j)
        adj[j].append(i)
    for nbrs in adj:
        nbrs.sort()

    # connectivity by breadth-first traversal from node 1
    reached = [False] * n
    reached[0] = True
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in adj[i]:
                if not reached[j]:
                    reached[j] = True
                    nxt.append(j)
        frontier = nxt
    if not all(reached):
        missing = reached.index(False) + 1
        raise ConfigError(f"graph is disconnected: node {missing} unreachable from node 1")

    return NetworkGraph(
        node_count=n,
        edges=tuple(ordered),
        neighbors=tuple(tuple(a) for a in adj),
    )


def complete_graph(n: int) -> NetworkGraph:
    return from_edge_list(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def ring_graph(n: int) -> NetworkGraph:
    if n < 3:
        raise ConfigError(f"ring graph needs at least 3 nodes, got {n}")
    return from_edge_list(n, [(i, i % n + 1) for i in range(1, n + 1)])


def path_graph(n: int) -> NetworkGraph:
    return from_edge_list(n, [(i, i + 1) for i in range(1, n)])


def read_edge_list(path: str) -> NetworkGraph:
    """Parse the edge-list text format: first line N, then one 'i j' pair per
    line, 1-indexed, '#' comments allowed."""
    n = None
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            try:
                values = [int(f) for f in fields]
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: expected integers, got {line!r}")
            if n is None:
                if len(values) != 1:
                    raise ConfigError(f"{path}:{lineno}: first line must be the node count")
                n = values[0]
            else:
                if len(values) != 2:
                    raise ConfigError(f"{path}:{lineno}: expected 'i j', got {line!r}")
                edges.append((values[0], values[1]))
    if n is None:
        raise ConfigError(f"{path}: empty edge-list file")
    return from_edge_list(n, edges)


def pair_selection_distribution(g: NetworkGraph) -> dict[Edge, float]:
    """Edge-selection probabilities of uniform-node-then-uniform-neighbor
    sampling: p_ij = (1/|N_i| + 1/|N_j|) / N. Sums to one over the edges."""
    n = g.node_count
    return {
        (i, j): (1.0 / g.degree(i) + 1.0 / g.degree(j)) / n
        for i, j in g.edges
    }


def laplacian(g: NetworkGraph) -> np.ndarray:
    """Consensus Laplacian: off-diagonal -p_ij/2 on edges, zero row sums.

    I - L is exactly the one-step propagation matrix of the expected density
    operators under the pair-selection law (each selected endpoint moves
    halfway in expectation).
    """
    n = g.node_count
    dist = pair_selection_distribution(g)
    lap = np.zeros((n, n))
    for (i, j), p in dist.items():
        lap[i, j] = lap[j, i] = -p / 2.0
    np.fill_diagonal(lap, -lap.sum(axis=1))
    return lap


def jacobi_eigh(a: np.ndarray, tol: float = TOL, max_sweeps: int = 100):
    """Full symmetric eigendecomposition by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below tol. Returns
    eigenvalues in ascending order and matching orthonormal eigenvectors as
    columns. Raises NumericalError if the sweep cap is hit.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    if a.shape != (n, n) or not np.allclose(a, a.T, atol=1e-9):
        raise ValueError("jacobi_eigh expects a symmetric square matrix")
    v = np.eye(n)
    if n == 1:
        return np.diagonal(a).copy(), v

    diag_mask = np.eye(n, dtype=bool)

    def off_norm() -> float:
        # summed directly over the off-diagonal entries; the total-minus-diagonal
        # form cancels catastrophically near convergence
        return math.sqrt(float((a[~diag_mask] ** 2).sum()))

    converged = False
    for _ in range(max_sweeps):
        if off_norm() < tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                rows_p = a[p, :].copy()
                rows_q = a[q, :].copy()
                a[p, :] = c * rows_p - s * rows_q
                a[q, :] = s * rows_p + c * rows_q
                cols_p = a[:, p].copy()
                cols_q = a[:, q].copy()
                a[:, p] = c * cols_p - s * cols_q
                a[:, q] = s * cols_p + c * cols_q
                # recompute the rotated 2x2 block exactly
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if not converged:
        # the final sweep may have pushed the norm under tol
        if off_norm() >= tol:
            raise NumericalError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    order = np.argsort(np.diagonal(a), kind="stable")
    return np.diagonal(a)[order].copy(), v[:, order]


def lambda2(lap: np.ndarray) -> float:
    """Second-smallest Laplacian eigenvalue (the spectral gap); positive on a
    connected graph."""
    values, _ = jacobi_eigh(lap)
    gap = float(values[1])
    if gap <= 0.0:
        raise NumericalError(f"spectral gap is not positive ({gap}); graph not connected?")
    return gap
