"""Communication graphs, incidence operators, and their spectra.

Everything here is dense and intended for desk-scale networks (tens of
agents): the spectral quantities feed step-size rules and diagnostics, not
the hot loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng

GRAPH_KINDS = ("ring", "path", "complete", "star", "erdos_renyi")

# Eigenvalues below _ZERO_TOL * max(1, lambda_max) are treated as the
# structural zero of a connected Laplacian.
_ZERO_TOL = 1e-9


@dataclass(frozen=True)
class Graph:
    """Connected undirected graph on nodes 0..n-1.

    Edges are stored canonically as (i, j) with i < j, sorted, without
    duplicates.  Construction fails on disconnected or degenerate input.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 nodes, got n={self.n}")
        canon = []
        seen = set()
        for (a, b) in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a},{b}) out of range for n={self.n}")
            e = (a, b) if a < b else (b, a)
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            canon.append(e)
        canon.sort()
        object.__setattr__(self, "edges", tuple(canon))
        if not _connected(self.n, self.edges):
            raise ValueError("graph is not connected")

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return len(self.edges)


@dataclass(frozen=True)
class SpectralInfo:
    """Spectral constants of the incidence operator A and Laplacian A^T A.

    rho1 is the largest Laplacian eigenvalue, rho2 the smallest nonzero one
    (algebraic connectivity).  M, the curvature bound of the quadratic
    penalty used by the primal surrogate, equals rho1.  laplacian_pinv is the
    Moore-Penrose inverse of A^T A, kept dense for diagnostics.
    """

    rho1: float
    rho2: float
    M: float
    eigenvalues: np.ndarray
    laplacian_pinv: np.ndarray = field(repr=False)


def _connected(n: int, edges: tuple[tuple[int, int], ...]) -> bool:
    # Plain BFS; doubles as the reference oracle for spectral connectivity.
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = [False] * n
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == n


def build_graph(kind: str, n: int, p: float | None = None, seed: int | None = None) -> Graph:
    """Construct a named topology.

    ``erdos_renyi`` draws G(n, p) repeatedly (up to 100 attempts) until the
    draw is connected and raises if none is.  The other kinds are
    deterministic.
    """
    if kind not in GRAPH_KINDS:
        raise ValueError(f"unknown graph kind {kind!r}, expected one of {GRAPH_KINDS}")
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got n={n}")

    if kind == "ring":
        if n == 2:
            edges = [(0, 1)]
        else:
            edges = [(i, (i + 1) % n) for i in range(n)]
    elif kind == "path":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "complete":
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif kind == "star":
        edges = [(0, j) for j in range(1, n)]
    else:  # erdos_renyi
        if p is None or not (0.0 < p <= 1.0):
            raise ValueError(f"erdos_renyi needs edge probability p in (0, 1], got {p}")
        gen = _rng.RngStream(0 if seed is None else seed).generator(_rng.GRAPH)
        for _ in range(100):
            mask = gen.random((n, n)) < p
            edges = [(i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j]]
            if _connected(n, tuple(edges)):
                break
        else:
            raise ValueError(
                f"no connected Erdos-Renyi draw in 100 attempts (n={n}, p={p})"
            )
    return Graph(n=n, edges=tuple(edges))


def incidence(graph: Graph) -> np.ndarray:
    """Oriented incidence matrix A of shape (m, n).

    Row for edge (i, j) with i < j carries +1 at column i and -1 at column j,
    so A^T A is the graph Laplacian and A x = 0 iff x is consensual.
    """
    A = np.zeros((graph.m, graph.n))
    for row, (i, j) in enumerate(graph.edges):
        A[row, i] = 1.0
        A[row, j] = -1.0
    return A


def laplacian(graph: Graph) -> np.ndarray:
    """Graph Laplacian D - Adj, assembled directly from the edge list."""
    L = np.zeros((graph.n, graph.n))
    for i, j in graph.edges:
        L[i, i] += 1.0
        L[j, j] += 1.0
        L[i, j] -= 1.0
        L[j, i] -= 1.0
    return L


def neighbor_sets(graph: Graph) -> tuple[list[list[int]], np.ndarray]:
    """Sorted neighbor lists and the degree vector."""
    nbrs: list[list[int]] = [[] for _ in range(graph.n)]
    for i, j in graph.edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    for lst in nbrs:
        lst.sort()
    degrees = np.array([len(lst) for lst in nbrs], dtype=np.int64)
    return nbrs, degrees


def _spectrum(L: np.ndarray) -> tuple[float, float, np.ndarray, np.ndarray]:
    """rho1, rho2, eigenvalues, and pinv of a symmetric PSD Laplacian.

    Raises if more than one eigenvalue sits at (numerical) zero, which for a
    Laplacian means a disconnected graph or a rank deficiency the rest of the
    theory does not cover.
    """
    vals, vecs = np.linalg.eigh(L)
    lam_max = float(vals[-1])
    tol = _ZERO_TOL * max(1.0, lam_max)
    zero = vals < tol
    if int(zero.sum()) != 1:
        raise ValueError(
            f"Laplacian has {int(zero.sum())} near-zero eigenvalues; "
            "expected exactly one (connected graph)"
        )
    rho2 = float(vals[1])
    inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, vals))
    pinv = (vecs * inv) @ vecs.T
    return lam_max, rho2, vals.copy(), pinv


def spectral_info(graph: Graph) -> SpectralInfo:
    """Spectral constants of the graph's incidence operator."""
    rho1, rho2, vals, pinv = _spectrum(laplacian(graph))
    return SpectralInfo(rho1=rho1, rho2=rho2, M=rho1, eigenvalues=vals, laplacian_pinv=pinv)
