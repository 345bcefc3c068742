"""Undirected hidden graphs of topologies, spectral radius, and labeled trees."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .omega import INPUT, OmegaTopology

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class HiddenGraph:
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n_vertices(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum() // 2)

    @classmethod
    def from_edges(cls, n: int, edges) -> "HiddenGraph":
        a = np.zeros((n, n))
        for u, v in edges:
            a[u, v] = a[v, u] = 1.0
        return cls(a)


def hidden_graph(t: OmegaTopology) -> HiddenGraph:
    """Drop the output neuron and its edges; vertex 0 is the input, ``i + 1`` is hidden neuron ``i``."""
    edges = [(0 if p == INPUT else p + 1, i + 1) for i, p in enumerate(t.parents)]
    return HiddenGraph.from_edges(t.n_hidden + 1, edges)


@dataclass(frozen=True)
class RadiusResult:
    value: float
    iterations: int
    residual: float
    converged: bool

    def __float__(self):
        return self.value


def _start_vectors(shape) -> np.ndarray:
    v = np.ones(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def spectral_radius_batch(adj: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Spectral radii of a stack of adjacency matrices, shape ``(k, n, n)``.

    Iterates on ``A @ A`` from the all-ones vector. Bipartite graphs (every
    tree) have ``-rho`` as an eigenvalue of the same modulus as ``rho``, so
    plain iteration on ``A`` oscillates; on ``A^2`` both collapse into the
    single dominant eigenvalue ``rho^2``.

    Returns ``(radii, iterations, residuals)``; residual is
    ``||A^2 v - rho^2 v||`` at the final unit iterate. Each matrix stops
    independently once its radius changes by less than ``tol / 100``.
    """
    adj = np.asarray(adj, dtype=float)
    sq = adj @ adj
    v = _start_vectors(adj.shape[:-1])
    lam = np.zeros(adj.shape[0])
    active = np.ones(adj.shape[0], dtype=bool)
    iters = np.zeros(adj.shape[0], dtype=int)
    for it in range(1, max_iter + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        w = np.einsum("kij,kj->ki", sq[idx], v[idx])
        new_lam = np.einsum("ki,ki->k", v[idx], w)
        norms = np.linalg.norm(w, axis=1)
        safe = np.where(norms > 0, norms, 1.0)[:, None]
        v[idx] = np.where(norms[:, None] > 0, w / safe, v[idx])
        # the Rayleigh quotient error shrinks geometrically; stop well below tol
        done = np.abs(np.sqrt(np.maximum(new_lam, 0.0)) - np.sqrt(np.maximum(lam[idx], 0.0))) <= 1e-2 * tol
        done |= norms == 0
        lam[idx] = new_lam
        iters[idx] = it
        active[idx[done]] = False
    w = np.einsum("kij,kj->ki", sq, v)
    residuals = np.linalg.norm(w - lam[:, None] * v, axis=1)
    return np.sqrt(np.maximum(lam, 0.0)), iters, residuals


def spectral_radius(g: HiddenGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> RadiusResult:
    if g.n_vertices == 0:
        raise ValueError("empty graph")
    radii, iters, res = spectral_radius_batch(g.adjacency[None], tol, max_iter)
    return RadiusResult(float(radii[0]), int(iters[0]), float(res[0]), bool(iters[0] < max_iter))


def is_connected(g: HiddenGraph) -> bool:
    n = g.n_vertices
    if n == 0:
        return False
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in np.nonzero(g.adjacency[u])[0]:
            if int(v) not in seen:
                seen.add(int(v))
                stack.append(int(v))
    return len(seen) == n


def classify(g: HiddenGraph) -> dict:
    edges = g.edge_count
    n = g.n_vertices
    is_tree = is_connected(g) and edges == n - 1
    degrees = g.adjacency.sum(axis=1)
    is_star = bool(is_tree and n >= 2 and np.any(degrees == n - 1))
    return {"is_tree": bool(is_tree), "is_star": is_star, "edge_count": edges}


def prufer_decode(seq: tuple[int, ...], n: int) -> list[tuple[int, int]]:
    """Edges of the labeled tree on ``0..n-1`` encoded by a Prüfer sequence."""
    degree = [1] * n
    for s in seq:
        degree[s] += 1
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for s in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, s))
        degree[s] -= 1
        if degree[s] == 1:
            heapq.heappush(leaves, s)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def enumerate_trees(n: int) -> Iterator[list[tuple[int, int]]]:
    """All ``n^(n-2)`` labeled trees on ``n`` vertices as edge lists."""
    if not 2 <= n <= 9:
        raise ValueError(f"n must lie in 2..9, got {n}")
    for seq in itertools.product(range(n), repeat=n - 2):
        yield prufer_decode(seq, n)


def tree_adjacency_stack(n: int) -> np.ndarray:
    """Adjacency matrices of every labeled tree on ``n`` vertices, stacked."""
    trees = list(enumerate_trees(n))
    adj = np.zeros((len(trees), n, n))
    e = np.array(trees)  # (k, n-1, 2)
    k = np.arange(len(trees))[:, None]
    adj[k, e[:, :, 0], e[:, :, 1]] = 1.0
    adj[k, e[:, :, 1], e[:, :, 0]] = 1.0
    return adj


@dataclass
class SweepRow:
    n: int
    n_trees: int
    max_radius: float
    star_count: int
    maximisers: int
    maximisers_all_stars: bool
    all_below_n_minus_1: bool
    expected_star_radius: float


def extremal_sweep(n: int, tol: float = DEFAULT_TOL, chunk: int = 65536) -> tuple[SweepRow, np.ndarray]:
    """Radius of every labeled tree on ``n`` vertices and the extremal summary."""
    adj = tree_adjacency_stack(n)
    radii = np.concatenate([spectral_radius_batch(adj[i:i + chunk], tol)[0] for i in range(0, len(adj), chunk)])
    degrees = adj.sum(axis=2)
    stars = np.any(degrees == n - 1, axis=1)
    rmax = float(radii.max())
    maxers = np.abs(radii - rmax) <= 1e-9
    row = SweepRow(
        n=n,
        n_trees=len(adj),
        max_radius=rmax,
        star_count=int(stars.sum()),
        maximisers=int(maxers.sum()),
        maximisers_all_stars=bool(np.array_equal(maxers, stars)),
        all_below_n_minus_1=bool(np.all(radii <= n - 1 + 1e-12)),
        expected_star_radius=float(np.sqrt(n - 1)),
    )
    return row, radii
