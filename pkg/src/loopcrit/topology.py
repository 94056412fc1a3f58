"""Finite graphs carrying the loop model: rooted regular trees, paths, edge lists.

Vertices are dense integer ids assigned breadth-first from the root, so the
children of a tree vertex are contiguous and the parent of ``v > 0`` in a
``d``-ary tree is ``(v - 1) // d``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# vertex ids are int64 and the tracer allocates O(V) buffers
MAX_VERTICES = 1 << 26


class GraphSizeError(ValueError):
    """Requested graph would exceed :data:`MAX_VERTICES`."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with a distinguished root.

    ``edges`` is an ``(E, 2)`` int array.  For trees each row is
    ``(parent, child)``; the loop machinery relies on that orientation when it
    asks for the children of a vertex.
    """

    vertex_count: int
    edges: np.ndarray
    root: int
    generation: np.ndarray
    kind: str = "general"
    degree_out: int = 0
    depth: int = 0
    _by_generation: list = field(default_factory=list, repr=False)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def is_tree(self) -> bool:
        return self.kind in ("tree", "path")

    @property
    def eu(self) -> np.ndarray:
        return self.edges[:, 0]

    @property
    def ev(self) -> np.ndarray:
        return self.edges[:, 1]

    def edge_index(self, x: int, y: int) -> int:
        """Index of the edge joining ``x`` and ``y``."""
        hit = np.nonzero(((self.eu == x) & (self.ev == y)) | ((self.eu == y) & (self.ev == x)))[0]
        if hit.size == 0:
            raise KeyError(f"no edge between {x} and {y}")
        return int(hit[0])

    def children(self, v: int) -> np.ndarray:
        """Edge indices from ``v`` to its children (tree graphs only)."""
        return np.nonzero(self.eu == v)[0]


def _generations(n: int, edges: np.ndarray, root: int) -> np.ndarray:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    gen = np.full(n, -1, dtype=np.int64)
    gen[root] = 0
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if gen[w] < 0:
                gen[w] = gen[v] + 1
                queue.append(w)
    return gen


def _index_generations(gen: np.ndarray) -> list:
    reached = gen[gen >= 0]
    top = int(reached.max()) if reached.size else 0
    return [np.nonzero(gen == k)[0] for k in range(top + 1)]


def tree_size(d: int, m: int) -> int:
    """Number of vertices of the depth-``m`` tree with outdegree ``d``."""
    if d == 1:
        return m + 1
    return (d ** (m + 1) - 1) // (d - 1)


def build_tree(d: int, m: int) -> Graph:
    """Rooted regular tree ``T_m``: root plus ``m`` generations, ``d`` children each."""
    if d < 1 or m < 0:
        raise ValueError(f"need d >= 1 and m >= 0, got d={d}, m={m}")
    n = tree_size(d, m)
    if n > MAX_VERTICES:
        raise GraphSizeError(f"T_{m} with d={d} has {n} vertices (limit {MAX_VERTICES})")
    child = np.arange(1, n, dtype=np.int64)
    parent = (child - 1) // d
    edges = np.stack([parent, child], axis=1) if n > 1 else np.zeros((0, 2), dtype=np.int64)
    gen = np.zeros(n, dtype=np.int64)
    start, width = 1, d
    for k in range(1, m + 1):
        gen[start:start + width] = k
        start += width
        width *= d
    return Graph(n, edges, 0, gen, kind="tree", degree_out=d, depth=m,
                 _by_generation=_index_generations(gen))


def build_path(n: int) -> Graph:
    """Path on ``n`` vertices rooted at vertex 0; generation equals the index."""
    if n < 1:
        raise ValueError("path needs at least one vertex")
    if n > MAX_VERTICES:
        raise GraphSizeError(f"path with {n} vertices exceeds limit")
    v = np.arange(n - 1, dtype=np.int64)
    edges = np.stack([v, v + 1], axis=1) if n > 1 else np.zeros((0, 2), dtype=np.int64)
    gen = np.arange(n, dtype=np.int64)
    return Graph(n, edges, 0, gen, kind="path", degree_out=1, depth=n - 1,
                 _by_generation=_index_generations(gen))


def from_edges(vertex_count: int, edges: Iterable[Sequence[int]], root: int = 0) -> Graph:
    """Arbitrary simple graph.  Generations are BFS distances from ``root``."""
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if vertex_count < 1 or not 0 <= root < vertex_count:
        raise ValueError("bad vertex count or root")
    if arr.size and (arr.min() < 0 or arr.max() >= vertex_count):
        raise ValueError("edge endpoint out of range")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-loops are not allowed")
    keys = {tuple(sorted(e)) for e in arr.tolist()}
    if len(keys) != len(arr):
        raise ValueError("duplicate edges")
    gen = _generations(vertex_count, arr, root)
    return Graph(vertex_count, arr, root, gen, kind="general",
                 _by_generation=_index_generations(gen))


def vertices_at_generation(g: Graph, k: int) -> np.ndarray:
    """All vertices at graph distance ``k`` from the root (empty if out of range)."""
    if k < 0 or k >= len(g._by_generation):
        return np.zeros(0, dtype=np.int64)
    return g._by_generation[k]
