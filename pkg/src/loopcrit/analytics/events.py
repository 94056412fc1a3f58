"""Local events at the root and the exploration subtree.

``A1``: every root edge carries at most one link.  ``A2``: exactly one root
edge ``rho x`` carries exactly two links, every other root edge at most one,
and every edge from ``x`` to its children at most one.  ``A2`` splits into
``A2_MIX`` (one link of each kind) and ``A2_SAME``.

The exploration subtree keeps the root and, recursively, every child joined
to a kept vertex by at least two links.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np
from numba import njit

from ..linkproc import LinkConfiguration
from ..looptracer import trace_loops
from ..topology import Graph, from_edges

A1, A2_MIX, A2_SAME, OTHER = 0, 1, 2, 3
NOT_TREE = -1


class EventKind(IntEnum):
    A1 = A1
    A2_MIX = A2_MIX
    A2_SAME = A2_SAME
    OTHER = OTHER

    @property
    def is_a2(self) -> bool:
        return self in (EventKind.A2_MIX, EventKind.A2_SAME)


@dataclass(frozen=True)
class EventClass:
    """Classification of a configuration; the A2 fields are ``None`` otherwise.

    ``lambda_root``/``lambda_child`` are the lengths at ``rho`` and ``x`` of the
    loop through ``(rho, 0)`` in the configuration restricted to edge ``rho x``;
    ``x_length`` equals ``lambda_root``.
    """

    kind: EventKind
    child: Optional[int] = None
    lambda_root: Optional[float] = None
    lambda_child: Optional[float] = None
    x_length: Optional[float] = None


def child_csr(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """``(ptr, edge)`` such that ``edge[ptr[v]:ptr[v+1]]`` are the child edges of ``v``."""
    eu = np.ascontiguousarray(g.eu, dtype=np.int64)
    order = np.argsort(eu, kind="stable").astype(np.int64)
    ptr = np.searchsorted(eu[order], np.arange(g.vertex_count + 1)).astype(np.int64)
    return ptr, order


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True, nogil=True)
def edge_counts(l_edge, n_links, cnt):
    for e in range(cnt.shape[0]):
        cnt[e] = 0
    for i in range(n_links):
        cnt[l_edge[i]] += 1


@njit(cache=True, nogil=True)
def classify_kernel(root, child_ptr, child_edge, ev, cnt, l_edge, l_time, l_kind, n_links):
    """Return ``(code, x, lambda_root, lambda_child)`` for the event at ``root``."""
    two = -1
    for j in range(child_ptr[root], child_ptr[root + 1]):
        e = child_edge[j]
        c = cnt[e]
        if c >= 3:
            return OTHER, -1, 0.0, 0.0
        if c == 2:
            if two >= 0:
                return OTHER, -1, 0.0, 0.0
            two = e
    if two < 0:
        return A1, -1, 0.0, 0.0
    x = ev[two]
    for j in range(child_ptr[x], child_ptr[x + 1]):
        if cnt[child_edge[j]] >= 2:
            return OTHER, -1, 0.0, 0.0
    t1 = -1.0
    t2 = -1.0
    k1 = -1
    k2 = -1
    for i in range(n_links):
        if l_edge[i] == two:
            if k1 < 0:
                t1 = l_time[i]
                k1 = l_kind[i]
            else:
                t2 = l_time[i]
                k2 = l_kind[i]
    if k1 != k2:
        return A2_MIX, x, 1.0, 1.0
    # (rho, 0) sits on the arc that wraps through time 0
    wrap = 1.0 - abs(t2 - t1)
    if k1 == 1:
        return A2_SAME, x, wrap, 1.0 - wrap
    return A2_SAME, x, wrap, wrap


@njit(cache=True, nogil=True)
def subtree_kernel(root, child_ptr, child_edge, ev, gen, cnt, vsize, esize, queue):
    """Breadth-first exploration subtree; returns its edge count.

    ``queue[:edges + 1]`` holds its vertices afterwards; ``vsize[k]`` and
    ``esize[k]`` count generation-k vertices and single-link child edges for
    ``k < len(vsize)``.
    """
    kmax = vsize.shape[0]
    for k in range(kmax):
        vsize[k] = 0
        esize[k] = 0
    g0 = gen[root]
    queue[0] = root
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        k = gen[v] - g0
        if k < kmax:
            vsize[k] += 1
        for j in range(child_ptr[v], child_ptr[v + 1]):
            e = child_edge[j]
            c = cnt[e]
            if c >= 2:
                queue[tail] = ev[e]
                tail += 1
            elif c == 1 and k < kmax:
                esize[k] += 1
    return tail - 1


# ---------------------------------------------------------------------------
# Python API


def _require_tree(g: Graph) -> None:
    if not g.is_tree:
        raise ValueError("root events are defined on trees only")


def classify_root_event(g: Graph, c: LinkConfiguration) -> EventClass:
    """Classify ``c`` into A1 / A2_MIX / A2_SAME / OTHER.

    For A2 the overlap lengths are read off the traced loop decomposition of
    the two-vertex configuration on ``rho x``.
    """
    _require_tree(g)
    counts = np.diff(c.offsets)
    ptr, cedge = child_csr(g)
    code, x, _, _ = classify_kernel(g.root, ptr, cedge, np.ascontiguousarray(g.ev), counts,
                                    c.edge, c.time, c.kind.astype(np.int64), c.total_links)
    kind = EventKind(int(code))
    if not kind.is_a2:
        return EventClass(kind)
    e = g.edge_index(g.root, int(x))
    pair = from_edges(2, [(0, 1)])
    sub = LinkConfiguration.from_links(pair, {0: c.links_on(e)})
    dec = trace_loops(pair, sub)
    loop = dec.loop_of_point(0, 0.0)
    lam_r = dec.length_at(loop, 0)
    lam_x = dec.length_at(loop, 1)
    return EventClass(kind, int(x), lam_r, lam_x, lam_r)


@dataclass(frozen=True)
class ExplorationSubtree:
    """Per-generation vertex sets and single-link boundary edges.

    ``boundary[k]`` holds the edges from generation-k subtree vertices to
    children carrying exactly one link.
    """

    generations: tuple
    boundary: tuple
    edge_count: int

    def size(self, k: int) -> int:
        return int(self.generations[k].size) if k < len(self.generations) else 0


def build_exploration_subtree(g: Graph, c: LinkConfiguration) -> ExplorationSubtree:
    _require_tree(g)
    counts = np.diff(c.offsets)
    ptr, cedge = child_csr(g)
    depth = int(g.generation.max()) + 1
    vsize = np.zeros(depth, np.int64)
    esize = np.zeros(depth, np.int64)
    queue = np.zeros(g.vertex_count, np.int64)
    n_edges = subtree_kernel(g.root, ptr, cedge, np.ascontiguousarray(g.ev), g.generation,
                             counts, vsize, esize, queue)
    verts = queue[:n_edges + 1]
    gens = g.generation[verts]
    generations = tuple(np.sort(verts[gens == k]) for k in range(depth) if vsize[k] > 0)
    boundary = []
    for k in range(len(generations)):
        hits = [e for v in generations[k] for e in cedge[ptr[v]:ptr[v + 1]] if counts[e] == 1]
        boundary.append(np.asarray(hits, dtype=np.int64))
    return ExplorationSubtree(generations, tuple(boundary), int(n_edges))


def root_subtree_loop_counts(g: Graph, c: LinkConfiguration) -> np.ndarray:
    """Loop count of each subtree hanging from a root child, in root-edge order.

    Only links with both ends inside the subtree are kept.  On ``A1`` the
    total loop count is ``sum(counts) - k + 1`` with ``k`` the number of
    singly-linked root edges, because each such link merges the root loop
    into one subtree loop.
    """
    _require_tree(g)
    out = []
    for e in g.children(g.root):
        inside = np.zeros(g.vertex_count, dtype=bool)
        stack = [int(g.ev[e])]
        while stack:
            v = stack.pop()
            inside[v] = True
            stack.extend(int(g.ev[f]) for f in g.children(v))
        sub = c.restrict(inside[g.eu] & inside[g.ev])
        outside = g.vertex_count - int(inside.sum())
        out.append(trace_loops(g, sub).loop_count - outside)
    return np.asarray(out, dtype=np.int64)
