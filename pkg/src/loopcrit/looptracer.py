"""Loop decomposition of a link configuration.

Every vertex carries a circle ``[0, 1)``.  Link endpoints cut the circles into
arcs; arc ``p`` of a vertex runs from its endpoint ``p`` up to the next
endpoint at that vertex (wrapping through 1 = 0).  A link at time ``t`` on
``{x, y}`` glues arc ends: with ``x-``/``x+`` the arcs of ``x`` ending/starting
at ``t``, a cross joins ``x- ~ y+`` and ``x+ ~ y-`` (direction kept) while a
double-bar joins ``x- ~ y-`` and ``x+ ~ y+`` (direction reversed).  Each arc has
exactly two ends, so the components of the gluing are the loops.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit

from .linkproc import Link, LinkConfiguration, insert_link
from .topology import Graph


# ---------------------------------------------------------------------------
# compiled kernel


@njit(cache=True, nogil=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True, nogil=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        if ra < rb:
            parent[rb] = ra
        else:
            parent[ra] = rb


@njit(cache=True, nogil=True)
def _prev(vstart, v, p):
    if p == vstart[v]:
        return vstart[v + 1] - 1
    return p - 1


@njit(cache=True, nogil=True)
def trace_into(nv, eu, ev, l_edge, l_time, l_kind, n_links,
               vstart, ep_time, ep_link, ep_vertex, link_pos, zarc, parent, label):
    """Trace loops into caller-owned buffers; returns the loop count.

    Buffers: ``vstart`` (nv+1), ``ep_*`` (>= 2L), ``link_pos`` (>= L, 2),
    ``zarc`` (nv), ``parent``/``label`` (>= 2L + nv).  Arcs ``0..2L-1`` are the
    sorted endpoint slots; arc ``2L + j`` is the j-th endpoint-free vertex.
    """
    for v in range(nv + 1):
        vstart[v] = 0
    for i in range(n_links):
        e = l_edge[i]
        vstart[eu[e] + 1] += 1
        vstart[ev[e] + 1] += 1
    for v in range(nv):
        vstart[v + 1] += vstart[v]
    # zarc doubles as a fill cursor until the blocks are placed
    for v in range(nv):
        zarc[v] = vstart[v]
    for i in range(n_links):
        e = l_edge[i]
        a = eu[e]
        p = zarc[a]
        zarc[a] = p + 1
        ep_time[p] = l_time[i]
        ep_link[p] = 2 * i
        b = ev[e]
        p = zarc[b]
        zarc[b] = p + 1
        ep_time[p] = l_time[i]
        ep_link[p] = 2 * i + 1
    two_l = 2 * n_links
    nz = 0
    for v in range(nv):
        lo = vstart[v]
        hi = vstart[v + 1]
        for p in range(lo + 1, hi):
            t = ep_time[p]
            k = ep_link[p]
            q = p - 1
            while q >= lo and ep_time[q] > t:
                ep_time[q + 1] = ep_time[q]
                ep_link[q + 1] = ep_link[q]
                q -= 1
            ep_time[q + 1] = t
            ep_link[q + 1] = k
        for p in range(lo, hi):
            ep_vertex[p] = v
            k = ep_link[p]
            link_pos[k // 2, k % 2] = p
        if lo == hi:
            zarc[v] = two_l + nz
            nz += 1
        else:
            zarc[v] = -1
    n_arcs = two_l + nz
    for a in range(n_arcs):
        parent[a] = a
    for i in range(n_links):
        e = l_edge[i]
        px = link_pos[i, 0]
        py = link_pos[i, 1]
        xm = _prev(vstart, eu[e], px)
        ym = _prev(vstart, ev[e], py)
        if l_kind[i] == 1:
            _union(parent, xm, py)
            _union(parent, px, ym)
        else:
            _union(parent, xm, ym)
            _union(parent, px, py)
    ell = 0
    for a in range(n_arcs):
        r = _find(parent, a)
        if r == a:
            label[a] = ell
            ell += 1
        else:
            label[a] = label[r]
    return ell


@njit(cache=True, nogil=True)
def arc_at(vstart, ep_time, zarc, v, t):
    """Arc of vertex ``v`` containing time ``t`` (half-open ``[lo, hi)`` arcs)."""
    lo = vstart[v]
    hi = vstart[v + 1]
    if lo == hi:
        return zarc[v]
    if t < ep_time[lo]:
        return hi - 1
    a = lo
    b = hi - 1
    while a < b:
        mid = (a + b + 1) // 2
        if ep_time[mid] <= t:
            a = mid
        else:
            b = mid - 1
    return a


@njit(cache=True, nogil=True)
def arc_length(vstart, ep_time, ep_vertex, two_l, a):
    if a >= two_l:
        return 1.0
    v = ep_vertex[a]
    if a == vstart[v + 1] - 1:
        return ep_time[vstart[v]] + 1.0 - ep_time[a]
    return ep_time[a + 1] - ep_time[a]


def alloc_buffers(nv: int, cap_links: int):
    """Work buffers for :func:`trace_into` sized for up to ``cap_links`` links."""
    cap = max(cap_links, 1)
    return (np.zeros(nv + 1, np.int64), np.zeros(2 * cap, np.float64),
            np.zeros(2 * cap, np.int64), np.zeros(2 * cap, np.int64),
            np.zeros((cap, 2), np.int64), np.zeros(nv, np.int64),
            np.zeros(2 * cap + nv, np.int64), np.zeros(2 * cap + nv, np.int64))


def count_loops(nv, eu, ev, l_edge, l_time, l_kind) -> int:
    """Loop count of raw link arrays (need not be sorted)."""
    bufs = alloc_buffers(nv, len(l_edge))
    return int(trace_into(nv, eu, ev, np.asarray(l_edge, np.int64),
                          np.asarray(l_time, np.float64), np.asarray(l_kind, np.int64),
                          len(l_edge), *bufs))


# ---------------------------------------------------------------------------
# Python-level decomposition


@dataclass(frozen=True, eq=False)
class LoopDecomposition:
    """Immutable result of :func:`trace_loops`.

    ``arc_loop[a]`` is the loop id of arc ``a``; loop ids are ``0..loop_count-1``
    in order of first appearance.
    """

    graph: Graph
    loop_count: int
    arc_vertex: np.ndarray
    arc_lo: np.ndarray
    arc_length: np.ndarray
    arc_loop: np.ndarray
    _vstart: np.ndarray
    _ep_time: np.ndarray
    _zarc: np.ndarray

    @property
    def ell(self) -> int:
        return self.loop_count

    @property
    def arc_hi(self) -> np.ndarray:
        return self.arc_lo + self.arc_length

    @cached_property
    def loop_length(self) -> np.ndarray:
        """Total vertical length of every loop."""
        return np.bincount(self.arc_loop, weights=self.arc_length, minlength=self.loop_count)

    @cached_property
    def loops_visiting(self) -> list[frozenset]:
        """Vertex set visited by every loop."""
        pairs = np.unique(np.stack([self.arc_loop, self.arc_vertex], axis=1), axis=0)
        out: list[set] = [set() for _ in range(self.loop_count)]
        for lp, v in pairs.tolist():
            out[lp].add(v)
        return [frozenset(s) for s in out]

    @cached_property
    def _loop_max_generation(self) -> np.ndarray:
        gens = self.graph.generation[self.arc_vertex]
        out = np.full(self.loop_count, -1, dtype=np.int64)
        np.maximum.at(out, self.arc_loop, gens)
        return out

    def arc_containing(self, x: int, t: float) -> int:
        return int(arc_at(self._vstart, self._ep_time, self._zarc, x, float(t) % 1.0))

    def loop_of_point(self, x: int, t: float) -> int:
        return int(self.arc_loop[self.arc_containing(x, t)])

    def length_at(self, loop: int, v: int) -> float:
        """Vertical length of ``loop`` on the circle of vertex ``v``."""
        sel = (self.arc_loop == loop) & (self.arc_vertex == v)
        return float(self.arc_length[sel].sum())

    def reaches_generation(self, loop: int, k: int) -> bool:
        gens = self.graph.generation[self.arc_vertex[self.arc_loop == loop]]
        return bool(np.any(gens == k))


def trace_loops(g: Graph, c: LinkConfiguration) -> LoopDecomposition:
    """Decompose ``(g, c)`` into loops."""
    nv, L = g.vertex_count, c.total_links
    bufs = alloc_buffers(nv, L)
    vstart, ep_time, ep_link, ep_vertex, link_pos, zarc, parent, label = bufs
    ell = trace_into(nv, g.eu, g.ev, c.edge, c.time, c.kind.astype(np.int64), L, *bufs)
    two_l = 2 * L
    n_arcs = two_l + int(np.count_nonzero(zarc >= 0))
    arc_vertex = np.empty(n_arcs, np.int64)
    arc_vertex[:two_l] = ep_vertex[:two_l]
    zero = np.nonzero(zarc >= 0)[0]
    arc_vertex[zarc[zero]] = zero
    arc_lo = np.zeros(n_arcs)
    arc_lo[:two_l] = ep_time[:two_l]
    lengths = np.array([arc_length(vstart, ep_time, ep_vertex, two_l, a) for a in range(n_arcs)])
    return LoopDecomposition(g, int(ell), arc_vertex, arc_lo, lengths,
                             label[:n_arcs].copy(), vstart, ep_time[:two_l].copy(), zarc)


def loop_of_point(dec: LoopDecomposition, x: int, t: float) -> int:
    return dec.loop_of_point(x, t)


def reaches_generation(dec: LoopDecomposition, loop: int, k: int) -> bool:
    return dec.reaches_generation(loop, k)


def delta_ell_of_insert(g: Graph, c: LinkConfiguration, edge: int, link: Link | tuple) -> int:
    """Change in loop count caused by inserting ``link`` on ``edge``.

    Recomputed by full retrace.  Raises ``LinkCollision`` like ``insert_link``.
    """
    after = insert_link(c, edge, link)
    return trace_loops(g, after).loop_count - trace_loops(g, c).loop_count
