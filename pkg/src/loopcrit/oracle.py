"""Exact references for tiny systems.

* :func:`enumerate_edge` -- the theta-weighted measure on a single edge, summed
  exactly over link numbers and kind sequences.
* :func:`walk_loops` -- a particle-following loop counter, deliberately written
  without union-find so it can referee :func:`~loopcrit.looptracer.trace_loops`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numba import njit

from .linkproc import CROSS, LinkConfiguration, make_rng
from .looptracer import alloc_buffers, trace_into, trace_loops
from .topology import Graph, build_path, from_edges

MAX_TRUNCATION = 60
MAX_SEQUENCE_LINKS = 24
TAIL_TOL = 1e-12


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# naive trajectory walker


def walk_loops(g: Graph, c: LinkConfiguration) -> tuple[int, dict]:
    """Count loops by following a particle around each one.

    Returns ``(ell, membership)`` where ``membership`` maps ``(vertex, lo)`` --
    the arc of ``vertex`` starting at endpoint time ``lo``, or ``(vertex, None)``
    for a link-free circle -- to a loop number.
    """
    ends: dict[int, list] = {v: [] for v in range(g.vertex_count)}
    for e, t, k in zip(c.edge.tolist(), c.time.tolist(), c.kind.tolist()):
        x, y = int(g.eu[e]), int(g.ev[e])
        ends[x].append((t, y, k))
        ends[y].append((t, x, k))
    times = {}
    for v in ends:
        ends[v].sort()
        times[v] = {t: j for j, (t, _, _) in enumerate(ends[v])}

    membership: dict = {}
    ell = 0
    for v in range(g.vertex_count):
        if not ends[v]:
            membership[(v, None)] = ell
            ell += 1
    for v0 in range(g.vertex_count):
        for j0 in range(len(ends[v0])):
            if (v0, ends[v0][j0][0]) in membership:
                continue
            state = (v0, j0, +1)
            while True:
                v, j, up = state
                n = len(ends[v])
                membership[(v, ends[v][j][0])] = ell
                # endpoint reached at the far end of arc j in the direction of travel
                jj = (j + 1) % n if up > 0 else j
                t, w, kind = ends[v][jj]
                iw = times[w][t]
                nw = len(ends[w])
                new_up = up if kind == CROSS else -up
                state = (w, iw if new_up > 0 else (iw - 1) % nw, new_up)
                if state == (v0, j0, +1):
                    break
                if state[2] < 0 and state[:2] == (v0, j0):
                    raise AssertionError("arc traversed in both directions")
            ell += 1
    return ell, membership


@dataclass
class TracerFuzzReport:
    trials: int
    mismatches: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mismatches == 0


def _same_partition(a: dict, b: dict) -> bool:
    if a.keys() != b.keys():
        return False
    fwd: dict = {}
    back: dict = {}
    for key, la in a.items():
        lb = b[key]
        if fwd.setdefault(la, lb) != lb or back.setdefault(lb, la) != la:
            return False
    return True


def tracer_membership(g: Graph, c: LinkConfiguration) -> tuple[int, dict]:
    dec = trace_loops(g, c)
    has_ends = np.bincount(np.concatenate([g.eu[c.edge], g.ev[c.edge]]),
                           minlength=g.vertex_count) > 0
    out = {}
    for a in range(dec.arc_vertex.size):
        v = int(dec.arc_vertex[a])
        key = (v, float(dec.arc_lo[a])) if has_ends[v] else (v, None)
        out[key] = int(dec.arc_loop[a])
    return dec.loop_count, out


def random_small_config(rng: np.random.Generator, max_vertices: int = 4, max_links: int = 6):
    """Random connected-or-not small graph with a random configuration."""
    n = int(rng.integers(1, max_vertices + 1))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = [p for p in pairs if rng.random() < 0.7]
    if not chosen and pairs:
        chosen = [pairs[int(rng.integers(len(pairs)))]]
    g = from_edges(n, chosen)
    if g.edge_count == 0:
        return g, LinkConfiguration.empty(g)
    L = int(rng.integers(0, max_links + 1))
    edge = rng.integers(0, g.edge_count, size=L)
    time = rng.random(L)
    kind = rng.integers(0, 2, size=L)
    return g, LinkConfiguration.from_arrays(g, edge, time, kind)


class TracerMismatch(AssertionError):
    """The tracer and the naive walker disagree; the message carries the case."""


def exhaustive_tracer_check(max_vertices: int = 4, max_links: int = 6, trials: int = 100_000,
                            seed: int = 0, strict: bool = True) -> TracerFuzzReport:
    """Compare the union-find tracer with :func:`walk_loops` on random small cases.

    With ``strict`` the first mismatch raises :class:`TracerMismatch` carrying
    the edge list and the serialized configuration.
    """
    if max_vertices > 4 or max_links > 6:
        raise ValueError("exhaustive check is limited to 4 vertices and 6 links")
    rng = make_rng(seed, 0xF022)
    report = TracerFuzzReport(trials)
    for _ in range(trials):
        g, c = random_small_config(rng, max_vertices, max_links)
        ell_a, mem_a = tracer_membership(g, c)
        ell_b, mem_b = walk_loops(g, c)
        if ell_a != ell_b or not _same_partition(mem_a, mem_b):
            report.mismatches += 1
            if strict:
                raise TracerMismatch(f"edges={g.edges.tolist()} ell tracer={ell_a} "
                                     f"walker={ell_b}\n{c.to_text()}")
            if len(report.failures) < 10:
                report.failures.append((g.edges.tolist(), c.to_text()))
    return report


# ---------------------------------------------------------------------------
# single edge: per-link-number loop statistics


def _canon(labels):
    seen: dict = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def _merge(labels, a, b):
    la, lb = labels[a], labels[b]
    return [la if x == lb else x for x in labels]


@lru_cache(maxsize=None)
def _transfer_tables(n_max: int) -> tuple:
    """Per-``n`` tables ``T[n][c, ell, conn]``: number of kind sequences with
    ``c`` crosses giving ``ell`` loops and connection flag ``conn``.

    Transfer recursion over links in time order.  Slots: wrap arcs ``Wx, Wy``
    (they contain time 0), current arcs ``Cx, Cy``.  A cross glues ``Cx`` to the
    next ``y`` arc and ``Cy`` to the next ``x`` arc; a double-bar glues
    ``Cx ~ Cy`` and the two next arcs together.
    """
    tables = [np.zeros((1, 3, 2), dtype=object)]
    tables[0][0, 2, 0] = 1
    # state: (partition of (Wx, Wy, Cx, Cy), closed, crosses) -> count
    states = {((0, 1, 0, 1), 0, 0): 1}
    for n in range(1, n_max + 1):
        T = np.zeros((n + 1, n + 3, 2), dtype=object)
        # close: the next arcs are the wrap arcs themselves
        for (part, closed, cr), cnt in states.items():
            for kind in (1, 0):
                lab = list(part)
                if kind == 1:
                    lab = _merge(lab, 2, 1)
                    lab = _merge(lab, 3, 0)
                else:
                    lab = _merge(lab, 2, 3)
                    lab = _merge(lab, 0, 1)
                ell = closed + len(set(lab))
                conn = int(lab[0] == lab[1])
                T[cr + kind, ell, conn] += cnt
        tables.append(T)
        # advance: insert a link with fresh next arcs Nx, Ny (slots 4, 5)
        nxt: dict = {}
        for (part, closed, cr), cnt in states.items():
            for kind in (1, 0):
                lab = list(part) + [10, 11]
                if kind == 1:
                    lab = _merge(lab, 2, 5)
                    lab = _merge(lab, 3, 4)
                else:
                    lab = _merge(lab, 2, 3)
                    lab = _merge(lab, 4, 5)
                keep = [lab[0], lab[1], lab[4], lab[5]]
                dropped = {lab[2], lab[3]} - set(keep)
                key = (_canon(keep), closed + len(dropped), cr + kind)
                nxt[key] = nxt.get(key, 0) + cnt
        states = nxt
    return tuple(tables)


@njit(cache=True)
def _sequence_table(n):
    eu = np.array([0], np.int64)
    ev = np.array([1], np.int64)
    l_edge = np.zeros(n, np.int64)
    l_time = np.empty(n, np.float64)
    for j in range(n):
        l_time[j] = (j + 0.5) / n
    l_kind = np.zeros(n, np.int64)
    T = np.zeros((n + 1, n + 3, 2), np.int64)
    cap = max(n, 1)
    vstart = np.zeros(3, np.int64)
    ep_time = np.zeros(2 * cap)
    ep_link = np.zeros(2 * cap, np.int64)
    ep_vertex = np.zeros(2 * cap, np.int64)
    link_pos = np.zeros((cap, 2), np.int64)
    zarc = np.zeros(2, np.int64)
    parent = np.zeros(2 * cap + 2, np.int64)
    label = np.zeros(2 * cap + 2, np.int64)
    for mask in range(1 << n):
        c = 0
        for j in range(n):
            b = (mask >> j) & 1
            l_kind[j] = b
            c += b
        ell = trace_into(2, eu, ev, l_edge, l_time, l_kind, n, vstart, ep_time, ep_link,
                         ep_vertex, link_pos, zarc, parent, label)
        # time 0 sits in the wrap arc of both circles
        ax = arc_wrap(vstart, zarc, 0)
        ay = arc_wrap(vstart, zarc, 1)
        conn = 1 if label[ax] == label[ay] else 0
        T[c, ell, conn] += 1
    return T


@njit(cache=True)
def arc_wrap(vstart, zarc, v):
    if vstart[v] == vstart[v + 1]:
        return zarc[v]
    return vstart[v + 1] - 1


@lru_cache(maxsize=None)
def _sequence_tables(n_max: int) -> tuple:
    if n_max > MAX_SEQUENCE_LINKS:
        raise OracleError(f"kind-sequence enumeration is capped at n={MAX_SEQUENCE_LINKS}")
    return tuple(_sequence_table(n).astype(object) for n in range(n_max + 1))


def _tables(n_max: int, engine: str) -> tuple:
    if engine == "transfer":
        return _transfer_tables(n_max)
    if engine == "sequences":
        return _sequence_tables(n_max)
    raise ValueError(f"unknown engine {engine!r}")


@dataclass(frozen=True)
class EdgeEnumeration:
    """Exact single-edge statistics under the theta-weighted measure.

    ``joint[n, ell, conn]`` is the unnormalised weight
    ``P(n links) * P(kinds) * theta**ell`` summed over kind sequences;
    ``conn`` flags that ``(x, 0)`` and ``(y, 0)`` lie on one loop.
    """

    beta: float
    theta: float
    u: float
    truncation: int
    joint: np.ndarray
    tail_bound: float

    @property
    def Z(self) -> float:
        return float(self.joint.sum())

    @property
    def Z_over_theta2(self) -> float:
        return self.Z / self.theta ** 2

    def prob_ell(self, k: int) -> float:
        if k >= self.joint.shape[1]:
            return 0.0
        return float(self.joint[:, k, :].sum()) / self.Z

    @property
    def prob_connected(self) -> float:
        """P((x,0) and (y,0) on the same loop)."""
        return float(self.joint[:, :, 1].sum()) / self.Z

    @property
    def prob_visit(self) -> float:
        """P(the loop of (x,0) visits y); every link joins an x arc to a y arc."""
        return 1.0 - self.prob_links(0)

    def prob_links(self, j: int) -> float:
        if j > self.truncation:
            return 0.0
        return float(self.joint[j].sum()) / self.Z

    @property
    def mean_inverse_weight(self) -> float:
        """E^theta[theta^-ell] = 1/Z."""
        return 1.0 / self.Z

    def expect(self, f) -> float:
        """Weighted mean of ``f(n, ell, conn)`` over the truncated support."""
        tot = 0.0
        for n, ell, conn in zip(*np.nonzero(self.joint)):
            tot += self.joint[n, ell, conn] * f(int(n), int(ell), int(conn))
        return tot / self.Z


def _kind_weights(table, u: float) -> np.ndarray:
    n = table.shape[0] - 1
    w = np.array([u ** c * (1 - u) ** (n - c) for c in range(n + 1)])
    return np.tensordot(w, table.astype(np.float64), axes=(0, 0))


def enumerate_edge(beta: float, theta: float, u: float, engine: str = "transfer") -> EdgeEnumeration:
    """Exact single-edge enumeration, truncated once the remaining Poisson mass
    (times the largest possible ``theta**ell``) is below 1e-12 of the total."""
    if not (beta > 0 and theta > 0 and 0 <= u <= 1):
        raise ValueError("need beta > 0, theta > 0, u in [0, 1]")
    cap = MAX_SEQUENCE_LINKS if engine == "sequences" else MAX_TRUNCATION
    rows = []
    total = 0.0
    for n in range(cap + 1):
        tbl = _tables(n, engine)[n]
        pn = math.exp(-beta) * beta ** n / math.factorial(n)
        ells = np.arange(n + 3)
        rows.append(pn * _kind_weights(tbl, u) * (theta ** ells)[:, None])
        total += rows[-1].sum()
        tail = _tail_bound(beta, theta, n)
        if tail < TAIL_TOL * total:
            width = n + 3
            joint = np.zeros((n + 1, width, 2))
            for j, r in enumerate(rows):
                joint[j, :r.shape[0], :] = r
            return EdgeEnumeration(beta, theta, u, n, joint, tail)
    raise OracleError(f"truncation not reached by N={cap} (beta={beta}, theta={theta})")


def _tail_bound(beta: float, theta: float, n: int) -> float:
    """Bound on sum_{k>n} P(k links) * max theta**ell  (ell <= k + 2)."""
    from scipy.stats import poisson

    if theta >= 1:
        return theta ** 2 * math.exp(beta * (theta - 1)) * poisson.sf(n, beta * theta)
    return theta * poisson.sf(n, beta)


# ---------------------------------------------------------------------------
# length of the root arc


def root_arc_length_moment(n_links: int, power: int = 1) -> Fraction:
    """Exact ``E[X**power]`` for the circle arc containing time 0 when ``n_links``
    uniform endpoints cut the circle.

    With ``R`` the range of the endpoints, ``X = 1 - R`` and ``R`` has density
    ``n(n-1) r^(n-2) (1-r)``; the polynomial integral is done in rationals.
    """
    n = n_links
    if n < 1:
        return Fraction(1)
    if n == 1:
        return Fraction(1)
    # integrate n(n-1) r^(n-2) (1-r) (1-r)^power over [0, 1]
    total = Fraction(0)
    for k in range(power + 2):
        coef = math.comb(power + 1, k) * (-1) ** k
        total += Fraction(coef, n - 2 + k + 1)
    return n * (n - 1) * total


def expected_root_arc_length_same_pair() -> Fraction:
    """E[X | A2-same]: two same-kind links, X = length of the loop of (rho,0) at rho."""
    return root_arc_length_moment(2, 1)


def path_fixture_four_loops() -> tuple[Graph, LinkConfiguration]:
    """Seven-vertex path configuration with crosses and double-bars and four loops."""
    g = build_path(7)
    c = LinkConfiguration.from_links(g, {
        0: [(0.3, 1), (0.8, 0)], 1: [(0.55, 1)], 2: [(0.15, 0), (0.65, 0)],
        3: [(0.4, 1)], 5: [(0.25, 1), (0.7, 1)]})
    return g, c
