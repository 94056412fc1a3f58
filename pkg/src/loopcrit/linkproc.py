"""Marked Poisson link process on the edges of a graph.

Each edge carries an independent rate-``beta`` Poisson process on ``[0, 1)``;
every link is a cross with probability ``u`` and a double-bar otherwise.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, NamedTuple

import numpy as np

from .topology import Graph

CROSS = 1
BAR = 0


class Kind(IntEnum):
    BAR = 0
    CROSS = 1

    @property
    def symbol(self) -> str:
        return "X" if self is Kind.CROSS else "B"

    @classmethod
    def from_symbol(cls, s: str) -> "Kind":
        try:
            return {"X": cls.CROSS, "B": cls.BAR}[s]
        except KeyError:
            raise ValueError(f"unknown link kind {s!r}") from None


class Link(NamedTuple):
    time: float
    kind: Kind


class LinkCollision(ValueError):
    """A link time coincides with an existing endpoint time at one of its vertices."""


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by ``(seed, *keys)``.

    Distinct key tuples give statistically independent streams, so chains and
    replicates can be assigned streams by id without coordination.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *keys])))


def derive_seed(seed: int, *keys: int) -> int:
    """63-bit integer seed for compiled kernels, keyed like :func:`make_rng`."""
    state = np.random.SeedSequence([seed, *keys]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 62) - 1)


@dataclass(frozen=True, eq=False)
class LinkConfiguration:
    """Per-edge time-ordered links, stored flat and sorted by ``(edge, time)``.

    ``offsets[e]:offsets[e+1]`` slices the links of edge ``e``.
    """

    graph: Graph
    edge: np.ndarray
    time: np.ndarray
    kind: np.ndarray
    offsets: np.ndarray

    @classmethod
    def empty(cls, g: Graph) -> "LinkConfiguration":
        z = np.zeros(0, dtype=np.int64)
        return cls.from_arrays(g, z, np.zeros(0), np.zeros(0, dtype=np.int8))

    @classmethod
    def from_arrays(cls, g: Graph, edge, time, kind, check: bool = True) -> "LinkConfiguration":
        edge = np.asarray(edge, dtype=np.int64)
        time = np.asarray(time, dtype=np.float64)
        kind = np.asarray(kind, dtype=np.int8)
        if not (edge.shape == time.shape == kind.shape):
            raise ValueError("edge/time/kind arrays must have equal length")
        if edge.size and (edge.min() < 0 or edge.max() >= g.edge_count):
            raise ValueError("edge index out of range")
        if time.size and (time.min() < 0.0 or time.max() >= 1.0):
            raise ValueError("link times must lie in [0, 1)")
        order = np.lexsort((time, edge))
        edge, time, kind = edge[order], time[order], kind[order]
        offsets = np.zeros(g.edge_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(edge, minlength=g.edge_count), out=offsets[1:])
        conf = cls(g, edge, time, kind, offsets)
        if check and not conf.collision_free():
            raise LinkCollision("two link endpoints share a time at the same vertex")
        return conf

    @classmethod
    def from_links(cls, g: Graph, links: dict) -> "LinkConfiguration":
        """Build from ``{edge_index: [Link | (time, kind), ...]}``."""
        e, t, k = [], [], []
        for idx, seq in links.items():
            for tm, kd in seq:
                e.append(idx)
                t.append(tm)
                k.append(int(kd))
        return cls.from_arrays(g, e, t, k)

    @property
    def total_links(self) -> int:
        return int(self.edge.size)

    def count(self, edge: int) -> int:
        return int(self.offsets[edge + 1] - self.offsets[edge])

    def links_on(self, edge: int) -> list[Link]:
        a, b = self.offsets[edge], self.offsets[edge + 1]
        return [Link(float(self.time[i]), Kind(int(self.kind[i]))) for i in range(a, b)]

    def endpoint_times(self, v: int) -> np.ndarray:
        g = self.graph
        incident = (g.eu[self.edge] == v) | (g.ev[self.edge] == v)
        return self.time[incident]

    def collision_free(self) -> bool:
        if self.total_links < 2:
            return True
        g = self.graph
        verts = np.concatenate([g.eu[self.edge], g.ev[self.edge]])
        times = np.concatenate([self.time, self.time])
        order = np.lexsort((times, verts))
        v, t = verts[order], times[order]
        return not np.any((v[1:] == v[:-1]) & (t[1:] == t[:-1]))

    def restrict(self, edge_mask: np.ndarray) -> "LinkConfiguration":
        """Keep only links on edges where ``edge_mask`` is true (same graph)."""
        keep = np.asarray(edge_mask, dtype=bool)[self.edge]
        return LinkConfiguration.from_arrays(self.graph, self.edge[keep], self.time[keep],
                                             self.kind[keep], check=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinkConfiguration):
            return NotImplemented
        return (self.graph is other.graph and np.array_equal(self.edge, other.edge)
                and np.array_equal(self.time, other.time)
                and np.array_equal(self.kind, other.kind))

    def __repr__(self) -> str:
        return f"LinkConfiguration(links={self.total_links}, edges={self.graph.edge_count})"

    # -- text fixtures -------------------------------------------------------

    def to_text(self) -> str:
        """One line per link: ``edge_u edge_v time kind`` with kind in {X, B}."""
        g = self.graph
        out = io.StringIO()
        for e, t, k in zip(self.edge.tolist(), self.time.tolist(), self.kind.tolist()):
            out.write(f"{g.eu[e]} {g.ev[e]} {t!r} {Kind(k).symbol}\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, g: Graph, text: str) -> "LinkConfiguration":
        e, t, k = [], [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 'u v time kind', got {line!r}")
            e.append(g.edge_index(int(parts[0]), int(parts[1])))
            t.append(float(parts[2]))
            k.append(int(Kind.from_symbol(parts[3])))
        return cls.from_arrays(g, e, t, k)


def sample_links(g: Graph, beta: float, u: float, rng: np.random.Generator) -> LinkConfiguration:
    """Draw one realisation of the marked link process on ``g``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    counts = rng.poisson(beta, size=g.edge_count)
    total = int(counts.sum())
    edge = np.repeat(np.arange(g.edge_count, dtype=np.int64), counts)
    time = rng.random(total)
    kind = (rng.random(total) < u).astype(np.int8)
    while True:
        conf = LinkConfiguration.from_arrays(g, edge, time, kind, check=False)
        if conf.collision_free():
            return conf
        # exact float ties: redraw every time involved in one
        time = _redraw_ties(g, conf.edge, conf.time, rng)
        edge, kind = conf.edge, conf.kind


def _redraw_ties(g: Graph, edge, time, rng) -> np.ndarray:
    verts = np.concatenate([g.eu[edge], g.ev[edge]])
    times = np.concatenate([time, time])
    idx = np.concatenate([np.arange(time.size), np.arange(time.size)])
    order = np.lexsort((times, verts))
    v, t, i = verts[order], times[order], idx[order]
    tie = np.nonzero((v[1:] == v[:-1]) & (t[1:] == t[:-1]))[0]
    time = time.copy()
    for j in np.unique(np.concatenate([i[tie], i[tie + 1]])):
        time[j] = rng.random()
    return time


def insert_link(c: LinkConfiguration, edge: int, link: Link | tuple) -> LinkConfiguration:
    """Configuration with ``link`` added to ``edge``.

    Raises :class:`LinkCollision` if the time is already used at either endpoint.
    """
    t, k = float(link[0]), int(link[1])
    if not 0.0 <= t < 1.0:
        raise ValueError("link time must lie in [0, 1)")
    g = c.graph
    for v in (g.eu[edge], g.ev[edge]):
        if np.any(c.endpoint_times(int(v)) == t):
            raise LinkCollision(f"time {t!r} already used at vertex {int(v)}")
    return LinkConfiguration.from_arrays(
        g, np.append(c.edge, edge), np.append(c.time, t), np.append(c.kind, k), check=False)


def remove_link(c: LinkConfiguration, edge: int, index: int) -> LinkConfiguration:
    """Configuration with the ``index``-th link (in time order) of ``edge`` removed."""
    n = c.count(edge)
    if not 0 <= index < n:
        raise IndexError(f"edge {edge} has {n} links, no index {index}")
    drop = int(c.offsets[edge]) + index
    keep = np.ones(c.total_links, dtype=bool)
    keep[drop] = False
    return LinkConfiguration(c.graph, c.edge[keep], c.time[keep], c.kind[keep],
                             _recount(c.graph, c.edge[keep]))


def _recount(g: Graph, edge: np.ndarray) -> np.ndarray:
    offsets = np.zeros(g.edge_count + 1, dtype=np.int64)
    np.cumsum(np.bincount(edge, minlength=g.edge_count), out=offsets[1:])
    return offsets


def iter_links(c: LinkConfiguration) -> Iterable[tuple[int, Link]]:
    for e, t, k in zip(c.edge.tolist(), c.time.tolist(), c.kind.tolist()):
        yield e, Link(t, Kind(k))
