import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loopcrit.analytics.events import (EventKind, build_exploration_subtree,
                                       classify_root_event, root_subtree_loop_counts)
from loopcrit.linkproc import Kind, LinkConfiguration, make_rng, sample_links
from loopcrit.looptracer import trace_loops
from loopcrit.oracle import walk_loops
from loopcrit.topology import build_tree
from loopcrit.weighting.sampler import iid_observables

X, B = Kind.CROSS, Kind.BAR


@pytest.fixture(scope="module")
def tree():
    return build_tree(3, 2)


def _root_edge(g, i=0):
    return int(g.children(g.root)[i])


def test_empty_is_a1(tree):
    assert classify_root_event(tree, LinkConfiguration.empty(tree)).kind is EventKind.A1


def test_single_links_are_a1(tree):
    c = LinkConfiguration.from_links(tree, {e: [(0.1 + 0.2 * i, X)] for i, e in enumerate(tree.children(0))})
    assert classify_root_event(tree, c).kind is EventKind.A1


def test_mixed_pair(tree):
    e = _root_edge(tree)
    ev = classify_root_event(tree, LinkConfiguration.from_links(tree, {e: [(0.2, X), (0.5, B)]}))
    assert ev.kind is EventKind.A2_MIX
    assert ev.child == tree.ev[e]
    assert (ev.lambda_root, ev.lambda_child) == (pytest.approx(1.0), pytest.approx(1.0))


@pytest.mark.parametrize("kind,expect_child", [(B, 0.7), (X, 0.3)])
def test_same_pair_lengths(tree, kind, expect_child):
    e = _root_edge(tree)
    ev = classify_root_event(tree, LinkConfiguration.from_links(tree, {e: [(0.2, kind), (0.5, kind)]}))
    assert ev.kind is EventKind.A2_SAME
    assert ev.lambda_root == pytest.approx(0.7)
    assert ev.x_length == ev.lambda_root
    assert ev.lambda_child == pytest.approx(expect_child)


def test_a2_broken_by_grandchild_edge(tree):
    e = _root_edge(tree)
    x = int(tree.ev[e])
    f = int(tree.children(x)[0])
    c = LinkConfiguration.from_links(tree, {e: [(0.2, X), (0.5, X)], f: [(0.3, B), (0.6, B)]})
    assert classify_root_event(tree, c).kind is EventKind.OTHER
    c = LinkConfiguration.from_links(tree, {e: [(0.2, X), (0.5, X)], f: [(0.3, B)]})
    assert classify_root_event(tree, c).kind is EventKind.A2_SAME


def test_two_double_root_edges_is_other(tree):
    e0, e1 = _root_edge(tree, 0), _root_edge(tree, 1)
    c = LinkConfiguration.from_links(tree, {e0: [(0.2, X), (0.5, X)], e1: [(0.3, B), (0.6, B)]})
    assert classify_root_event(tree, c).kind is EventKind.OTHER
    assert build_exploration_subtree(tree, c).edge_count == 2


def test_triple_link_root_edge_is_other_with_one_subtree_edge(tree):
    # a single root edge with three links: not A1, not A2, yet the subtree has one edge
    e = _root_edge(tree)
    c = LinkConfiguration.from_links(tree, {e: [(0.1, X), (0.4, B), (0.7, X)]})
    assert classify_root_event(tree, c).kind is EventKind.OTHER
    assert build_exploration_subtree(tree, c).edge_count == 1


def test_a2_subtree_shape(tree):
    e = _root_edge(tree, 2)
    c = LinkConfiguration.from_links(tree, {e: [(0.2, X), (0.5, B)], _root_edge(tree, 0): [(0.9, X)]})
    s = build_exploration_subtree(tree, c)
    assert s.size(0) == 1 and s.size(1) == 1 and s.size(2) == 0
    assert s.generations[1][0] == tree.ev[e]
    assert s.boundary[0].tolist() == [_root_edge(tree, 0)]


# -- kernel observables against independent Python definitions -------------------


def _subtree_py(g, c):
    counts = np.diff(c.offsets)
    keep, frontier, edges = {g.root}, [g.root], 0
    while frontier:
        nxt = []
        for v in frontier:
            for e in g.children(v):
                if counts[e] >= 2:
                    nxt.append(int(g.ev[e]))
                    edges += 1
        keep.update(nxt)
        frontier = nxt
    return keep, edges


def _event_py(g, c):
    counts = np.diff(c.offsets)
    root_edges = g.children(g.root)
    rc = counts[root_edges]
    if np.all(rc <= 1):
        return EventKind.A1
    if np.sum(rc == 2) == 1 and np.all(rc <= 2):
        e = int(root_edges[np.flatnonzero(rc == 2)[0]])
        x = int(g.ev[e])
        if np.all(counts[g.children(x)] <= 1):
            kinds = {k.kind for k in c.links_on(e)}
            return EventKind.A2_MIX if len(kinds) == 2 else EventKind.A2_SAME
    return EventKind.OTHER


def test_kernel_observables_match_python():
    g = build_tree(3, 2)
    obs, configs = iid_observables(g, 1.2, 0.5, 600, seed=3, with_configs=True)
    seen = set()
    for i, c in enumerate(configs):
        dec = trace_loops(g, c)
        assert obs.ell[i] == dec.loop_count == walk_loops(g, c)[0]
        assert obs.n_links[i] == c.total_links
        r = dec.loop_of_point(g.root, 0.0)
        reach = max(int(g.generation[v]) for v in dec.loops_visiting[r])
        assert obs.root_reach[i] == reach
        assert obs.connected[i] == (dec.loop_of_point(1, 0.0) == r)
        ev = classify_root_event(g, c)
        assert obs.event[i] == ev.kind == _event_py(g, c)
        seen.add(ev.kind)
        if ev.kind.is_a2:
            assert obs.lambda_root[i] == pytest.approx(ev.lambda_root, abs=1e-12)
            assert obs.lambda_child[i] == pytest.approx(ev.lambda_child, abs=1e-12)
        keep, n_edges = _subtree_py(g, c)
        sub = build_exploration_subtree(g, c)
        assert obs.subtree_edges[i] == n_edges == sub.edge_count
        for k in range(3):
            assert obs.subtree_size(k)[i] == sum(1 for v in keep if g.generation[v] == k) == sub.size(k)
            expect = sub.boundary[k].size if k < len(sub.boundary) else 0
            assert obs.boundary_size(k)[i] == expect
    assert seen == set(EventKind)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 1.5))
def test_other_iff_big_subtree_or_crowded_edge(seed, beta):
    g = build_tree(4, 2)
    c = sample_links(g, beta, 0.5, make_rng(seed))
    kind = classify_root_event(g, c).kind
    s = build_exploration_subtree(g, c)
    crowded = bool(np.any(np.diff(c.offsets)[g.children(g.root)] >= 3))
    assert (kind is EventKind.A1) == (s.edge_count == 0)
    assert (kind is EventKind.OTHER) == (s.edge_count >= 2 or crowded)


# -- loop count on A1-type configurations ----------------------------------------


def a1_decomposition_holds(g, c) -> bool:
    k = int(np.sum(np.diff(c.offsets)[g.children(g.root)] == 1))
    return trace_loops(g, c).loop_count == root_subtree_loop_counts(g, c).sum() - k + 1


def random_a1_config(g, rng, beta):
    c = sample_links(g, beta, float(rng.random()), rng)
    root_edges = g.children(g.root)
    keep = np.ones(c.total_links, bool)
    for e in root_edges:
        lo, hi = c.offsets[e], c.offsets[e + 1]
        keep[lo + 1:hi] = False
    return LinkConfiguration.from_arrays(g, c.edge[keep], c.time[keep], c.kind[keep])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([(2, 3), (3, 2), (5, 1)]))
def test_loop_count_on_a1_configurations(seed, shape):
    g = build_tree(*shape)
    rng = make_rng(seed)
    c = random_a1_config(g, rng, 0.3 + 1.5 * rng.random())
    assert classify_root_event(g, c).kind is EventKind.A1
    assert a1_decomposition_holds(g, c)


def test_subtree_loop_counts_without_links():
    g = build_tree(3, 2)
    assert root_subtree_loop_counts(g, LinkConfiguration.empty(g)).tolist() == [4, 4, 4]
