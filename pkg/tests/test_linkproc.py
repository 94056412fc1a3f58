import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loopcrit.linkproc import (BAR, CROSS, Kind, Link, LinkCollision, LinkConfiguration,
                               derive_seed, insert_link, make_rng, remove_link, sample_links)
from loopcrit.topology import build_path, build_tree


def _sorted_ok(c):
    keys = list(zip(c.edge.tolist(), c.time.tolist()))
    return keys == sorted(keys)


def test_empty_and_text_roundtrip():
    g = build_tree(2, 2)
    assert LinkConfiguration.empty(g).total_links == 0
    c = LinkConfiguration.from_links(g, {0: [(0.5, CROSS), (0.25, BAR)], 3: [(0.75, CROSS)]})
    assert c.links_on(0) == [Link(0.25, Kind.BAR), Link(0.5, Kind.CROSS)]
    text = c.to_text()
    assert text.splitlines()[0] == "0 1 0.25 B"
    assert LinkConfiguration.from_text(g, text) == c


def test_from_text_rejects_garbage():
    g = build_path(3)
    with pytest.raises(ValueError):
        LinkConfiguration.from_text(g, "0 1 0.5")
    with pytest.raises(ValueError):
        LinkConfiguration.from_text(g, "0 1 0.5 Q")


def test_collisions_detected():
    g = build_path(3)
    with pytest.raises(LinkCollision):
        LinkConfiguration.from_links(g, {0: [(0.5, CROSS)], 1: [(0.5, BAR)]})
    c = LinkConfiguration.from_links(g, {0: [(0.5, CROSS)]})
    with pytest.raises(LinkCollision):
        insert_link(c, 1, (0.5, BAR))
    # same time on disjoint edges is fine
    g4 = build_path(4)
    LinkConfiguration.from_links(g4, {0: [(0.5, CROSS)], 2: [(0.5, BAR)]})


def test_remove_bad_index():
    g = build_path(2)
    c = LinkConfiguration.from_links(g, {0: [(0.1, CROSS)]})
    with pytest.raises(IndexError):
        remove_link(c, 0, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.05, 3.0), st.floats(0.0, 1.0))
def test_insert_remove_keep_sorted(seed, beta, u):
    rng = make_rng(seed)
    g = build_tree(2, 2)
    c = sample_links(g, beta, u, rng)
    assert _sorted_ok(c) and c.collision_free()
    e = int(rng.integers(g.edge_count))
    t = float(rng.random())
    c2 = insert_link(c, e, (t, CROSS))
    assert c2.total_links == c.total_links + 1 and _sorted_ok(c2) and c2.collision_free()
    idx = [l.time for l in c2.links_on(e)].index(t)
    assert remove_link(c2, e, idx) == c


def test_sample_links_statistics():
    g = build_tree(3, 1)
    rng = make_rng(5)
    draws = [sample_links(g, 0.4, 0.3, rng) for _ in range(4000)]
    counts = np.array([c.total_links for c in draws])
    # mean 1.2, sd of the mean sqrt(1.2/4000)
    assert abs(counts.mean() - 1.2) < 4 * np.sqrt(1.2 / 4000)
    kinds = np.concatenate([c.kind for c in draws])
    assert abs(kinds.mean() - 0.3) < 4 * np.sqrt(0.21 / kinds.size)


def test_streams_are_keyed():
    assert make_rng(1, 2).random() == make_rng(1, 2).random()
    assert make_rng(1, 2).random() != make_rng(1, 3).random()
    assert derive_seed(3, 4) == derive_seed(3, 4) != derive_seed(3, 5)
    assert 0 <= derive_seed(7) < 2 ** 62
