import numpy as np
import pytest
from hypothesis import given, strategies as st

from loopcrit.topology import (GraphSizeError, build_path, build_tree, from_edges, tree_size,
                               vertices_at_generation)


@given(st.integers(1, 6), st.integers(0, 4))
def test_tree_counts(d, m):
    g = build_tree(d, m)
    assert g.vertex_count == tree_size(d, m) == sum(d ** k for k in range(m + 1))
    assert g.edge_count == g.vertex_count - 1
    for k in range(m + 1):
        assert vertices_at_generation(g, k).size == d ** k
    assert vertices_at_generation(g, m + 1).size == 0


def test_tree_parent_rule_and_children():
    g = build_tree(3, 2)
    assert np.all(g.eu == (g.ev - 1) // 3)
    assert sorted(g.ev[g.children(0)].tolist()) == [1, 2, 3]
    assert np.all(g.generation[g.ev] == g.generation[g.eu] + 1)


def test_path_and_edge_index():
    g = build_path(5)
    assert g.edge_count == 4 and g.generation.tolist() == [0, 1, 2, 3, 4]
    assert g.edge_index(3, 2) == 2
    with pytest.raises(KeyError):
        g.edge_index(0, 4)


def test_from_edges_validation():
    g = from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert g.generation.tolist() == [0, 1, 2, 1]
    with pytest.raises(ValueError):
        from_edges(3, [(0, 0)])
    with pytest.raises(ValueError):
        from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        from_edges(2, [(0, 5)])


def test_size_guard():
    with pytest.raises(GraphSizeError):
        build_tree(16, 8)
    with pytest.raises(ValueError):
        build_tree(0, 2)
