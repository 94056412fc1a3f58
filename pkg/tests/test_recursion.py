import math

import numpy as np
import pytest

from loopcrit.analytics.formulas import prob_A1_closed_form
from loopcrit.oracle import enumerate_edge
from loopcrit.params import ModelParams
from loopcrit.topology import build_tree
from loopcrit.weighting import estimate_partition_ratio, expectations
from loopcrit.weighting import observables as O
from loopcrit.weighting.recursion import SubtreeOverflow, tree_recursion


def test_theta_one_is_exact_for_z_and_a1():
    p = ModelParams(5, 1.0, 0.5, 0.3)
    res = tree_recursion(p, 3, 4000, seed=1)
    for m in (1, 2, 3):
        assert res.z[m].mean == pytest.approx(1.0, abs=1e-12)
        assert res.prob_a1[m].mean == pytest.approx(prob_A1_closed_form(p, 1.0), rel=1e-12)


def test_single_edge_against_oracle():
    theta, u, beta = 2.0, 0.5, 0.6
    en = enumerate_edge(beta, theta, u)
    res = tree_recursion(ModelParams(1, theta, u, beta), 1, 200_000, seed=2)
    z_exact = math.exp(-beta * (1 - 1 / theta)) * theta ** 2 / en.Z
    assert res.z[1].z_score(z_exact) < 4
    assert res.sigma[1].z_score(en.prob_visit) < 4
    assert res.prob_a1[1].z_score(en.prob_links(0) + en.prob_links(1)) < 4


@pytest.mark.parametrize("theta,u", [(2.0, 0.5), (0.5, 1.0), (3.0, 0.0)])
def test_against_direct_sampling(theta, u):
    d, beta = 3, 0.45
    p = ModelParams(d, theta, u, beta)
    res = tree_recursion(p, 3, 64_000, seed=3)
    for m in (1, 2, 3):
        g = build_tree(d, m)
        sig, a1, a2 = expectations(g, p, [O.reaches(m), O.event_in(0), O.event_in(1, 2)],
                                   200_000, seed=m, method="mcmc")
        assert res.sigma[m].z_score(sig.mean, sig.std_error) < 4
        assert res.prob_a1[m].z_score(a1.mean, a1.std_error) < 4
        assert res.prob_a2[m].z_score(a2.mean, a2.std_error) < 4
    zm = estimate_partition_ratio((build_tree(d, 1), build_tree(d, 2)), p, 200_000, seed=4)
    assert res.z[2].z_score(zm.mean, zm.std_error) < 4


def test_worker_invariance():
    p = ModelParams(4, 2.0, 0.5, 0.4)
    a = tree_recursion(p, 4, 6400, seed=5, workers=1)
    b = tree_recursion(p, 4, 6400, seed=5, workers=3)
    assert np.array_equal(a.raw, b.raw)


def test_overflow_is_reported():
    with pytest.raises(SubtreeOverflow):
        tree_recursion(ModelParams(4, 2.0, 0.5, 3.0), 8, 3200, seed=0, max_subtree=64)


def test_validation():
    p = ModelParams(4, 2.0, 0.5, 0.4)
    with pytest.raises(ValueError):
        tree_recursion(p, -1, 100, 0)
    with pytest.raises(ValueError):
        tree_recursion(p, 2, 100, 0, replicates=1)
