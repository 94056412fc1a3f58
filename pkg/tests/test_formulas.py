import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from loopcrit.analytics import formulas as F
from loopcrit.params import ModelParams, alpha_from_beta, beta_from_alpha


def test_alpha_star_examples():
    for theta in (0.5, 1, 2, 3.7):
        assert F.alpha_star(theta, 1) == 1
    assert F.alpha_star(Fraction(2), Fraction(1, 2)) == Fraction(1, 3)
    assert F.alpha_star(1, 0) == Fraction(5, 6)


def test_q_r_examples():
    assert F.q_coeff(1, 1) == Fraction(1, 2) and F.r_coeff(1, 1) == Fraction(1, 2)
    assert F.q_coeff(2, 0) == 2 and F.r_coeff(2, 0) == Fraction(8, 3)


@given(st.fractions(Fraction(1, 100), 4), st.fractions(0, 1))
def test_alpha_star_identity_exact(theta, u):
    assert F.alpha_star(theta, u) == 1 + F.q_coeff(theta, u) - F.r_coeff(theta, u)


def test_beta_c_large_d():
    for d in (10 ** 3, 10 ** 6):
        assert abs(F.beta_c_asymptotic(d, 1.5, 0.3) * d / 1.5 - 1) < 2.0 / d


def test_lattice_values():
    assert [F.beta_c_lattice_spin_half(3, dl) for dl in (1, 0, -1)] == \
        [Fraction(4, 9), Fraction(11, 27), Fraction(11, 27)]
    assert F.LATTICE_REFERENCE_SPIN_HALF == {1: 0.596, 0: 0.4960, -1: 0.530}
    rows = F.lattice_table(3)
    assert [r["exact"] for r in rows] == ["4/9", "11/27", "11/27"]
    assert all("literature_annotation" not in r for r in F.lattice_table(4))


@pytest.mark.parametrize("delta", [-1, -0.5, 0, 0.5, 1])
def test_spin_half_re_expansion(delta):
    u = (1 + Fraction(delta)) / 2
    scaled = []
    for nu in (10, 30, 100, 300, 1000):
        diff = F.beta_c_asymptotic(2 * nu - 1, 2, u) - F.beta_c_lattice_spin_half(nu, Fraction(delta))
        scaled.append(abs(float(diff)) * nu ** 3)
    assert max(scaled) < 2 * scaled[0] + 1e-12
    assert max(scaled) < 5


@pytest.mark.parametrize("u", [0.1, 0.5, 0.9])
def test_spin_one_re_expansion(u):
    u = Fraction(u).limit_denominator(100)
    scaled = [abs(float(F.beta_c_asymptotic(2 * nu - 1, 3, u) - F.beta_c_lattice_spin1(nu, u))) * nu ** 3
              for nu in (10, 100, 1000, 10000)]
    assert max(scaled) < 5
    assert 0.5 < scaled[3] / scaled[2] < 2


def test_prob_A1_matches_poisson():
    p = ModelParams(4, 1.0, 0.7, 0.25)
    p01 = math.exp(-0.25) * 1.25
    assert F.prob_A1_closed_form(p, 1.0) == pytest.approx(p01 ** 4, rel=1e-14)
    assert F.prob_A1_closed_form(p, 1.0) == pytest.approx(0.898143, abs=1e-6)
    assert F.prob_A1_closed_form(ModelParams(4, 2.0, 0.5, 1e-9), 1.0) == pytest.approx(1.0)


def test_prob_A2_matches_poisson_at_theta_one():
    for d, beta in ((3, 0.3), (8, 0.125)):
        p = ModelParams(d, 1.0, 1.0, beta)
        p01 = F.poisson_pmf(0, beta) + F.poisson_pmf(1, beta)
        direct = d * F.poisson_pmf(2, beta) * p01 ** (d - 1) * p01 ** d
        assert F.prob_A2_closed_form(p, 1.0, 1.0) == pytest.approx(direct, rel=1e-13)
    assert F.prob_A2_closed_form(ModelParams(4, 2.0, 0.5, 1e-8), 1, 1) < 1e-14


def test_exp1_scaling():
    for x in (-1.0, 0.0, 2.0):
        scaled = [abs(F.exp1_exact(d, 0.7, x, 0.0) - F.expansion_exp1(d, 0.7, x, 0.0)) * d ** 3
                  for d in (2 ** k for k in range(4, 11))]
        assert max(scaled) < 2 * scaled[0]
    # x = 0 is the sigma-free expansion
    assert F.expansion_exp1(50, 0.3, 0.0, 0.1) == F.expansion_exp1(50, 0.3, 5.0, 0.0)
    d = 10 ** 6
    a, b = F.exp1_exact(d, 0.0, 1.0, 1 / d), F.expansion_exp1(d, 0.0, 1.0, 1 / d)
    assert abs(a - b) / abs(a) < 1e-12


def test_two_d_factor_scaling():
    for theta in (0.5, 2.0):
        for alpha in (-2.0, 0.0, 3.0):
            scaled = [abs(F.two_d_factor_exact(d, theta, alpha) - F.two_d_factor_leading(d, theta))
                      * d * d for d in (8, 32, 128, 512, 2048)]
            assert max(scaled) < 2 * scaled[0] + 1e-12


def test_beta_plus_and_subtree_size():
    assert F.beta_plus(ModelParams(4, 1.0, 0.5, 0.3)) == 0.3
    assert F.beta_plus(ModelParams(4, 0.5, 0.5, 0.3)) == pytest.approx(0.6)
    assert F.beta_plus(ModelParams(4, 2.0, 0.5, 0.3)) == pytest.approx(0.6)
    assert F.expected_subtree_generation_size(8, 0.25, 0) == 1
    assert F.expected_subtree_generation_size(8, 0.25, 2) == pytest.approx(
        (8 * (1 - math.exp(-0.25) * 1.25)) ** 2, rel=1e-12)
    assert sum(F.poisson_pmf(i, 1.7) for i in range(40)) == pytest.approx(1.0, abs=1e-14)


def test_plus_events():
    pr = F.prob_increasing_events_plus(4, 0.2, 2)
    p01 = F.poisson_pmf(0, 0.2) + F.poisson_pmf(1, 0.2)
    assert pr["A1c"] == pytest.approx(1 - p01 ** 4)
    assert 0 < pr["A1cA2c"] < pr["A1c"]


def test_params_alpha_roundtrip():
    p = ModelParams.from_alpha(16, 2.0, 0.5, 1.5)
    assert p.alpha == pytest.approx(1.5) and p.beta == pytest.approx(beta_from_alpha(16, 2.0, 1.5))
    assert alpha_from_beta(16, 2.0, p.beta) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        ModelParams(4, 1.0, 1.5, 0.1)
    with pytest.raises(ValueError):
        ModelParams(4, -1.0, 0.5, 0.1)
