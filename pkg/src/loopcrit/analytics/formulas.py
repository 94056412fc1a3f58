"""Closed-form quantities of the large-degree expansion.

Exact expressions and their ``1/d`` expansions live in separate functions so
that identities and asymptotics are tested separately.  The coefficient
functions use only field operations, so ``Fraction`` inputs give exact output.
"""
from __future__ import annotations

import math
from fractions import Fraction

from ..params import ModelParams

# Numerical critical points on Z^3 quoted in the literature, keyed by Delta.
# Annotation only; nothing here computes them.
LATTICE_REFERENCE_SPIN_HALF = {1: 0.596, 0: 0.4960, -1: 0.530}


def alpha_star(theta, u):
    """Second-order coefficient ``1 - theta u (1-u) - theta^2 (1-u)^2 / 6``."""
    return 1 - theta * u * (1 - u) - Fraction(1, 6) * theta ** 2 * (1 - u) ** 2


def q_coeff(theta, u):
    return Fraction(1, 2) * theta * (2 * u * (1 - u) + theta * (u ** 2 + (1 - u) ** 2))


def r_coeff(theta, u):
    return 2 * theta * u * (1 - u) + Fraction(1, 2) * theta ** 2 * (u ** 2 + Fraction(4, 3) * (1 - u) ** 2)


def beta_c_asymptotic(d, theta, u):
    """Two-term expansion ``theta (1/d + alpha_star / d^2)`` (no remainder)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return theta * (Fraction(1) / d + alpha_star(theta, u) / d ** 2)


def beta_c_lattice_spin_half(nu, delta):
    """Conjectured two-term value on Z^nu for the XXZ chain parameter ``delta``
    (theta = 2, u = (1 + delta)/2, d = 2 nu - 1, re-expanded in 1/nu)."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    return Fraction(1) / nu + (1 - Fraction(1, 6) * (1 - delta) * (2 + delta)) / nu ** 2


def beta_c_lattice_spin1(nu, u):
    """Spin-1 nematic analogue (theta = 3, d = 2 nu - 1, re-expanded in 1/nu)."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    return Fraction(3, 2) / nu + Fraction(3, 2) * (1 - Fraction(3, 4) * (1 - u ** 2)) / nu ** 2


def lattice_table(nu: int) -> list[dict]:
    """Spin-1/2 conjectured values next to the quoted numerics (for reports)."""
    rows = []
    for delta in (1, 0, -1):
        val = beta_c_lattice_spin_half(nu, delta)
        row = {"nu": nu, "delta": delta, "beta_c_formula": float(val),
               "exact": str(Fraction(val).limit_denominator(10 ** 9))}
        if nu == 3:
            row["literature_annotation"] = LATTICE_REFERENCE_SPIN_HALF[delta]
        rows.append(row)
    return rows


# -- local event probabilities ------------------------------------------------


def one_link_factor(beta: float, theta: float) -> float:
    """``e^{-beta/theta} (1 + beta/theta)``, the per-child weight of <= 1 link."""
    b = beta / theta
    return math.exp(-b) * (1.0 + b)


def prob_A1_closed_form(params: ModelParams, z_m: float) -> float:
    """Probability that every root edge carries at most one link."""
    return z_m * one_link_factor(params.beta, params.theta) ** params.d


def prob_A2_closed_form(params: ModelParams, z_m: float, z_m1: float) -> float:
    """Exact line for the event of one doubly-linked root edge (all else single)."""
    d, b, th, u = params.d, params.beta, params.theta, params.u
    pair = d * b * b * math.exp(-b / th) / (2 * th)
    kinds = 2 * u * (1 - u) + th * (u * u + (1 - u) ** 2)
    return z_m * z_m1 * pair * one_link_factor(b, th) ** (2 * d - 1) * kinds


def prob_A2_expansion(params: ModelParams, z_m: float, z_m1: float) -> float:
    """First-order form ``z z' theta/(2d) (1 - 1/d) (2u(1-u) + theta(u^2+(1-u)^2))``."""
    d, th, u = params.d, params.theta, params.u
    return z_m * z_m1 * th / (2 * d) * (1 - 1 / d) * (2 * u * (1 - u) + th * (u * u + (1 - u) ** 2))


def exp1_exact(d: float, alpha: float, x: float, sigma: float) -> float:
    """``(e^{-b}(1 + b - sigma x b))^d`` with ``b = beta/theta = 1/d + alpha/d^2``."""
    b = 1.0 / d + alpha / d ** 2
    return math.exp(d * (-b + math.log1p(b - sigma * x * b)))


def expansion_exp1(d: float, alpha: float, x: float, sigma: float) -> float:
    """Right-hand side of the ``(e^{-b}(1+b-sigma x b))^d`` expansion to order ``d^-2``."""
    s = x * sigma * d
    return (1 - (0.5 + s) / d
            + (1.0 / 3 - alpha + s - alpha * s + 0.5 * (0.5 + s) ** 2) / d ** 2)


def two_d_factor_exact(d: float, theta: float, alpha: float) -> float:
    """``d beta^2 e^{-beta/theta} / (2 theta)`` at ``beta`` from alpha."""
    beta = theta * (1.0 / d + alpha / d ** 2)
    return d * beta * beta * math.exp(-beta / theta) / (2 * theta)


def two_d_factor_leading(d: float, theta: float) -> float:
    return theta / (2 * d)


def zm_first_order(d: int, theta: float, u: float) -> float:
    """``1 - (q - 1/2)/d``, the partition-ratio expansion without remainder."""
    return 1.0 - (float(q_coeff(theta, u)) - 0.5) / d


def partition_ratio_prefactor(params: ModelParams) -> float:
    """``e^{-d beta (1 - 1/theta)}``."""
    return math.exp(-params.d * params.beta * (1 - 1 / params.theta))


# -- domination and the exploration subtree -----------------------------------


def beta_plus(params: ModelParams) -> float:
    """Dominating rate ``max(beta theta, beta/theta)``."""
    return max(params.beta * params.theta, params.beta / params.theta)


def poisson_pmf(i: int, lam: float) -> float:
    if i < 0:
        return 0.0
    return math.exp(-lam + i * math.log(lam) - math.lgamma(i + 1)) if lam > 0 else float(i == 0)


def poisson_tail(i: int, lam: float) -> float:
    """``P(N >= i)`` for ``N ~ Poisson(lam)``."""
    return 1.0 - sum(poisson_pmf(k, lam) for k in range(i))


def expected_subtree_generation_size(d: int, beta_p: float, k: int) -> float:
    """Mean generation-``k`` size of the >=2-link exploration subtree at rate ``beta_p``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return (d * poisson_tail(2, beta_p)) ** k


def prob_increasing_events_plus(d: int, beta_p: float, m: int) -> dict:
    """Exact probabilities of the increasing events under rate-``beta_p`` links on ``T_m``.

    ``A1c``: some root edge has >= 2 links.  ``A1cA2c``: neither A1 nor A2.
    """
    p01 = poisson_pmf(0, beta_p) + poisson_pmf(1, beta_p)
    p2 = poisson_pmf(2, beta_p)
    a1 = p01 ** d
    grand = d if m >= 2 else 0
    a2 = d * p2 * p01 ** (d - 1) * p01 ** grand if m >= 1 else 0.0
    return {"A1c": 1.0 - a1, "A1cA2c": 1.0 - a1 - a2}
