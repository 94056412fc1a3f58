"""End-to-end studies: sigma curves, recursion inequalities, domination,
partition-ratio asymptotics and the bisection scan for the critical point."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analytics.events import A1, A2_MIX, A2_SAME, OTHER
from .analytics.formulas import (alpha_star, beta_c_asymptotic, beta_plus,
                                 prob_increasing_events_plus, q_coeff)
from .linkproc import derive_seed
from .params import ModelParams, beta_from_alpha
from .topology import build_tree, tree_size
from .weighting import observables as ob
from .weighting.estimate import Estimate
from .weighting.recursion import tree_recursion
from .weighting.sampler import choose_method, estimate_partition_ratio, expectations

log = logging.getLogger(__name__)

DIRECT_MAX_VERTICES = 4096
METHODS = ("auto", "reweight", "mcmc", "recursive")


def _resolve_method(params: ModelParams, m_max: int, method: str) -> str:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if method != "auto":
        return method
    if tree_size(params.d, m_max) > DIRECT_MAX_VERTICES:
        return "recursive"
    return choose_method(build_tree(params.d, m_max), params)


@dataclass(frozen=True)
class SigmaCurve:
    params: ModelParams
    method: str
    n: int
    seed: int
    estimates: list  # Estimate per m = 0..m_max

    @property
    def m_max(self) -> int:
        return len(self.estimates) - 1

    @property
    def means(self) -> np.ndarray:
        return np.array([e.mean for e in self.estimates])

    @property
    def errors(self) -> np.ndarray:
        return np.array([e.std_error for e in self.estimates])

    def warnings(self) -> list[str]:
        return [f"m={m}: {w}" for m, e in enumerate(self.estimates) for w in e.warnings]


def estimate_sigma(params: ModelParams, m_max: int, n: int, method: str = "auto", seed: int = 0,
                   workers: int = 1) -> SigmaCurve:
    """``sigma_m`` for ``m = 0..m_max``, each on its own tree ``T_m``.

    ``n`` is the number of samples (chain steps for ``mcmc``) per level.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    method = _resolve_method(params, m_max, method)
    if method == "recursive":
        res = tree_recursion(params, m_max, n, seed, workers=workers)
        return SigmaCurve(params, method, n, seed, list(res.sigma))
    ests = [Estimate(1.0, 0.0, n, float(n))]
    for m in range(1, m_max + 1):
        g = build_tree(params.d, m)
        est = expectations(g, params, [ob.reaches(m)], n, derive_seed(seed, m), method=method,
                           workers=workers)[0]
        ests.append(est)
    return SigmaCurve(params, method, n, seed, ests)


# ---------------------------------------------------------------------------
# recursion inequalities


@dataclass(frozen=True)
class RecursionRow:
    m: int
    sigma: float
    std_error: float
    lower_bound: float
    upper_bound: float
    lower_ok: bool
    upper_ok: bool
    ratio_prev: float  # sigma_{m-1} / sigma_m


@dataclass(frozen=True)
class RecursionReport:
    params: ModelParams
    alpha_star: float
    slack_lower: float
    slack_upper: float
    eps: float
    curve: SigmaCurve
    rows: list

    @property
    def passed(self) -> bool:
        return all(r.lower_ok and r.upper_ok for r in self.rows)

    @property
    def max_ratio(self) -> float:
        """Largest ``sigma_{m-1}/sigma_m``: empirical constant of the monotonicity surrogate."""
        return max(r.ratio_prev for r in self.rows)


def verify_recursion(params: ModelParams, m_max: int, n: int, seed: int = 0, method: str = "auto",
                     slack_lower: float = 2.0, slack_upper: float = 2.0, eps: float = 0.5,
                     n_sigma: float = 3.0, workers: int = 1) -> RecursionReport:
    """Check the lower and upper recursion inequalities at every ``m``.

    The lower bound uses the truncated minimum ``min(sigma_k, sigma_{k-1},
    eps/d)`` with ``sigma_{-1} = 1``; the unquantified remainders are replaced
    by ``slack_lower/d^3`` and ``slack_upper/d^2``.  A bound passes when it
    holds within ``n_sigma`` combined standard errors.
    """
    curve = estimate_sigma(params, m_max, n, method, seed, workers)
    d = params.d
    a_star = float(alpha_star(params.theta, params.u))
    gap = params.alpha - a_star
    s = list(curve.means)
    e = list(curve.errors)
    sig = lambda k: 1.0 if k < 0 else s[k]
    err = lambda k: 0.0 if k < 0 else e[k]

    def tilde(k):
        vals = [(sig(k), err(k)), (sig(k - 1), err(k - 1)), (eps / d, 0.0)]
        return min(vals, key=lambda t: t[0])

    rows = []
    for m in range(1, m_max + 1):
        t, t_err = tilde(m - 1)
        lower = t + t / d * gap - 0.5 * t * t - slack_lower / d ** 3
        lower_se = math.hypot(e[m], abs(1 + gap / d - t) * t_err)
        prev = max((sig(m - 1), err(m - 1)), (sig(m - 2), err(m - 2)), key=lambda p: p[0])
        factor = 1 + gap / d + slack_upper / d ** 2
        upper = prev[0] * factor
        upper_se = math.hypot(e[m], factor * prev[1])
        ratio = s[m - 1] / s[m] if s[m] > 0 else math.inf
        rows.append(RecursionRow(m, s[m], e[m], lower, upper,
                                 s[m] >= lower - n_sigma * lower_se,
                                 s[m] <= upper + n_sigma * upper_se, ratio))
    return RecursionReport(params, a_star, slack_lower, slack_upper, eps, curve, rows)


# ---------------------------------------------------------------------------
# stochastic domination


def event_probabilities(params: ModelParams, m: int, n: int, seed: int = 0, method: str = "auto",
                        workers: int = 1) -> dict:
    """``P(A1)``, ``P(A2)`` and ``P(neither)`` under the theta-weighted measure on ``T_m``."""
    method = _resolve_method(params, m, method)
    if method == "recursive":
        res = tree_recursion(params, m, n, seed, workers=workers)
        return {"A1": res.prob_a1[m], "A2": res.prob_a2[m], "other": res.prob_other[m],
                "method": method}
    g = build_tree(params.d, m)
    a1, a2, oth = expectations(g, params, [ob.event_in(A1), ob.event_in(A2_MIX, A2_SAME),
                                           ob.event_in(OTHER)], n, seed, method=method,
                               workers=workers)
    return {"A1": a1, "A2": a2, "other": oth, "method": method}


@dataclass(frozen=True)
class DominationRow:
    d: int
    beta: float
    beta_plus: float
    p_a1c: Estimate
    p_a1c_plus: float
    p_other: Estimate
    p_other_plus: float
    a1c_ok: bool
    other_ok: bool
    scaled_other: float  # P(neither A1 nor A2) * d^2


@dataclass(frozen=True)
class DominationReport:
    theta: float
    u: float
    alpha: float
    m: int
    rows: list
    band_constant: float
    band_ok: bool

    @property
    def passed(self) -> bool:
        return self.band_ok and all(r.a1c_ok and r.other_ok for r in self.rows)


def check_domination(params: ModelParams, m: int = 2, n: int = 200_000, seed: int = 0,
                     d_list=(4, 8, 16, 32), method: str = "auto", n_sigma: float = 3.0,
                     workers: int = 1) -> DominationReport:
    """Compare the increasing events with the dominating rate-``beta_plus`` process.

    ``params`` supplies ``theta``, ``u`` and ``alpha``; ``beta`` is recomputed
    from ``alpha`` for every ``d`` in ``d_list``.  The scaling check asks every
    ``d^2 P(neither A1 nor A2)`` to lie within a factor 2 of their mean.
    """
    rows = []
    for d in d_list:
        p = ModelParams.from_alpha(d, params.theta, params.u, params.alpha)
        probs = event_probabilities(p, m, n, derive_seed(seed, d), method, workers)
        a1 = probs["A1"]
        a1c = Estimate(1 - a1.mean, a1.std_error, a1.n_samples, a1.ess, a1.warnings)
        oth = probs["other"]
        bp = beta_plus(p)
        plus = prob_increasing_events_plus(d, bp, m)
        rows.append(DominationRow(d, p.beta, bp, a1c, plus["A1c"], oth, plus["A1cA2c"],
                                  a1c.mean <= plus["A1c"] + n_sigma * a1c.std_error,
                                  oth.mean <= plus["A1cA2c"] + n_sigma * oth.std_error,
                                  oth.mean * d * d))
    scaled = np.array([r.scaled_other for r in rows])
    const = float(scaled.mean())
    band_ok = bool(const > 0 and np.all(scaled >= const / 2) and np.all(scaled <= 2 * const))
    return DominationReport(params.theta, params.u, params.alpha, m, rows, const, band_ok)


# ---------------------------------------------------------------------------
# partition-ratio asymptotics


@dataclass(frozen=True)
class ZmRow:
    d: int
    m: int
    z: Estimate
    residual: float  # z - 1 + (q - 1/2)/d
    scaled: float  # residual * d^2
    scaled_error: float


@dataclass(frozen=True)
class ZmReport:
    theta: float
    u: float
    alpha: float
    rows: list
    products: list  # (d, m, z_m z_{m-1}, error) for m >= 2
    bounded: bool
    fitted_constant: float
    growth_exponents: dict = field(default_factory=dict)  # m -> (slope, error)


# an O(1/d) remainder would make the d^2-scaled value grow like d (exponent 1)
MAX_GROWTH_EXPONENT = 0.5


def _growth_exponent(lo: "ZmRow", hi: "ZmRow") -> tuple[float, float]:
    """Log-log slope of ``|scaled|`` between two values of ``d`` with its error."""
    a, b = abs(lo.scaled), abs(hi.scaled)
    span = math.log(hi.d / lo.d)
    if a == 0 or b == 0:
        return (0.0 if b == 0 else math.inf), 0.0
    err = math.hypot(lo.scaled_error / a, hi.scaled_error / b) / span
    return math.log(b / a) / span, err


def check_zm_asymptotics(theta: float, u: float, d_list=(4, 8, 16), n: int = 200_000,
                         seed: int = 0, m_list=(1, 2), alpha: float = 0.0, method: str = "auto",
                         n_sigma: float = 3.0, workers: int = 1) -> ZmReport:
    """Scaled remainders ``(z_m - 1 + (q - 1/2)/d) d^2`` over a sweep of ``d``.

    ``bounded`` holds when, for every ``m``, the log-log growth exponent of the
    scaled remainder between the smallest and largest ``d`` is at most
    :data:`MAX_GROWTH_EXPONENT` within ``n_sigma`` errors; an unscaled
    ``O(1/d)`` leftover would give exponent 1.  ``fitted_constant`` is the
    largest magnitude seen.
    With ``method="auto"`` trees too large for reweighting use the recursion.
    """
    q = float(q_coeff(theta, u))
    rows = []
    products = []
    for d in d_list:
        p = ModelParams.from_alpha(d, theta, u, alpha)
        zs = {}
        m_top = max(m_list)
        meth = _resolve_method(p, m_top, method)
        if method == "auto" and meth == "mcmc":
            # the chain only sees Z through E[theta^(V - ell)], which is badly conditioned
            meth = "recursive"
        if meth == "recursive":
            res = tree_recursion(p, m_top, n, derive_seed(seed, d), workers=workers)
            zs = {m: res.z[m] for m in range(1, m_top + 1)}
        else:
            for m in range(1, m_top + 1):
                pair = (build_tree(d, m - 1), build_tree(d, m))
                zs[m] = estimate_partition_ratio(pair, p, n, derive_seed(seed, d, m),
                                                 method=meth, workers=workers)
        for m in m_list:
            z = zs[m]
            res_ = z.mean - 1 + (q - 0.5) / d
            rows.append(ZmRow(d, m, z, res_, res_ * d * d, z.std_error * d * d))
            if m >= 2:
                prod = z.mean * zs[m - 1].mean
                perr = prod * math.hypot(z.std_error / z.mean, zs[m - 1].std_error / zs[m - 1].mean)
                products.append((d, m, prod, perr))
    bounded = True
    exponents = {}
    for m in m_list:
        sel = sorted((r for r in rows if r.m == m), key=lambda r: r.d)
        lo, hi = sel[0], sel[-1]
        slope, slope_err = _growth_exponent(lo, hi)
        exponents[m] = (slope, slope_err)
        if slope - n_sigma * slope_err > MAX_GROWTH_EXPONENT:
            bounded = False
    const = max(abs(r.scaled) for r in rows)
    return ZmReport(theta, u, alpha, rows, products, bounded, const, exponents)


# ---------------------------------------------------------------------------
# critical point scan


class BracketError(RuntimeError):
    """Both bracket ends classify identically (or the scan is not defined)."""

    def __init__(self, message: str, curves: list | None = None):
        super().__init__(message)
        self.curves = curves or []


@dataclass(frozen=True)
class ScanStep:
    beta: float
    alpha: float
    supercritical: bool
    sigma_last: float
    sigma_last_error: float
    sigma_last_ess: float
    min_ratio: float
    n: int
    ambiguous: bool
    in_window: bool


@dataclass(frozen=True)
class ScanResult:
    d: int
    theta: float
    u: float
    m_max: int
    bracket: tuple  # initial (beta_lo, beta_hi)
    final_bracket: tuple
    beta_c: float
    half_width: float
    beta_c_formula: float
    alpha_star: float
    delta_alpha: float
    eps: float
    ratio_margin: float
    trace: list = field(default_factory=list)
    noise_events: list = field(default_factory=list)

    @property
    def beta_c_times_d(self) -> float:
        return self.beta_c * self.d

    def as_dict(self) -> dict:
        return {"d": self.d, "theta": self.theta, "u": self.u, "m_max": self.m_max,
                "bracket": list(self.bracket), "final_bracket": list(self.final_bracket),
                "beta_c": self.beta_c, "half_width": self.half_width,
                "beta_c_times_d": self.beta_c_times_d, "beta_c_formula": self.beta_c_formula,
                "alpha_star": self.alpha_star, "delta_alpha": self.delta_alpha,
                "eps": self.eps, "ratio_margin": self.ratio_margin,
                "trace": [s.__dict__ for s in self.trace], "noise_events": self.noise_events}


def classify_curve(curve: SigmaCurve, eps: float, ratio_margin: float, tail: int = 3):
    """Return ``(supercritical, ambiguous, sigma_last, min_ratio)``.

    Supercritical iff ``sigma_{m_max} >= eps/d`` and every ratio
    ``sigma_m/sigma_{m-1}`` over the last ``tail`` values of ``m`` is at least
    ``1 - ratio_margin``.  Ambiguous when a deciding quantity lies within
    three standard errors of its threshold.
    """
    d = curve.params.d
    s, e = curve.means, curve.errors
    mm = curve.m_max
    level = eps / d
    ms = range(max(1, mm - tail + 1), mm + 1)
    ratios = [(s[m] / s[m - 1] if s[m - 1] > 0 else 0.0) for m in ms]
    rerr = [(r * math.hypot(e[m] / s[m], e[m - 1] / s[m - 1]) if s[m] > 0 and s[m - 1] > 0
             else 0.0) for r, m in zip(ratios, ms)]
    thr = 1 - ratio_margin
    ok_level = s[mm] >= level
    ok_ratio = all(r >= thr for r in ratios)
    amb = False
    if abs(s[mm] - level) < 3 * e[mm]:
        amb = True
    # only the ratio that decides the outcome can make it ambiguous
    deciding = [i for i, r in enumerate(ratios) if r < thr] if not ok_ratio else range(len(ratios))
    for i in deciding:
        if abs(ratios[i] - thr) < 3 * rerr[i]:
            amb = True
    return bool(ok_level and ok_ratio), amb, float(s[mm]), float(min(ratios))


def scan_beta_c(d: int, theta: float, u: float, m_max: int = 8, n: int = 1_000_000,
                tolerance: float = 0.002, seed: int = 0, eps: float = 0.5,
                ratio_margin: float | None = None, tail: int = 3, alpha0: float = 4.0,
                method: str = "auto", retry_factor: int = 4, workers: int = 1,
                max_steps: int = 200) -> ScanResult:
    """Bisect ``beta`` on the decay classifier of the sigma curve.

    The initial bracket is ``[theta/(2d), (2 theta/d)(1 + 2 alpha0/d)]`` and
    ``ratio_margin`` defaults to ``1/(2d)``.  Every ``beta`` uses the same
    seed, so neighbouring evaluations share random numbers.  An ambiguous
    classification is logged as a noise event and repeated once with
    ``retry_factor`` times the samples.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if d < 2:
        raise BracketError(f"no critical point of the form theta/d + O(d^-2) is scanned for d={d}")
    margin = 1.0 / (2 * d) if ratio_margin is None else ratio_margin
    a_star = float(alpha_star(theta, u))
    lo = theta / (2 * d)
    hi = 2 * theta / d * (1 + 2 * alpha0 / d)
    trace: list[ScanStep] = []
    noise: list[dict] = []
    curves: list[SigmaCurve] = []

    def evaluate(beta):
        p = ModelParams(d, theta, u, beta)
        nn = n
        curve = estimate_sigma(p, m_max, nn, method, seed, workers)
        sup, amb, last, rmin = classify_curve(curve, eps, margin, tail)
        if amb:
            noise.append({"beta": beta, "first_call": sup, "n": nn})
            log.info("ambiguous classification at beta=%.6g, retrying with %dx samples",
                     beta, retry_factor)
            nn = n * retry_factor
            curve = estimate_sigma(p, m_max, nn, method, seed + 1, workers)
            sup, amb2, last, rmin = classify_curve(curve, eps, margin, tail)
            noise[-1]["retry_call"] = sup
        curves.append(curve)
        top = curve.estimates[-1]
        trace.append(ScanStep(beta, p.alpha, bool(sup), last, top.std_error, top.ess, rmin, nn,
                              amb, abs(p.alpha) <= alpha0))
        return sup

    if evaluate(lo):
        raise BracketError(f"lower end beta={lo:.6g} already classifies supercritical", curves)
    if not evaluate(hi):
        raise BracketError(f"upper end beta={hi:.6g} still classifies subcritical", curves)
    a, b = lo, hi
    steps = 0
    while (b - a) / 2 > tolerance and steps < max_steps:
        mid = 0.5 * (a + b)
        if evaluate(mid):
            b = mid
        else:
            a = mid
        steps += 1
    beta_c = 0.5 * (a + b)
    formula = float(beta_c_asymptotic(d, theta, u))
    delta = (beta_c / theta - 1 / d) * d * d - a_star
    return ScanResult(d, theta, u, m_max, (lo, hi), (a, b), beta_c, (b - a) / 2, formula, a_star,
                      delta, eps, margin, trace, noise)
