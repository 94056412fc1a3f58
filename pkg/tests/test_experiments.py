import pytest

from loopcrit.experiments import (MAX_GROWTH_EXPONENT, BracketError, ZmRow, _growth_exponent, SigmaCurve, check_domination, check_zm_asymptotics,
                                  classify_curve, estimate_sigma, event_probabilities, scan_beta_c,
                                  verify_recursion)
from loopcrit.params import ModelParams
from loopcrit.weighting.estimate import Estimate


def _curve(values, errors=None, d=4):
    errors = errors or [0.0] * len(values)
    ests = [Estimate(v, e, 1000, 1000.0) for v, e in zip(values, errors)]
    return SigmaCurve(ModelParams(d, 1.0, 1.0, 0.3), "synthetic", 1000, 0, ests)


def test_sigma_curves_agree_across_methods_at_theta_one():
    p = ModelParams(3, 1.0, 0.5, 0.4)
    rw = estimate_sigma(p, 3, 200_000, method="reweight", seed=1)
    mc = estimate_sigma(p, 3, 400_000, method="mcmc", seed=1)
    rc = estimate_sigma(p, 3, 64_000, method="recursive", seed=1)
    assert rw.means[0] == mc.means[0] == rc.means[0] == 1.0
    for m in range(1, 4):
        assert rw.estimates[m].z_score(mc.means[m], mc.errors[m]) < 4
        assert rw.estimates[m].z_score(rc.means[m], rc.errors[m]) < 4


def test_auto_method_selection():
    assert estimate_sigma(ModelParams(16, 2.0, 0.5, 0.13), 4, 3200, seed=0).method == "recursive"
    assert estimate_sigma(ModelParams(2, 2.0, 0.5, 0.5), 2, 500, seed=0).method == "reweight"
    with pytest.raises(ValueError):
        estimate_sigma(ModelParams(2, 2.0, 0.5, 0.5), 2, 500, method="exact")


def test_verify_recursion_small_case():
    rep = verify_recursion(ModelParams.from_alpha(8, 2.0, 0.5, 0.0), 5, 64_000, seed=2)
    assert rep.passed
    assert len(rep.rows) == 5 and rep.curve.method == "recursive"
    assert rep.max_ratio > 0


def test_event_probabilities_sum_to_one():
    for method in ("reweight", "recursive"):
        pr = event_probabilities(ModelParams(3, 2.0, 0.5, 0.4), 2, 64_000, seed=3, method=method)
        assert pr["A1"].mean + pr["A2"].mean + pr["other"].mean == pytest.approx(1.0, abs=1e-9)
        assert pr["method"] == method


def test_domination_report_shape():
    rep = check_domination(ModelParams.from_alpha(4, 2.0, 0.5, 0.0), m=2, n=64_000, seed=4,
                           d_list=(4, 8, 16))
    assert [r.d for r in rep.rows] == [4, 8, 16]
    assert all(r.a1c_ok and r.other_ok for r in rep.rows)
    assert all(r.beta_plus == pytest.approx(2 * r.beta) for r in rep.rows)


def test_zm_theta_one_has_zero_remainder():
    rep = check_zm_asymptotics(1.0, 0.3, d_list=(4, 8), n=3200, seed=0)
    assert rep.bounded
    assert all(r.z.mean == 1.0 for r in rep.rows)
    assert all(abs(r.residual) < 1e-12 for r in rep.rows)


def test_growth_exponent_flags_first_order_leftover():
    rows = [ZmRow(d, 1, Estimate(1.0, 0.0, 10, 10.0), 0.3 / d, 0.3 * d, 0.01) for d in (4, 16)]
    slope, err = _growth_exponent(*rows)
    assert slope == pytest.approx(1.0) and slope > MAX_GROWTH_EXPONENT
    flat = [ZmRow(d, 1, Estimate(1.0, 0.0, 10, 10.0), 0.3 / d ** 2, 0.3, 0.01) for d in (4, 16)]
    assert _growth_exponent(*flat)[0] == pytest.approx(0.0)


def test_zm_report_shape():
    rep = check_zm_asymptotics(2.0, 0.5, d_list=(4, 8), n=64_000, seed=5, method="recursive")
    assert len(rep.rows) == 4 and len(rep.products) == 2
    assert rep.fitted_constant == max(abs(r.scaled) for r in rep.rows)


def test_classify_curve():
    # flat curve well above the level: supercritical
    sup, amb, last, rmin = classify_curve(_curve([1, 0.6, 0.55, 0.55, 0.55]), 0.5, 1 / 8)
    assert sup and not amb and last == 0.55 and rmin == pytest.approx(0.55 / 0.6)
    # decaying curve: subcritical through the ratio test
    sup, amb, _, rmin = classify_curve(_curve([1, 0.5, 0.3, 0.2, 0.15]), 0.5, 1 / 8)
    assert not sup and rmin < 7 / 8
    # below the level
    assert not classify_curve(_curve([1, 0.1, 0.1, 0.1, 0.1]), 0.5, 1 / 8)[0]
    # level within three errors: ambiguous
    assert classify_curve(_curve([1, 0.2, 0.2, 0.2, 0.126], [0, 0.01, 0.01, 0.01, 0.01]),
                          0.5, 1 / 8)[1]


def test_scan_small_tree():
    res = scan_beta_c(4, 1.0, 1.0, m_max=4, n=32_000, tolerance=0.01, seed=1, method="recursive")
    lo, hi = res.bracket
    assert lo < res.beta_c < hi
    assert res.half_width <= 0.01
    assert res.final_bracket[0] <= res.beta_c <= res.final_bracket[1]
    assert res.trace[0].beta == lo and not res.trace[0].supercritical
    assert res.trace[1].beta == hi and res.trace[1].supercritical
    d = res.as_dict()
    assert d["beta_c_times_d"] == pytest.approx(4 * res.beta_c)


def test_scan_bracket_errors():
    with pytest.raises(BracketError):
        scan_beta_c(1, 1.0, 1.0, m_max=3, n=1000)
    with pytest.raises(BracketError) as info:
        scan_beta_c(4, 1.0, 1.0, m_max=3, n=3200, eps=100.0)
    assert info.value.curves
    with pytest.raises(ValueError):
        scan_beta_c(4, 1.0, 1.0, tolerance=0)
