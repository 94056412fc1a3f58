"""Command-line front end.

Row-producing subcommands print CSV to stdout unless ``--csv`` is given; the
JSON summary goes to ``--json`` (or to stdout for subcommands without rows).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import quantum_oracle as Q
from .analytics import formulas as F
from .oracle import (OracleError, enumerate_edge, exhaustive_tracer_check,
                     expected_root_arc_length_same_pair)
from .params import ModelParams, beta_from_alpha
from .weighting.estimate import Estimate, EstimationError
from .weighting.recursion import SubtreeOverflow

CSV_COLUMNS = ("subcommand", "d", "theta", "u", "beta", "alpha", "m", "estimate", "std_error",
               "ess", "n", "seed")
QUANTUM_TOL = 1e-8


class CheckFailed(RuntimeError):
    """A verification subcommand found a violated identity or bound."""


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=10)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def resolve_workers(requested: int) -> int:
    env = os.environ.get("LOOPCRIT_THREADS")
    if env:
        try:
            requested = int(env)
        except ValueError:
            raise SystemExit(f"LOOPCRIT_THREADS must be an integer, got {env!r}")
    return max(1, requested)


# ---------------------------------------------------------------------------
# argument parsing


def _add_model(p, need_rate: bool = True, d_required: bool = True):
    p.add_argument("--d", type=int, required=d_required, help="children per vertex")
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--u", type=float, default=1.0, help="probability of a cross")
    if need_rate:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--beta", type=float)
        g.add_argument("--alpha", type=float, help="beta/theta = 1/d + alpha/d^2")


def _add_run(p, n_default=100_000, method=True):
    p.add_argument("--n", type=int, default=n_default, help="samples (or chain steps) per level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="threads (LOOPCRIT_THREADS overrides)")
    if method:
        p.add_argument("--method", choices=ex.METHODS, default="auto")


def _add_output(p):
    p.add_argument("--csv", type=Path, help="write CSV rows here instead of stdout")
    p.add_argument("--json", type=Path, help="write the JSON summary here")
    p.add_argument("--omit-timing", action="store_true",
                   help="leave wall time out of the summary (byte-identical reruns)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loopcrit", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sigma", help="sigma_m curve")
    _add_model(p)
    p.add_argument("--m-max", type=int, required=True)
    _add_run(p)
    _add_output(p)

    p = sub.add_parser("scan", help="bisection scan for the critical beta")
    _add_model(p, need_rate=False)
    p.add_argument("--m-max", type=int, default=8)
    p.add_argument("--tol", type=float, default=0.002)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--ratio-margin", type=float, help="default 1/(2d)")
    p.add_argument("--tail", type=int, default=3)
    p.add_argument("--alpha0", type=float, default=4.0)
    _add_run(p, n_default=1_000_000)
    _add_output(p)

    p = sub.add_parser("recursion", help="check the recursion inequalities")
    _add_model(p)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--slack-lower", type=float, default=2.0)
    p.add_argument("--slack-upper", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=0.5)
    _add_run(p)
    _add_output(p)

    p = sub.add_parser("dominate", help="stochastic domination of increasing events")
    _add_model(p, d_required=False)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--d-list", type=int, nargs="+", default=[4, 8, 16, 32])
    _add_run(p)
    _add_output(p)

    p = sub.add_parser("zm", help="partition-ratio asymptotics")
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--u", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--d-list", type=int, nargs="+", default=[4, 8, 16])
    p.add_argument("--m-list", type=int, nargs="+", default=[1, 2])
    _add_run(p)
    _add_output(p)

    p = sub.add_parser("formulas", help="closed-form values")
    p.add_argument("--d", type=int)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--nu", type=int, default=3, help="lattice dimension for the table")
    _add_output(p)

    p = sub.add_parser("oracle-check", help="single-edge enumeration")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--u", type=float, default=0.5)
    _add_output(p)

    p = sub.add_parser("quantum-check", help="two-site spin/loop correspondence")
    p.add_argument("--betas", type=float, nargs="+", default=list(Q.BETA_GRID))
    p.add_argument("--deltas", type=float, nargs="+", default=list(Q.DELTA_GRID))
    p.add_argument("--us", type=float, nargs="+", default=list(Q.U_GRID))
    _add_output(p)

    p = sub.add_parser("tracer-fuzz", help="tracer against the naive walker")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--max-vertices", type=int, default=4)
    p.add_argument("--max-links", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)
    return ap


def _params(args, ap) -> ModelParams:
    if (args.beta is None) == (args.alpha is None):
        ap.error("exactly one of --beta / --alpha is required")
    try:
        if args.alpha is not None:
            return ModelParams.from_alpha(args.d, args.theta, args.u, args.alpha)
        return ModelParams(args.d, args.theta, args.u, args.beta)
    except ValueError as e:
        ap.error(str(e))


# ---------------------------------------------------------------------------
# subcommands: each returns (rows, summary, passed)


def _row(sub, p: ModelParams, m, est: Estimate, seed) -> dict:
    return {"subcommand": sub, "d": p.d, "theta": p.theta, "u": p.u, "beta": p.beta,
            "alpha": p.alpha, "m": m, "estimate": est.mean, "std_error": est.std_error,
            "ess": est.ess, "n": est.n_samples, "seed": seed}


def cmd_sigma(args, ap):
    p = _params(args, ap)
    curve = ex.estimate_sigma(p, args.m_max, args.n, args.method, args.seed, args.workers)
    rows = [_row("sigma", p, m, e, args.seed) for m, e in enumerate(curve.estimates)]
    summary = {"method": curve.method, "sigma": [e.as_dict() for e in curve.estimates],
               "warnings": curve.warnings()}
    return rows, summary, True, p.as_dict()


def cmd_scan(args, ap):
    if args.d is None:
        ap.error("--d is required")
    r = ex.scan_beta_c(args.d, args.theta, args.u, args.m_max, args.n, args.tol, args.seed,
                       args.eps, args.ratio_margin, args.tail, args.alpha0, args.method,
                       workers=args.workers)
    rows = []
    for s in r.trace:
        p = ModelParams(args.d, args.theta, args.u, s.beta)
        est = Estimate(s.sigma_last, s.sigma_last_error, s.n, s.sigma_last_ess)
        rows.append(_row("scan", p, args.m_max, est, args.seed))
    params = {"d": args.d, "theta": args.theta, "u": args.u, "m_max": args.m_max}
    return rows, {"scan": r.as_dict()}, True, params


def cmd_recursion(args, ap):
    p = _params(args, ap)
    rep = ex.verify_recursion(p, args.m_max, args.n, args.seed, args.method, args.slack_lower,
                              args.slack_upper, args.eps, workers=args.workers)
    rows = [_row("recursion", p, m, e, args.seed) for m, e in enumerate(rep.curve.estimates)]
    summary = {"alpha_star": rep.alpha_star, "slack_lower": rep.slack_lower,
               "slack_upper": rep.slack_upper, "eps": rep.eps, "passed": rep.passed,
               "max_ratio_prev": rep.max_ratio,
               "rows": [r.__dict__ for r in rep.rows],
               "sigma": [e.as_dict() for e in rep.curve.estimates]}
    return rows, summary, rep.passed, p.as_dict()


def cmd_dominate(args, ap):
    if (args.beta is None) == (args.alpha is None):
        ap.error("exactly one of --beta / --alpha is required")
    if args.beta is not None:
        if args.d is None:
            ap.error("--beta needs --d to fix alpha for the d sweep")
        alpha = ModelParams(args.d, args.theta, args.u, args.beta).alpha
    else:
        alpha = args.alpha
    base = ModelParams.from_alpha(args.d or args.d_list[0], args.theta, args.u, alpha)
    rep = ex.check_domination(base, args.m, args.n, args.seed, tuple(args.d_list), args.method,
                              workers=args.workers)
    rows = []
    for r in rep.rows:
        p = ModelParams(r.d, args.theta, args.u, r.beta)
        rows.append(_row("dominate", p, args.m, r.p_other, args.seed))
    summary = {"alpha": alpha, "m": args.m, "band_constant": rep.band_constant,
               "band_ok": rep.band_ok, "passed": rep.passed,
               "rows": [{"d": r.d, "beta": r.beta, "beta_plus": r.beta_plus,
                         "p_a1c": r.p_a1c.as_dict(), "p_a1c_plus": r.p_a1c_plus,
                         "p_other": r.p_other.as_dict(), "p_other_plus": r.p_other_plus,
                         "a1c_ok": r.a1c_ok, "other_ok": r.other_ok,
                         "scaled_other": r.scaled_other} for r in rep.rows]}
    return rows, summary, rep.passed, {"theta": args.theta, "u": args.u, "alpha": alpha}


def cmd_zm(args, ap):
    rep = ex.check_zm_asymptotics(args.theta, args.u, tuple(args.d_list), args.n, args.seed,
                                  tuple(args.m_list), args.alpha, args.method,
                                  workers=args.workers)
    rows = []
    for r in rep.rows:
        p = ModelParams.from_alpha(r.d, args.theta, args.u, args.alpha)
        rows.append(_row("zm", p, r.m, r.z, args.seed))
    summary = {"q": float(F.q_coeff(args.theta, args.u)), "bounded": rep.bounded,
               "fitted_constant": rep.fitted_constant,
               "growth_exponents": {str(m): {"slope": v[0], "std_error": v[1]}
                                    for m, v in rep.growth_exponents.items()},
               "rows": [{"d": r.d, "m": r.m, "z": r.z.as_dict(), "residual": r.residual,
                         "scaled": r.scaled, "scaled_error": r.scaled_error} for r in rep.rows],
               "products": [{"d": d, "m": m, "z_m_z_m_minus_1": v, "std_error": e}
                            for d, m, v, e in rep.products]}
    return rows, summary, rep.bounded, {"theta": args.theta, "u": args.u, "alpha": args.alpha}


def _exact(x):
    try:
        return str(Fraction(x).limit_denominator(10 ** 12))
    except (TypeError, ValueError):
        return None


def cmd_formulas(args, ap):
    th, u = Fraction(str(args.theta)), Fraction(str(args.u))
    out = {"alpha_star": float(F.alpha_star(th, u)), "alpha_star_exact": str(F.alpha_star(th, u)),
           "q": float(F.q_coeff(th, u)), "r": float(F.r_coeff(th, u)),
           "lattice_spin_half": F.lattice_table(args.nu),
           "lattice_spin1": float(F.beta_c_lattice_spin1(args.nu, u))}
    if args.d is not None:
        bc = F.beta_c_asymptotic(args.d, th, u)
        out.update({"d": args.d, "beta_c_asymptotic": float(bc), "beta_c_exact": str(bc),
                    "beta_c_times_d": float(bc * args.d),
                    "zm_first_order": F.zm_first_order(args.d, args.theta, args.u)})
    return [], out, True, {"theta": args.theta, "u": args.u, "d": args.d}


def cmd_oracle(args, ap):
    a = enumerate_edge(args.beta, args.theta, args.u)
    b = enumerate_edge(args.beta, args.theta, args.u, engine="sequences") \
        if a.truncation <= 24 else None
    x = expected_root_arc_length_same_pair()
    out = {"truncation": a.truncation, "tail_bound": a.tail_bound, "Z": a.Z,
           "Z_over_theta2": a.Z_over_theta2, "prob_ell_2": a.prob_ell(2),
           "prob_connected": a.prob_connected, "prob_no_links": a.prob_links(0),
           "mean_X_same_pair": str(x)}
    ok = True
    if b is not None:
        diff = float(np.max(np.abs(a.joint - b.joint)))
        out["engine_max_difference"] = diff
        ok = diff < 1e-12
    ok = ok and x == Fraction(2, 3)
    out["passed"] = ok
    return [], out, ok, {"beta": args.beta, "theta": args.theta, "u": args.u}


def cmd_quantum(args, ap):
    rows = Q.correspondence_grid(args.betas, args.deltas, args.us)
    worst = max(r["difference"] for r in rows)
    ok = worst < QUANTUM_TOL
    return [], {"max_difference": worst, "tolerance": QUANTUM_TOL, "passed": ok,
                "grid": rows}, ok, {}


def cmd_fuzz(args, ap):
    rep = exhaustive_tracer_check(args.max_vertices, args.max_links, args.trials, args.seed,
                                  strict=False)
    out = {"trials": rep.trials, "mismatches": rep.mismatches, "passed": rep.ok}
    if rep.failures:
        out["first_failure"] = rep.failures[0]
    return [], out, rep.ok, {"max_vertices": args.max_vertices, "max_links": args.max_links}


COMMANDS = {"sigma": cmd_sigma, "scan": cmd_scan, "recursion": cmd_recursion,
            "dominate": cmd_dominate, "zm": cmd_zm, "formulas": cmd_formulas,
            "oracle-check": cmd_oracle, "quantum-check": cmd_quantum, "tracer-fuzz": cmd_fuzz}


# ---------------------------------------------------------------------------
# output


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Estimate):
        return _jsonable(x.as_dict())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for k, v in r.items()})
    return buf.getvalue()


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if hasattr(args, "workers"):
        args.workers = resolve_workers(args.workers)
    if getattr(args, "n", 2) is not None and getattr(args, "n", 2) < 2:
        ap.error("--n must be at least 2")
    start = time.perf_counter()
    try:
        rows, summary, passed, params = COMMANDS[args.subcommand](args, ap)
    except (ex.BracketError, OracleError, SubtreeOverflow, EstimationError, ValueError) as e:
        print(f"loopcrit {args.subcommand}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    doc = {"subcommand": args.subcommand, "params": params,
           "seed": getattr(args, "seed", None), "git_describe": git_describe(),
           "result": summary}
    if not args.omit_timing:
        doc["wall_time_s"] = time.perf_counter() - start
    text_json = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    if rows:
        text_csv = render_csv(rows)
        if args.csv:
            args.csv.write_text(text_csv)
        else:
            sys.stdout.write(text_csv)
        if args.json:
            args.json.write_text(text_json)
    else:
        if args.csv:
            args.csv.write_text(render_csv([]))
        if args.json:
            args.json.write_text(text_json)
        else:
            sys.stdout.write(text_json)
    if not passed:
        print(f"loopcrit {args.subcommand}: check failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
