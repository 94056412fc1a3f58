"""Lower and upper recursion inequalities for sigma_m over a grid of alpha.

    python3 scripts/recursion_bounds.py --d 8 --theta 2 --u 0.5 --m-max 6
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from loopcrit.analytics.formulas import alpha_star
from loopcrit.experiments import verify_recursion
from loopcrit.params import ModelParams


@dataclass
class Config:
    d: int = 8
    theta: float = 2.0
    u: float = 0.5
    offsets: list = field(default_factory=lambda: [-4.0, -2.0, 0.0, 2.0, 4.0])
    m_max: int = 6
    n: int = 1_000_000
    seed: int = 12
    slack: float = 2.0


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    cfg = Config()
    ap.add_argument("--d", type=int, default=cfg.d)
    ap.add_argument("--theta", type=float, default=cfg.theta)
    ap.add_argument("--u", type=float, default=cfg.u)
    ap.add_argument("--offsets", type=float, nargs="+", default=cfg.offsets,
                    help="alpha - alpha* values to test")
    ap.add_argument("--m-max", type=int, default=cfg.m_max)
    ap.add_argument("--n", type=int, default=cfg.n)
    ap.add_argument("--seed", type=int, default=cfg.seed)
    ap.add_argument("--slack", type=float, default=cfg.slack)
    cfg = Config(**vars(ap.parse_args()))
    a_star = float(alpha_star(cfg.theta, cfg.u))
    print(f"alpha* = {a_star:.4f}")
    for off in cfg.offsets:
        p = ModelParams.from_alpha(cfg.d, cfg.theta, cfg.u, a_star + off)
        rep = verify_recursion(p, cfg.m_max, cfg.n, cfg.seed, slack_lower=cfg.slack,
                               slack_upper=cfg.slack)
        print(f"alpha = alpha* {off:+.1f}: {'both hold' if rep.passed else 'VIOLATED'}, "
              f"max sigma_(m-1)/sigma_m = {rep.max_ratio:.4f}")
        for r in rep.rows:
            print(f"   m={r.m}  {r.lower_bound:.5f} <= {r.sigma:.5f} <= {r.upper_bound:.5f}"
                  f"  ({'ok' if r.lower_ok and r.upper_ok else 'fail'})")


if __name__ == "__main__":
    main()
