"""Domination of the increasing root events and the d-scaling of z_m.

    python3 scripts/domination_and_zm.py --thetas 0.5 2 --d-list 4 8 16 32
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from loopcrit.experiments import check_domination, check_zm_asymptotics
from loopcrit.params import ModelParams


@dataclass
class Config:
    thetas: list = field(default_factory=lambda: [0.5, 2.0])
    u: float = 0.5
    alpha: float = 0.0
    d_list: list = field(default_factory=lambda: [4, 8, 16, 32])
    n: int = 1_000_000
    seed: int = 8


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    cfg = Config()
    ap.add_argument("--thetas", type=float, nargs="+", default=cfg.thetas)
    ap.add_argument("--u", type=float, default=cfg.u)
    ap.add_argument("--alpha", type=float, default=cfg.alpha)
    ap.add_argument("--d-list", type=int, nargs="+", default=cfg.d_list)
    ap.add_argument("--n", type=int, default=cfg.n)
    ap.add_argument("--seed", type=int, default=cfg.seed)
    cfg = Config(**vars(ap.parse_args()))
    for theta in cfg.thetas:
        base = ModelParams.from_alpha(cfg.d_list[0], theta, cfg.u, cfg.alpha)
        rep = check_domination(base, 2, cfg.n, cfg.seed, tuple(cfg.d_list))
        print(f"theta={theta:g}: passed={rep.passed}, band constant {rep.band_constant:.4f}")
        for r in rep.rows:
            print(f"   d={r.d:3d}  P(neither)={r.p_other.mean:.3e} <= {r.p_other_plus:.3e}"
                  f"  d^2 P={r.scaled_other:.4f}")
        zm = check_zm_asymptotics(theta, cfg.u, tuple(cfg.d_list), cfg.n, cfg.seed, alpha=cfg.alpha)
        print(f"   z_m remainders bounded: {zm.bounded} (largest |scaled| {zm.fitted_constant:.3f})")
        for r in zm.rows:
            print(f"   d={r.d:3d} m={r.m}  z={r.z.mean:.6f}  (z - 1 + (q-1/2)/d) d^2 = "
                  f"{r.scaled:+.4f} +- {r.scaled_error:.4f}")


if __name__ == "__main__":
    main()
