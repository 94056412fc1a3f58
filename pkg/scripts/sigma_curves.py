"""sigma_m against m for a grid of alpha values on one (d, theta, u).

    python3 scripts/sigma_curves.py --d 16 --theta 1 --u 1 --alphas -2 0 2 4 6 8
"""
from __future__ import annotations

import argparse
import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

from loopcrit.analytics.formulas import alpha_star
from loopcrit.experiments import estimate_sigma
from loopcrit.params import ModelParams


@dataclass
class Config:
    d: int = 16
    theta: float = 1.0
    u: float = 1.0
    alphas: list = field(default_factory=lambda: [-2.0, 0.0, 2.0, 4.0, 6.0, 8.0])
    m_max: int = 8
    n: int = 200_000
    seed: int = 0
    workers: int = 1
    out: Path = Path("results/sigma_curves.csv")


def run(cfg: Config) -> list[dict]:
    rows = []
    for alpha in cfg.alphas:
        p = ModelParams.from_alpha(cfg.d, cfg.theta, cfg.u, alpha)
        curve = estimate_sigma(p, cfg.m_max, cfg.n, "auto", cfg.seed, cfg.workers)
        for m, est in enumerate(curve.estimates):
            ratio = est.mean / curve.estimates[m - 1].mean if m else 1.0
            rows.append({"alpha": alpha, "beta": p.beta, "m": m, "sigma": est.mean,
                         "std_error": est.std_error, "d_sigma": cfg.d * est.mean,
                         "ratio": ratio, "method": curve.method})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    cfg = Config()
    for k, v in asdict(cfg).items():
        if k == "alphas":
            ap.add_argument("--alphas", type=float, nargs="+", default=v)
        else:
            ap.add_argument(f"--{k.replace('_', '-')}", type=type(v), default=v)
    cfg = Config(**vars(ap.parse_args()))
    rows = run(cfg)
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    with cfg.out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"alpha* = {float(alpha_star(cfg.theta, cfg.u)):.4f}")
    print(f"{'alpha':>7} " + " ".join(f"{'m=' + str(m):>8}" for m in range(1, cfg.m_max + 1)))
    for alpha in cfg.alphas:
        vals = [r["d_sigma"] for r in rows if r["alpha"] == alpha and r["m"] > 0]
        print(f"{alpha:7.2f} " + " ".join(f"{v:8.4f}" for v in vals))
    print(f"(d * sigma_m; rows written to {cfg.out})")


if __name__ == "__main__":
    main()
