"""Model parameters, with beta optionally given through the alpha coordinate
``beta/theta = 1/d + alpha/d**2``."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ModelParams:
    d: int
    theta: float
    u: float
    beta: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if not (self.theta > 0 and self.beta > 0):
            raise ValueError("theta and beta must be positive")
        if not 0.0 <= self.u <= 1.0:
            raise ValueError("u must lie in [0, 1]")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha is not finite")

    @classmethod
    def from_alpha(cls, d: int, theta: float, u: float, alpha: float) -> "ModelParams":
        return cls(d, theta, u, beta_from_alpha(d, theta, alpha))

    @property
    def alpha(self) -> float:
        return alpha_from_beta(self.d, self.theta, self.beta)

    def with_beta(self, beta: float) -> "ModelParams":
        return replace(self, beta=beta)

    def as_dict(self) -> dict:
        return {"d": self.d, "theta": self.theta, "u": self.u, "beta": self.beta,
                "alpha": self.alpha}


def beta_from_alpha(d: int, theta: float, alpha: float) -> float:
    return theta * (1.0 / d + alpha / d ** 2)


def alpha_from_beta(d: int, theta: float, beta: float) -> float:
    return d ** 2 * (beta / theta - 1.0 / d)
