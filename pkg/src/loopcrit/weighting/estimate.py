"""Estimate containers and the reductions that produce them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOW_ESS_FLOOR = 50.0
N_BATCHES = 32


class EstimationError(RuntimeError):
    """Non-finite estimand values or an otherwise unusable sample."""


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n_samples: int
    ess: float
    warnings: tuple = field(default=())

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be non-negative")
        if not 0 < self.ess <= self.n_samples * (1 + 1e-9):
            raise ValueError(f"ess {self.ess} outside (0, {self.n_samples}]")

    def z_score(self, target: float, extra_se: float = 0.0) -> float:
        """``|mean - target|`` in units of the (combined) standard error."""
        se = math.hypot(self.std_error, extra_se)
        diff = abs(self.mean - target)
        if se == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / se

    def as_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "n_samples": self.n_samples,
                "ess": self.ess, "warnings": list(self.warnings)}


@dataclass(frozen=True)
class McmcSettings:
    steps: int
    burn_in: int | None = None
    thinning: int = 1
    seed: int = 0
    chains: int = 1

    def __post_init__(self):
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.steps // 5)
        if not 0 <= self.burn_in < self.steps:
            raise ValueError("need 0 <= burn_in < steps")
        if self.thinning < 1 or self.chains < 1:
            raise ValueError("thinning and chains must be >= 1")

    @property
    def recorded(self) -> int:
        return len(range(self.burn_in, self.steps, self.thinning))


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise EstimationError(f"non-finite estimand value {values[bad]!r} at sample {bad}")


def self_normalized(log_w: np.ndarray, values: np.ndarray, floor: float = LOW_ESS_FLOOR) -> Estimate:
    """``sum(w x)/sum(w)`` with delta-method error; weights given as logs.

    Subtracting the maximum log-weight is a common factor that cancels in the
    ratio, so the result is exactly invariant under shifting all log-weights.
    """
    _check_finite(values)
    n = values.size
    w = np.exp(log_w - log_w.max())
    sw = w.sum()
    mean = float(np.dot(w, values) / sw)
    se = float(math.sqrt(np.dot(w * w, (values - mean) ** 2)) / sw)
    ess = float(sw * sw / np.dot(w, w))
    warn = () if ess >= floor else (f"low effective sample size {ess:.1f} < {floor:g}",)
    return Estimate(mean, se, n, min(ess, float(n)), warn)


def plain_mean(values: np.ndarray) -> Estimate:
    _check_finite(values)
    n = values.size
    sd = float(values.std(ddof=1)) if n > 1 else 0.0
    return Estimate(float(values.mean()), sd / math.sqrt(n), n, float(n))


class BatchMeans:
    """Streaming batch-means accumulator for a chain with a known record count."""

    def __init__(self, total: int, n_batches: int = N_BATCHES):
        if total < n_batches:
            raise ValueError(f"need at least {n_batches} recorded states, got {total}")
        self.total = total
        self.n_batches = n_batches
        self.sums = np.zeros(n_batches)
        self.sizes = np.zeros(n_batches, dtype=np.int64)
        self.sum = 0.0
        self.sumsq = 0.0
        self.seen = 0

    def add(self, values: np.ndarray) -> None:
        _check_finite(values)
        idx = (np.arange(self.seen, self.seen + values.size) * self.n_batches) // self.total
        self.sums += np.bincount(idx, weights=values, minlength=self.n_batches)
        self.sizes += np.bincount(idx, minlength=self.n_batches)
        self.sum += float(values.sum())
        self.sumsq += float(np.dot(values, values))
        self.seen += values.size

    def result(self) -> tuple[float, np.ndarray, float]:
        """(overall mean, batch means, per-sample variance)."""
        if self.seen != self.total:
            raise RuntimeError("batch accumulator not complete")
        mean = self.sum / self.total
        var = max(self.sumsq / self.total - mean * mean, 0.0)
        return mean, self.sums / self.sizes, var


def combine_batches(parts: list[BatchMeans]) -> Estimate:
    """Pool the batch means of independent chains into one estimate."""
    means = np.concatenate([p.result()[1] for p in parts])
    total = sum(p.total for p in parts)
    mean = float(sum(p.sum for p in parts) / total)
    var = float(np.mean([p.result()[2] for p in parts]))
    se = float(means.std(ddof=1) / math.sqrt(means.size))
    if se > 0 and var > 0:
        ess = min(float(total), var / (se * se))
    else:
        ess = float(total)
    return Estimate(mean, se, total, max(ess, 1.0))


def ratio_log(num: Estimate, den: Estimate, power: float = 1.0) -> float:
    """Relative variance of ``num**power / den`` for independent estimates."""
    return (power * num.std_error / num.mean) ** 2 + (den.std_error / den.mean) ** 2
