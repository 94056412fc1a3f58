"""Expectations under the theta-weighted loop measure.

Two estimators share the compiled observable kernel:

* importance reweighting of i.i.d. Poisson configurations (rate ``beta``,
  ``theta = 1``) with weights ``theta ** ell``;
* a birth-death Metropolis chain whose stationary law is proportional to
  ``theta ** ell`` times the Poisson link law.

Random streams are keyed by ``(seed, stream, chunk)`` or ``(seed, chain)``,
and chunks are reduced in index order, so results do not depend on the number
of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..analytics.events import child_csr
from ..linkproc import LinkConfiguration, make_rng
from ..params import ModelParams
from ..topology import Graph
from . import kernels as K
from .estimate import (BatchMeans, Estimate, LOW_ESS_FLOOR, McmcSettings, combine_batches,
                       plain_mean, self_normalized)
from .observables import Estimand, Observables, is_per_configuration

REWEIGHT_MAX_RATE = 8.0
REWEIGHT_MAX_VERTICES = 64
MCMC_CHUNK = 1 << 15

# stream ids keep different uses of one seed apart
STREAM_IID = 11
STREAM_MCMC = 12


@dataclass(frozen=True, eq=False)
class Target:
    """Graph arrays in the layout the kernels expect."""

    graph: Graph
    eu: np.ndarray
    ev: np.ndarray
    gen: np.ndarray
    root: int
    partner: int
    ptr: np.ndarray
    cedge: np.ndarray
    is_tree: bool

    @property
    def args(self) -> tuple:
        g = self.graph
        return (g.vertex_count, self.eu, self.ev, self.gen, self.root, self.partner,
                self.ptr, self.cedge, self.is_tree)


def prepare(g: Graph, partner: int | None = None) -> Target:
    """``partner`` defaults to vertex 1 (the first child of the root in a tree)."""
    if partner is None:
        partner = 1 if g.vertex_count > 1 else -1
    ptr, cedge = child_csr(g)
    return Target(g, np.ascontiguousarray(g.eu, np.int64), np.ascontiguousarray(g.ev, np.int64),
                  np.ascontiguousarray(g.generation, np.int64), int(g.root), int(partner),
                  ptr, cedge, bool(g.is_tree))


def _pool_map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _iid_chunk_size(edge_count: int) -> int:
    return int(max(256, min(1 << 16, 2_000_000 // max(edge_count, 1))))


def _draw(rng, nb, ne, beta, u):
    counts = rng.poisson(beta, size=(nb, ne)).astype(np.int64)
    total = int(counts.sum())
    times = rng.random(total)
    kinds = (rng.random(total) < u).astype(np.int64)
    return counts, times, kinds


def _configs(g, counts, times, kinds):
    out = []
    pos = 0
    edge_ids = np.arange(counts.shape[1])
    for row in counts:
        k = int(row.sum())
        out.append(LinkConfiguration.from_arrays(g, np.repeat(edge_ids, row), times[pos:pos + k],
                                                 kinds[pos:pos + k], check=False))
        pos += k
    return out


def _iid_chunk(t: Target, beta, u, nb, seed, stream, chunk, want_configs):
    rng = make_rng(seed, STREAM_IID, stream, chunk)
    ne = t.graph.edge_count
    counts, times, kinds = _draw(rng, nb, ne, beta, u)
    out_i = np.zeros((nb, K.N_INT), np.int64)
    out_f = np.zeros((nb, K.N_FLOAT), np.float64)
    hit = np.zeros(nb, np.bool_)
    K.iid_batch(*t.args, counts, times, kinds, out_i, out_f, hit)
    bad = np.flatnonzero(hit)
    if bad.size:
        # redraw whole configurations with a tie at some vertex (probability ~1e-16)
        offsets = np.concatenate([[0], np.cumsum(counts.sum(axis=1))])
        parts_t = [times[offsets[b]:offsets[b + 1]] for b in range(nb)]
        parts_k = [kinds[offsets[b]:offsets[b + 1]] for b in range(nb)]
        for b in bad:
            while True:
                c1, t1, k1 = _draw(rng, 1, ne, beta, u)
                h = np.zeros(1, np.bool_)
                K.iid_batch(*t.args, c1, t1, k1, out_i[b:b + 1], out_f[b:b + 1], h)
                if not h[0]:
                    break
            counts[b] = c1[0]
            parts_t[b], parts_k[b] = t1, k1
        times = np.concatenate(parts_t)
        kinds = np.concatenate(parts_k)
    configs = _configs(t.graph, counts, times, kinds) if want_configs else None
    return Observables(out_i, out_f), configs


def iid_observables(g: Graph, beta: float, u: float, n: int, seed: int, stream: int = 0,
                    partner: int | None = None, workers: int = 1, with_configs: bool = False):
    """Observables of ``n`` i.i.d. configurations of the rate-``beta`` link process.

    Returns ``(Observables, configs)`` where ``configs`` is ``None`` unless requested.
    """
    t = prepare(g, partner)
    size = _iid_chunk_size(g.edge_count)
    sizes = [min(size, n - s) for s in range(0, n, size)]
    jobs = list(enumerate(sizes))
    res = _pool_map(lambda job: _iid_chunk(t, beta, u, job[1], seed, stream, job[0], with_configs),
                    jobs, workers)
    obs = Observables(np.concatenate([r[0].ints for r in res]),
                      np.concatenate([r[0].floats for r in res]))
    configs = [c for r in res for c in r[1]] if with_configs else None
    return obs, configs


def _evaluate(estimand, obs: Observables, configs) -> np.ndarray:
    if is_per_configuration(estimand):
        if configs is None:
            raise TypeError("configuration-level estimands need the i.i.d. sampler")
        return np.asarray([float(estimand(c)) for c in configs])
    return np.asarray(estimand(obs), dtype=float).reshape(len(obs))


def theta_log_weights(ell: np.ndarray, theta: float, offset: int = 0) -> np.ndarray:
    """``log(theta ** (ell + offset))`` shifted so the largest weight is 1.

    The shift is applied to the integer loop counts, so any integer ``offset``
    gives bit-identical weights.
    """
    shifted = np.asarray(ell, np.int64) + offset
    return (shifted - shifted.max()) * math.log(theta)


def reweighted_expectations(g: Graph, params: ModelParams, estimands: Sequence[Estimand], n: int,
                            seed: int, stream: int = 0, partner: int | None = None,
                            workers: int = 1, ess_floor: float = LOW_ESS_FLOOR) -> list[Estimate]:
    """Self-normalized importance estimates of several estimands from one sample."""
    if n < 2:
        raise ValueError("need n >= 2")
    want = any(is_per_configuration(f) for f in estimands)
    obs, configs = iid_observables(g, params.beta, params.u, n, seed, stream, partner, workers, want)
    log_w = theta_log_weights(obs.ell, params.theta)
    return [self_normalized(log_w, _evaluate(f, obs, configs), ess_floor) for f in estimands]


def reweighted_expectation(g: Graph, params: ModelParams, estimand: Estimand, n: int, seed: int,
                           **kw) -> Estimate:
    return reweighted_expectations(g, params, [estimand], n, seed, **kw)[0]


def partition_function(g: Graph, params: ModelParams, n: int, seed: int, stream: int = 0,
                       workers: int = 1, ess_floor: float = LOW_ESS_FLOOR) -> Estimate:
    """Plain Monte Carlo estimate of ``Z * theta ** -V`` with ``Z = E[theta ** ell]``.

    The reported ``ess`` is the importance-weight diagnostic ``(sum w)^2 / sum w^2``.
    """
    if g.edge_count == 0:
        return Estimate(1.0, 0.0, n, float(n))
    obs, _ = iid_observables(g, params.beta, params.u, n, seed, stream, workers=workers)
    lw = (obs.ell - g.vertex_count) * math.log(params.theta)
    w = np.exp(lw)
    est = plain_mean(w)
    wn = np.exp(lw - lw.max())
    ess = float(wn.sum() ** 2 / np.dot(wn, wn))
    warn = () if ess >= ess_floor else (f"low effective sample size {ess:.1f} < {ess_floor:g}",)
    return Estimate(est.mean, est.std_error, n, min(ess, float(n)), warn)


# ---------------------------------------------------------------------------
# Metropolis chain


def _run_chain(t: Target, params: ModelParams, settings: McmcSettings, chain: int,
               estimands: Sequence[Estimand]) -> list[BatchMeans]:
    rng = make_rng(settings.seed, STREAM_MCMC, chain)
    total = settings.recorded
    acc = [BatchMeans(total) for _ in estimands]
    ne = t.graph.edge_count
    cap = int(max(64, 4 * params.beta * ne + 64)) + MCMC_CHUNK
    l_edge = np.zeros(cap, np.int64)
    l_time = np.zeros(cap, np.float64)
    l_kind = np.zeros(cap, np.int64)
    state = np.zeros(5, np.int64)
    state[1] = t.graph.vertex_count
    log_theta = math.log(params.theta)
    done = 0
    while done < settings.steps:
        steps = min(MCMC_CHUNK, settings.steps - done)
        if state[0] + steps > l_edge.shape[0]:
            new = 2 * (state[0] + steps)
            l_edge = np.resize(l_edge, new)
            l_time = np.resize(l_time, new)
            l_kind = np.resize(l_kind, new)
        unif = rng.random((steps, 5))
        out_i = np.zeros((steps, K.N_INT), np.int64)
        out_f = np.zeros((steps, K.N_FLOAT), np.float64)
        w = K.mcmc_run(*t.args, params.beta, params.u, log_theta, l_edge, l_time, l_kind, state,
                       unif, settings.burn_in, settings.thinning, out_i, out_f)
        if w:
            obs = Observables(out_i[:w], out_f[:w])
            for a, f in zip(acc, estimands):
                a.add(_evaluate(f, obs, None))
        done += steps
    return acc


def mcmc_expectations(g: Graph, params: ModelParams, settings: McmcSettings,
                      estimands: Sequence[Estimand], partner: int | None = None,
                      workers: int = 1) -> list[Estimate]:
    """Batch-means estimates from ``settings.chains`` independent chains."""
    if any(is_per_configuration(f) for f in estimands):
        raise TypeError("the Metropolis chain evaluates observables only")
    t = prepare(g, partner)
    runs = _pool_map(lambda c: _run_chain(t, params, settings, c, estimands),
                     range(settings.chains), workers)
    return [combine_batches([r[i] for r in runs]) for i in range(len(estimands))]


def mcmc_chain(g: Graph, params: ModelParams, settings: McmcSettings, estimand: Estimand,
               **kw) -> Estimate:
    return mcmc_expectations(g, params, settings, [estimand], **kw)[0]


def choose_method(g: Graph, params: ModelParams) -> str:
    small = params.beta * g.edge_count <= REWEIGHT_MAX_RATE and g.vertex_count <= REWEIGHT_MAX_VERTICES
    return "reweight" if small or params.theta == 1 else "mcmc"


def expectations(g: Graph, params: ModelParams, estimands: Sequence[Estimand], n: int, seed: int,
                 method: str = "auto", workers: int = 1, partner: int | None = None) -> list[Estimate]:
    """Dispatch to reweighting or the chain; ``n`` is samples or chain steps."""
    if method == "auto":
        method = choose_method(g, params)
    if method == "reweight":
        return reweighted_expectations(g, params, estimands, n, seed, partner=partner,
                                       workers=workers)
    if method == "mcmc":
        return mcmc_expectations(g, params, McmcSettings(n, seed=seed), estimands,
                                 partner=partner, workers=workers)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# partition-function ratio


def _normalized_z_mcmc(g: Graph, params: ModelParams, n: int, seed: int, workers: int) -> Estimate:
    if g.edge_count == 0:
        return Estimate(1.0, 0.0, n, float(n))
    v = g.vertex_count
    lt = math.log(params.theta)
    inv = mcmc_chain(g, params, McmcSettings(n, seed=seed),
                     lambda o: np.exp((v - o.ell) * lt), workers=workers)
    mean = 1.0 / inv.mean
    return Estimate(mean, inv.std_error * mean * mean, inv.n_samples, inv.ess, inv.warnings)


def estimate_partition_ratio(g_pair: tuple[Graph, Graph], params: ModelParams, n: int, seed: int,
                             method: str = "reweight", workers: int = 1) -> Estimate:
    """``z_m = e^{-d beta (1 - 1/theta)} theta Z_{m-1}^d / Z_m`` with error propagation.

    With ``Z'_k = Z_k theta^{-V_k}`` and ``V_m = 1 + d V_{m-1}`` the ratio is
    ``e^{...} Z'_{m-1}^d / Z'_m``, so no large powers of theta appear.
    """
    small, big = g_pair
    d = params.d
    if big.vertex_count != 1 + d * small.vertex_count:
        raise ValueError("graphs must be T_{m-1} and T_m of the same degree")
    if params.theta == 1.0:
        return Estimate(1.0, 0.0, n, float(n))
    if method == "recursive":
        from .recursion import partition_ratio_recursive
        return partition_ratio_recursive(params, big.depth, n, seed, workers=workers)
    if method == "reweight":
        a = partition_function(small, params, n, seed, stream=1, workers=workers)
        b = partition_function(big, params, n, seed, stream=2, workers=workers)
    elif method == "mcmc":
        a = _normalized_z_mcmc(small, params, n, seed * 2 + 1, workers)
        b = _normalized_z_mcmc(big, params, n, seed * 2 + 2, workers)
    else:
        raise ValueError(f"unknown method {method!r}")
    pref = math.exp(-d * params.beta * (1 - 1 / params.theta))
    z = pref * a.mean ** d / b.mean
    rel = math.sqrt((d * a.std_error / a.mean) ** 2 + (b.std_error / b.mean) ** 2)
    return Estimate(z, z * rel, min(a.n_samples, b.n_samples), min(a.ess, b.ess, n),
                    tuple(a.warnings) + tuple(b.warnings))
