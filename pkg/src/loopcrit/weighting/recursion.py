"""Tree-recursion estimator for deep regular trees.

Direct simulation of ``T_m`` is hopeless for ``d = 16, m = 8`` (about 4.6e9
vertices).  The estimator here conditions on the exploration subtree ``S``
(root plus, recursively, children joined by at least two links).  Given ``S``
and the links on its edges, every other child ``y`` of an ``S`` vertex carries
0 or 1 link, the subtrees below those children are independent copies of
shallower trees, and a single link merges exactly one subtree loop into the
rest.  Summing the boundary children out gives, with ``kappa =
(1 + beta/theta) / (1 + beta)``:

* ``1/z_m = kappa^d e^{d beta (1 - 1/theta)} E_Q[W]`` where ``Q`` grows ``S``
  as a Galton-Watson tree (each child kept with probability ``p_{>=2}``, link
  counts Poisson conditioned on >= 2) and
  ``W = theta^(ell(S) - 1) prod_{y in S, y != root} r_{gen(y)}`` with
  ``r_g = kappa^(d-1) z_{m-g} e^{d beta (1 - 1/theta)} / theta`` for ``g < m``
  and ``r_m = 1 / (kappa theta)``;
* ``sigma_m = E_Q[W R] / E_Q[W]`` where ``R`` is the conditional probability
  that the loop through ``(root, 0)`` reaches generation ``m``: it does if its
  restriction to ``S`` does, and otherwise each boundary child of ``x``
  independently attaches a reaching subtree loop with probability
  ``pi1 * lambda_x * sigma_{m - gen(x) - 1}``, ``pi1 = (beta/theta)/(1 +
  beta/theta)``, ``lambda_x`` being the length at ``x`` of the root loop.

The stratum ``S = {root}`` is handled exactly; only ``S`` with a root child is
sampled.  Earlier levels feed ``z_k`` and ``sigma_k`` into later ones, so each
replicate runs the whole ladder ``m = 1..m_max`` on its own and the error bars
come from the spread of independent replicates.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..linkproc import derive_seed
from ..looptracer import arc_at, arc_length, trace_into
from ..params import ModelParams
from .estimate import Estimate

N_REPLICATES = 32
MAX_SUBTREE = 1 << 20

# per-level replicate outputs
C_EW, C_EWR, C_A1, C_A2, C_OTHER, C_Z, C_SIGMA, C_KISH = range(8)
N_COLS = 8


class SubtreeOverflow(RuntimeError):
    """The sampled exploration subtree exceeded :data:`MAX_SUBTREE` vertices."""


def _conditional_tables(d: int, beta: float):
    """CDFs of ``Binomial(d, p2)`` given >= 1 and of ``Poisson(beta)`` given >= 2."""
    p2 = -math.expm1(-beta) - beta * math.exp(-beta)
    log_q = math.log1p(-p2)
    pmf = np.array([math.exp(math.lgamma(d + 1) - math.lgamma(k + 1) - math.lgamma(d - k + 1)
                             + k * math.log(p2) + (d - k) * log_q) for k in range(1, d + 1)])
    binom_cdf = np.cumsum(pmf / pmf.sum())
    ks = []
    k = 2
    while True:
        ks.append(math.exp(-beta + k * math.log(beta) - math.lgamma(k + 1)) / p2)
        if k > 2 + 10 * beta and ks[-1] < 1e-18:
            break
        k += 1
    pois_cdf = np.cumsum(ks)
    pois_cdf /= pois_cdf[-1]
    return p2, binom_cdf, pois_cdf


@njit(cache=True, nogil=True)
def _draw_cdf(cdf, offset):
    x = np.random.random()
    lo = 0
    hi = cdf.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo + offset


@njit(cache=True, nogil=True)
def _replicate(d, m_max, beta, theta, u, n, seed, p2, binom_cdf, pois_cdf, max_nodes, out):
    """Run the level ladder once; returns 0, or 1 if a subtree overflowed."""
    np.random.seed(seed)
    log_theta = math.log(theta)
    kappa = (1.0 + beta / theta) / (1.0 + beta)
    log_kappa = math.log(kappa)
    shift = d * beta * (1.0 - 1.0 / theta)
    pi1 = (beta / theta) / (1.0 + beta / theta)
    q0 = (1.0 - p2) ** d
    sigma = np.ones(m_max + 1)
    zs = np.ones(m_max + 1)
    cap = 64
    gen = np.zeros(cap, np.int64)
    par = np.zeros(cap, np.int64)
    nch = np.zeros(cap, np.int64)
    lam = np.zeros(cap, np.float64)
    lcap = 256
    l_edge = np.zeros(lcap, np.int64)
    l_time = np.zeros(lcap, np.float64)
    l_kind = np.zeros(lcap, np.int64)
    log_r = np.zeros(m_max + 1)
    for m in range(1, m_max + 1):
        for g in range(1, m):
            log_r[g] = (d - 1) * log_kappa + math.log(zs[m - g]) + shift - log_theta
        log_r[m] = -log_kappa - log_theta
        s_w = 0.0
        s_w2 = 0.0
        s_wr = 0.0
        s_a2 = 0.0
        for _ in range(n):
            # grow S breadth-first under Q, root has >= 1 child
            ns = 1
            gen[0] = 0
            head = 0
            while head < ns:
                x = head
                head += 1
                if gen[x] >= m:
                    nch[x] = 0
                    continue
                if x == 0:
                    c = _draw_cdf(binom_cdf, 1)
                else:
                    c = np.random.binomial(d, p2)
                nch[x] = c
                if ns + c > cap:
                    if ns + c > max_nodes:
                        return 1
                    new = max(2 * cap, ns + c)
                    g2 = np.zeros(new, np.int64)
                    p2a = np.zeros(new, np.int64)
                    c2 = np.zeros(new, np.int64)
                    g2[:ns] = gen[:ns]
                    p2a[:ns] = par[:ns]
                    c2[:ns] = nch[:ns]
                    gen = g2
                    par = p2a
                    nch = c2
                    lam = np.zeros(new, np.float64)
                    cap = new
                for j in range(c):
                    gen[ns] = gen[x] + 1
                    par[ns] = x
                    ns += 1
            # links on S edges; edge y - 1 joins par[y] and y
            nl = 0
            two_on_first = False
            for y in range(1, ns):
                k = _draw_cdf(pois_cdf, 2)
                if y == 1 and k == 2:
                    two_on_first = True
                if nl + k > lcap:
                    new = max(2 * lcap, nl + k)
                    e2 = np.zeros(new, np.int64)
                    t2 = np.zeros(new, np.float64)
                    k2 = np.zeros(new, np.int64)
                    e2[:nl] = l_edge[:nl]
                    t2[:nl] = l_time[:nl]
                    k2[:nl] = l_kind[:nl]
                    l_edge = e2
                    l_time = t2
                    l_kind = k2
                    lcap = new
                for _k in range(k):
                    l_edge[nl] = y - 1
                    l_time[nl] = np.random.random()
                    l_kind[nl] = 1 if np.random.random() < u else 0
                    nl += 1
            eu = par[1:ns].copy()
            ev = np.arange(1, ns)
            vstart = np.zeros(ns + 1, np.int64)
            ep_time = np.zeros(2 * nl, np.float64)
            ep_link = np.zeros(2 * nl, np.int64)
            ep_vertex = np.zeros(2 * nl, np.int64)
            link_pos = np.zeros((nl, 2), np.int64)
            zarc = np.zeros(ns, np.int64)
            parent = np.zeros(2 * nl + ns, np.int64)
            label = np.zeros(2 * nl + ns, np.int64)
            ell = trace_into(ns, eu, ev, l_edge, l_time, l_kind, nl, vstart, ep_time, ep_link,
                             ep_vertex, link_pos, zarc, parent, label)
            r = label[arc_at(vstart, ep_time, zarc, 0, 0.0)]
            for x in range(ns):
                lam[x] = 0.0
            visit = False
            for a in range(2 * nl):
                if label[a] == r:
                    v = ep_vertex[a]
                    lam[v] += arc_length(vstart, ep_time, ep_vertex, 2 * nl, a)
                    if gen[v] == m:
                        visit = True
            lw = (ell - 1) * log_theta
            for y in range(1, ns):
                lw += log_r[gen[y]]
            w = math.exp(lw)
            if visit:
                rr = 1.0
            else:
                miss = 1.0
                for x in range(ns):
                    if gen[x] < m:
                        miss *= (1.0 - pi1 * lam[x] * sigma[m - gen[x] - 1]) ** (d - nch[x])
                rr = 1.0 - miss
            s_w += w
            s_w2 += w * w
            s_wr += w * rr
            # A2: S is a single root edge with exactly two links
            if ns == 2 and two_on_first:
                s_a2 += w
        mw = s_w / n
        ew = q0 + (1.0 - q0) * mw
        r0 = 1.0 - (1.0 - pi1 * sigma[m - 1]) ** d
        ewr = q0 * r0 + (1.0 - q0) * s_wr / n
        zs[m] = 1.0 / (math.exp(d * log_kappa + shift) * ew)
        sigma[m] = ewr / ew
        out[m, C_EW] = ew
        out[m, C_EWR] = ewr
        out[m, C_A1] = q0 / ew
        out[m, C_A2] = (1.0 - q0) * (s_a2 / n) / ew
        out[m, C_OTHER] = 1.0 - out[m, C_A1] - out[m, C_A2]
        out[m, C_Z] = zs[m]
        out[m, C_SIGMA] = sigma[m]
        out[m, C_KISH] = s_w * s_w / s_w2 if s_w2 > 0 else 0.0
    return 0


@dataclass(frozen=True)
class RecursionResult:
    """Per-level estimates, lists indexed by ``m`` (entry 0 is the trivial level)."""

    params: ModelParams
    m_max: int
    samples_per_level: int
    replicates: int
    sigma: list
    z: list
    prob_a1: list
    prob_a2: list
    prob_other: list
    raw: np.ndarray  # (replicates, m_max + 1, N_COLS)


def _reduce(raw: np.ndarray, col: int, m: int, n_total: int, q0: float) -> Estimate:
    vals = raw[:, m, col]
    k = vals.size
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    kish = float(raw[:, m, C_KISH].sum())
    ess = min(float(n_total), kish / max(1.0 - q0, 1e-300)) if kish > 0 else float(n_total)
    return Estimate(mean, se, n_total, max(ess, 1.0))


def tree_recursion(params: ModelParams, m_max: int, n: int, seed: int,
                   replicates: int = N_REPLICATES, workers: int = 1,
                   max_subtree: int = MAX_SUBTREE) -> RecursionResult:
    """Estimates of ``sigma_m``, ``z_m`` and the root-event probabilities for
    ``m = 0..m_max`` from ``n`` samples per level split over ``replicates``."""
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    if replicates < 2:
        raise ValueError("need at least two replicates for error bars")
    d, beta, theta, u = params.d, params.beta, params.theta, params.u
    per = max(1, n // replicates)
    p2, binom_cdf, pois_cdf = _conditional_tables(d, beta)
    raw = np.zeros((replicates, m_max + 1, N_COLS))

    def job(r):
        s = derive_seed(seed, 21, r) % (2 ** 32)
        status = _replicate(d, m_max, beta, theta, u, per, s, p2, binom_cdf, pois_cdf,
                            max_subtree, raw[r])
        if status:
            raise SubtreeOverflow(f"exploration subtree above {max_subtree} vertices "
                                  f"(d={d}, beta={beta}); the branching is supercritical")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(job, range(replicates)))
    else:
        for r in range(replicates):
            job(r)
    total = per * replicates
    q0 = (1.0 - p2) ** d
    one = Estimate(1.0, 0.0, total, float(total))
    sig, z, a1, a2, oth = [one], [None], [one], [Estimate(0.0, 0.0, total, float(total))], \
        [Estimate(0.0, 0.0, total, float(total))]
    for m in range(1, m_max + 1):
        sig.append(_reduce(raw, C_SIGMA, m, total, q0))
        z.append(_reduce(raw, C_Z, m, total, q0))
        a1.append(_reduce(raw, C_A1, m, total, q0))
        a2.append(_reduce(raw, C_A2, m, total, q0))
        oth.append(_reduce(raw, C_OTHER, m, total, q0))
    return RecursionResult(params, m_max, per, replicates, sig, z, a1, a2, oth, raw)


def partition_ratio_recursive(params: ModelParams, m: int, n: int, seed: int,
                              workers: int = 1) -> Estimate:
    if m < 1:
        raise ValueError("z_m needs m >= 1")
    return tree_recursion(params, m, n, seed, workers=workers).z[m]
