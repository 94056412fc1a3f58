"""Compiled sampling kernels: per-configuration observables, i.i.d. batches
and the birth-death Metropolis chain.

All randomness is generated outside the kernels (counter-based numpy streams)
and passed in, so results do not depend on thread scheduling.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..analytics.events import NOT_TREE, classify_kernel, edge_counts, subtree_kernel
from ..looptracer import arc_at, trace_into

# integer observable columns
I_ELL, I_NLINKS, I_REACH, I_CONN, I_EVENT, I_TEDGES = 0, 1, 2, 3, 4, 5
KMAX = 4
I_V0 = 6
I_E0 = I_V0 + KMAX
N_INT = I_E0 + KMAX
# float observable columns
F_LAM_ROOT, F_LAM_CHILD = 0, 1
N_FLOAT = 2


@njit(cache=True, nogil=True)
def observe(nv, eu, ev, gen, root, partner, child_ptr, child_edge, is_tree,
            l_edge, l_time, l_kind, n_links,
            vstart, ep_time, ep_link, ep_vertex, link_pos, zarc, parent, label,
            cnt, queue, vsize, esize, out_i, out_f):
    """Trace one configuration and fill one observable row; returns True on a
    same-vertex time collision (the row is then meaningless)."""
    ell = trace_into(nv, eu, ev, l_edge, l_time, l_kind, n_links,
                     vstart, ep_time, ep_link, ep_vertex, link_pos, zarc, parent, label)
    for v in range(nv):
        for p in range(vstart[v] + 1, vstart[v + 1]):
            if ep_time[p] == ep_time[p - 1]:
                return True
    two_l = 2 * n_links
    r = label[arc_at(vstart, ep_time, zarc, root, 0.0)]
    reach = 0
    g0 = gen[root]
    for a in range(two_l):
        if label[a] == r:
            gg = gen[ep_vertex[a]] - g0
            if gg > reach:
                reach = gg
    out_i[I_ELL] = ell
    out_i[I_NLINKS] = n_links
    out_i[I_REACH] = reach
    out_i[I_CONN] = 0
    if partner >= 0 and label[arc_at(vstart, ep_time, zarc, partner, 0.0)] == r:
        out_i[I_CONN] = 1
    out_f[F_LAM_ROOT] = 0.0
    out_f[F_LAM_CHILD] = 0.0
    if is_tree:
        edge_counts(l_edge, n_links, cnt)
        code, x, lr, lx = classify_kernel(root, child_ptr, child_edge, ev, cnt,
                                          l_edge, l_time, l_kind, n_links)
        out_i[I_EVENT] = code
        out_f[F_LAM_ROOT] = lr
        out_f[F_LAM_CHILD] = lx
        out_i[I_TEDGES] = subtree_kernel(root, child_ptr, child_edge, ev, gen, cnt,
                                         vsize, esize, queue)
        for k in range(KMAX):
            out_i[I_V0 + k] = vsize[k]
            out_i[I_E0 + k] = esize[k]
    else:
        out_i[I_EVENT] = NOT_TREE
        out_i[I_TEDGES] = -1
        for k in range(KMAX):
            out_i[I_V0 + k] = -1
            out_i[I_E0 + k] = -1
    return False


@njit(cache=True, nogil=True)
def iid_batch(nv, eu, ev, gen, root, partner, child_ptr, child_edge, is_tree,
              counts, times, kinds, out_i, out_f, collided):
    """Observables of ``counts.shape[0]`` configurations whose links are read
    consecutively from ``times``/``kinds``."""
    nb, ne = counts.shape
    cap = 1
    for b in range(nb):
        s = 0
        for e in range(ne):
            s += counts[b, e]
        if s > cap:
            cap = s
    l_edge = np.zeros(cap, np.int64)
    l_time = np.zeros(cap, np.float64)
    l_kind = np.zeros(cap, np.int64)
    vstart = np.zeros(nv + 1, np.int64)
    ep_time = np.zeros(2 * cap, np.float64)
    ep_link = np.zeros(2 * cap, np.int64)
    ep_vertex = np.zeros(2 * cap, np.int64)
    link_pos = np.zeros((cap, 2), np.int64)
    zarc = np.zeros(nv, np.int64)
    parent = np.zeros(2 * cap + nv, np.int64)
    label = np.zeros(2 * cap + nv, np.int64)
    cnt = np.zeros(ne, np.int64)
    queue = np.zeros(nv, np.int64)
    vsize = np.zeros(KMAX, np.int64)
    esize = np.zeros(KMAX, np.int64)
    pos = 0
    for b in range(nb):
        n = 0
        for e in range(ne):
            for _ in range(counts[b, e]):
                l_edge[n] = e
                l_time[n] = times[pos]
                l_kind[n] = kinds[pos]
                n += 1
                pos += 1
        collided[b] = observe(nv, eu, ev, gen, root, partner, child_ptr, child_edge, is_tree,
                              l_edge, l_time, l_kind, n,
                              vstart, ep_time, ep_link, ep_vertex, link_pos, zarc, parent,
                              label, cnt, queue, vsize, esize, out_i[b], out_f[b])


@njit(cache=True, nogil=True)
def _vertex_clash(eu, ev, l_edge, l_time, n_links, e, t):
    a = eu[e]
    b = ev[e]
    for i in range(n_links):
        if l_time[i] == t:
            f = l_edge[i]
            if eu[f] == a or ev[f] == a or eu[f] == b or ev[f] == b:
                return True
    return False


@njit(cache=True, nogil=True)
def mcmc_run(nv, eu, ev, gen, root, partner, child_ptr, child_edge, is_tree,
             beta, u, log_theta, l_edge, l_time, l_kind, state, unif,
             record_from, thin, out_i, out_f):
    """Advance the chain by ``unif.shape[0]`` steps.

    ``state`` = [n_links, ell, step counter, accepted births, accepted deaths].
    Steps whose global index ``s >= record_from`` with ``(s - record_from) %
    thin == 0`` are written to ``out_*``; returns the number written.
    """
    ne = eu.shape[0]
    cap = l_edge.shape[0]
    vstart = np.zeros(nv + 1, np.int64)
    ep_time = np.zeros(2 * cap, np.float64)
    ep_link = np.zeros(2 * cap, np.int64)
    ep_vertex = np.zeros(2 * cap, np.int64)
    link_pos = np.zeros((cap, 2), np.int64)
    zarc = np.zeros(nv, np.int64)
    parent = np.zeros(2 * cap + nv, np.int64)
    label = np.zeros(2 * cap + nv, np.int64)
    cnt = np.zeros(max(ne, 1), np.int64)
    queue = np.zeros(nv, np.int64)
    vsize = np.zeros(KMAX, np.int64)
    esize = np.zeros(KMAX, np.int64)
    n = state[0]
    ell = state[1]
    step = state[2]
    rate = beta * ne
    written = 0
    for s in range(unif.shape[0]):
        if unif[s, 0] < 0.5:
            e = min(int(unif[s, 1] * ne), ne - 1)
            t = unif[s, 2]
            if ne > 0 and not _vertex_clash(eu, ev, l_edge, l_time, n, e, t):
                l_edge[n] = e
                l_time[n] = t
                l_kind[n] = 1 if unif[s, 3] < u else 0
                new = trace_into(nv, eu, ev, l_edge, l_time, l_kind, n + 1, vstart, ep_time,
                                 ep_link, ep_vertex, link_pos, zarc, parent, label)
                logr = (new - ell) * log_theta + math.log(rate / (n + 1))
                if logr >= 0.0 or unif[s, 4] < math.exp(logr):
                    n += 1
                    ell = new
                    state[3] += 1
        elif n > 0:
            j = min(int(unif[s, 1] * n), n - 1)
            last = n - 1
            te, tt, tk = l_edge[j], l_time[j], l_kind[j]
            l_edge[j], l_time[j], l_kind[j] = l_edge[last], l_time[last], l_kind[last]
            l_edge[last], l_time[last], l_kind[last] = te, tt, tk
            new = trace_into(nv, eu, ev, l_edge, l_time, l_kind, n - 1, vstart, ep_time,
                             ep_link, ep_vertex, link_pos, zarc, parent, label)
            logr = (new - ell) * log_theta + math.log(n / rate)
            if logr >= 0.0 or unif[s, 4] < math.exp(logr):
                n -= 1
                ell = new
                state[4] += 1
            else:
                # restore the original order so the state is bitwise unchanged
                l_edge[last], l_time[last], l_kind[last] = l_edge[j], l_time[j], l_kind[j]
                l_edge[j], l_time[j], l_kind[j] = te, tt, tk
        if step >= record_from and (step - record_from) % thin == 0:
            observe(nv, eu, ev, gen, root, partner, child_ptr, child_edge, is_tree,
                    l_edge, l_time, l_kind, n, vstart, ep_time, ep_link, ep_vertex,
                    link_pos, zarc, parent, label, cnt, queue, vsize, esize,
                    out_i[written], out_f[written])
            written += 1
        step += 1
    state[0] = n
    state[1] = ell
    state[2] = step
    return written
