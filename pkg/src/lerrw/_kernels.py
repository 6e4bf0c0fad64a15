"""Compiled long-horizon walker on a lazily grown size-biased tree.

The annealed walk draws, at each first visit, the vertex's offspring count and
one gamma weight per exit slot; normalized slot weights are exactly the
quenched jump law, so the path distribution matches live reinforcement.
Spine vertices use the size-biased offspring law with a uniformly placed
special child, extending the tree past any finite depth.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .environment import WeightScheme, depth_weight_table
from .offspring import OffspringLaw, sampling_tables

HUGE = np.int64(2**62)

# status codes for a finished replica
OK = 0
CENSORED = 1
VERTEX_CAPACITY = 2
DEPTH_TABLE = 3


@njit(cache=True)
def _expand(v, nv, ns, parent, depth, first_child, nkids, sptr, is_spine,
            gcum, cdf_ord, cdf_sb, wdepth, delta, cap_v, cap_s):
    d = depth[v]
    if d + 1 >= wdepth.shape[0]:
        return nv, ns, DEPTH_TABLE
    u = np.random.random()
    if is_spine[v] == 1:
        k = np.searchsorted(cdf_sb, u, side="right")
    else:
        k = np.searchsorted(cdf_ord, u, side="right")
    kmax = cdf_ord.shape[0] - 1
    if k > kmax:
        k = kmax
    if nv + k > cap_v:
        return nv, ns, VERTEX_CAPACITY
    has_par = 1 if v != 0 else 0
    nslots = has_par + k
    if ns + nslots > cap_s:
        return nv, ns, VERTEX_CAPACITY
    first_child[v] = nv
    nkids[v] = k
    sptr[v] = ns
    acc = 0.0
    if has_par == 1:
        acc += np.random.gamma((wdepth[d] + delta) / (2.0 * delta), 1.0)
        gcum[ns] = acc
    cshape = wdepth[d + 1] / (2.0 * delta)
    for i in range(k):
        acc += np.random.gamma(cshape, 1.0)
        gcum[ns + has_par + i] = acc
    for i in range(k):
        c = nv + i
        parent[c] = v
        depth[c] = d + 1
        first_child[c] = -2
        is_spine[c] = 0
    if is_spine[v] == 1 and k > 0:
        j = np.int64(np.random.random() * k)
        if j >= k:
            j = k - 1
        is_spine[nv + j] = 1
    return nv + k, ns + nslots, OK


@njit(cache=True)
def _annealed_walk(seed, horizon, depth_limit, observe_radius, cdf_ord,
                   cdf_sb, wdepth, delta, cps, radii, cap_v, cap_s):
    np.random.seed(seed)
    n_cp = cps.shape[0]
    disp = np.zeros(n_cp, np.int64)
    maxd_cp = np.zeros(n_cp, np.int64)
    rets_cp = np.zeros(n_cp, np.int64)
    exits = np.full(radii.shape[0], -1, np.int64)
    parent = np.full(cap_v, -1, np.int64)
    depth = np.zeros(cap_v, np.int64)
    first_child = np.full(cap_v, -2, np.int64)
    nkids = np.zeros(cap_v, np.int64)
    sptr = np.zeros(cap_v, np.int64)
    is_spine = np.zeros(cap_v, np.uint8)
    gcum = np.zeros(cap_s, np.float64)
    is_spine[0] = 1
    nv, ns, status = _expand(0, 1, 0, parent, depth, first_child, nkids, sptr,
                             is_spine, gcum, cdf_ord, cdf_sb, wdepth, delta,
                             cap_v, cap_s)
    pos = np.int64(0)
    t = np.int64(0)
    cp_i = 0
    ex_i = 0
    maxd = np.int64(0)
    rets = np.int64(0)
    reached = False
    ret_after = 0
    censor_t = np.int64(-1)
    while status == OK and t < horizon:
        t += 1
        base = sptr[pos]
        has_par = 1 if pos != 0 else 0
        nslots = has_par + nkids[pos]
        r = np.random.random() * gcum[base + nslots - 1]
        slot = 0
        while slot < nslots - 1 and r >= gcum[base + slot]:
            slot += 1
        if has_par == 1 and slot == 0:
            nxt = parent[pos]
        else:
            nxt = first_child[pos] + slot - has_par
        dn = depth[nxt]
        if dn > maxd:
            maxd = dn
            while ex_i < radii.shape[0] and dn > radii[ex_i]:
                exits[ex_i] = t
                ex_i += 1
            if dn >= observe_radius:
                reached = True
        if dn >= depth_limit:
            # arrival at the truncation boundary: the move itself is valid,
            # everything past it would need the cut subtree
            pos = nxt
            censor_t = t
            status = CENSORED
            break
        if first_child[nxt] == -2:
            nv, ns, status = _expand(nxt, nv, ns, parent, depth, first_child,
                                     nkids, sptr, is_spine, gcum, cdf_ord,
                                     cdf_sb, wdepth, delta, cap_v, cap_s)
            if status != OK:
                break
        pos = nxt
        if pos == 0:
            rets += 1
            if reached:
                ret_after = 1
        while cp_i < n_cp and cps[cp_i] == t:
            disp[cp_i] = depth[pos]
            maxd_cp[cp_i] = maxd
            rets_cp[cp_i] = rets
            cp_i += 1
    while cp_i < n_cp:
        disp[cp_i] = depth[pos]
        maxd_cp[cp_i] = maxd
        rets_cp[cp_i] = rets
        cp_i += 1
    return status, disp, maxd_cp, rets_cp, exits, ret_after, censor_t, t, nv


class KernelCapacityError(RuntimeError):
    pass


def annealed_displacement_run(
    law: OffspringLaw,
    scheme: WeightScheme,
    horizon: int,
    checkpoints: np.ndarray,
    seed: int,
    radii: np.ndarray | None = None,
    depth_limit: int | None = None,
    observe_radius: int | None = None,
    cap_vertices: int = 1 << 22,
    cap_slots: int = 1 << 23,
    max_table_depth: int = 1 << 21,
):
    """One replica of the lazy annealed walk; deterministic in `seed`."""
    cdf_ord, _ = sampling_tables(law)
    cdf_sb, _ = sampling_tables(law, size_biased=True)
    wdepth = _weight_table_cached(scheme, max_table_depth)
    cps = np.asarray(checkpoints, dtype=np.int64)
    rad = (np.zeros(0, dtype=np.int64) if radii is None
           else np.asarray(radii, dtype=np.int64))
    out = _annealed_walk(
        np.int64(seed) & np.int64(0x7FFFFFFF), np.int64(horizon),
        HUGE if depth_limit is None else np.int64(depth_limit),
        HUGE if observe_radius is None else np.int64(observe_radius),
        cdf_ord, cdf_sb, wdepth, float(scheme.delta), cps, rad,
        np.int64(cap_vertices), np.int64(cap_slots))
    status = int(out[0])
    if status in (VERTEX_CAPACITY, DEPTH_TABLE):
        raise KernelCapacityError(
            f"replica seed={seed} exceeded kernel capacity (status {status})")
    return {
        "status": status,
        "displacement": out[1],
        "max_displacement": out[2],
        "returns": out[3],
        "first_exit_times": out[4],
        "returned_after_observe_radius": bool(out[5]),
        "censor_time": None if int(out[6]) < 0 else int(out[6]),
        "steps": int(out[7]),
        "visited_vertices": int(out[8]),
    }


_WTABLES: dict[tuple, np.ndarray] = {}


def _weight_table_cached(scheme: WeightScheme, max_depth: int) -> np.ndarray:
    key = (scheme.mode, scheme.alpha, scheme.delta, scheme.n, scheme.an, max_depth)
    tab = _WTABLES.get(key)
    if tab is None:
        tab = depth_weight_table(scheme, max_depth)
        _WTABLES[key] = tab
    return tab
