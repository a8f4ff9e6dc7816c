"""Compiled inner loops for mass simulation.

Same dynamics as engine.Engine but with flat state, a local xoshiro256+
generator and no tape, so millions of busy cycles per second are possible
and chunks can run on worker threads (nogil). Reproducibility comes from
seeding each chunk's generator state off (seed, stream tag, chunk index),
which makes results independent of worker count and scheduling order.

Distribution codes and the (p1, p2) parameter packing follow
distributions.Dist.kernel_params().
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .network import NetworkSpec

_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U45 = np.uint64(45)
_U19 = np.uint64(19)
_INV53 = 1.1102230246251565e-16  # 2^-53


@njit(cache=True, nogil=True, inline="always")
def _u01(s):
    # xoshiro256+: output from the pre-update state, top 53 bits
    r = (s[0] + s[3]) >> _U11
    t = s[1] << _U17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << _U45) | (s[3] >> _U19)
    return r * _INV53


@njit(cache=True, nogil=True, inline="always")
def _draw(code, p1, p2, s):
    u = _u01(s)
    if code == 0:
        return p1
    if code == 1:
        return p1 + (p2 - p1) * u
    if code == 2:
        return -p1 * np.log1p(-u)
    if code == 3:
        return p2 * (1.0 - u) ** (-1.0 / p1)
    return p2 * ((1.0 - u) ** (-1.0 / p1) - 1.0)


@njit(cache=True, nogil=True, inline="always")
def _pick(cum, u):
    for j in range(cum.size):
        if u < cum[j]:
            return j
    return cum.size - 1


@njit(cache=True, nogil=True)
def sim_cycles(state, n_cycles, acode, ap1, ap2, scodes, sp1, sp2, p0cum, rcum,
               big_threshold, max_events, max_time):
    """Simulate n_cycles i.i.d. busy cycles.

    Returns per-cycle arrays (B, nu, smax, kmax, s2nd, nbig, overflow).
    A cycle hitting the event or time cap gets overflow=1 and B=nan; the
    simulation then moves on to a fresh cycle.
    """
    K = scodes.size
    B = np.empty(n_cycles)
    nu = np.zeros(n_cycles, np.int64)
    smax = np.zeros(n_cycles)
    kmax = np.full(n_cycles, -1, np.int64)
    s2nd = np.zeros(n_cycles)
    nbig = np.zeros(n_cycles, np.int64)
    overflow = np.zeros(n_cycles, np.uint8)
    q = np.zeros(K, np.int64)
    comp = np.empty(K)
    for c in range(n_cycles):
        for k in range(K):
            q[k] = 0
            comp[k] = np.inf
        occ = 0
        arrived = 0
        next_arr = 0.0  # cycle clock starts at its first arrival
        events = 0
        while True:
            kd = -1
            td = np.inf
            for k in range(K):
                if comp[k] < td:
                    td = comp[k]
                    kd = k
            events += 1
            if events > max_events or min(td, next_arr) > max_time:
                overflow[c] = 1
                B[c] = np.nan
                nu[c] = arrived
                break
            if td <= next_arr:
                u = _u01(state)
                dest = _pick(rcum[kd], u)
                q[kd] -= 1
                occ -= 1
                if q[kd] > 0:
                    sv = _draw(scodes[kd], sp1[kd], sp2[kd], state)
                    comp[kd] = td + sv
                    if sv > smax[c]:
                        s2nd[c] = smax[c]
                        smax[c] = sv
                        kmax[c] = kd
                    elif sv > s2nd[c]:
                        s2nd[c] = sv
                    if sv > big_threshold:
                        nbig[c] += 1
                else:
                    comp[kd] = np.inf
                if dest < K:
                    q[dest] += 1
                    occ += 1
                    if q[dest] == 1:
                        sv = _draw(scodes[dest], sp1[dest], sp2[dest], state)
                        comp[dest] = td + sv
                        if sv > smax[c]:
                            s2nd[c] = smax[c]
                            smax[c] = sv
                            kmax[c] = dest
                        elif sv > s2nd[c]:
                            s2nd[c] = sv
                        if sv > big_threshold:
                            nbig[c] += 1
                elif occ == 0:
                    B[c] = td
                    nu[c] = arrived
                    break
            else:
                u = _u01(state)
                ke = _pick(p0cum, u)
                q[ke] += 1
                occ += 1
                arrived += 1
                if q[ke] == 1:
                    sv = _draw(scodes[ke], sp1[ke], sp2[ke], state)
                    comp[ke] = next_arr + sv
                    if sv > smax[c]:
                        s2nd[c] = smax[c]
                        smax[c] = sv
                        kmax[c] = ke
                    elif sv > s2nd[c]:
                        s2nd[c] = sv
                    if sv > big_threshold:
                        nbig[c] += 1
                next_arr = next_arr + _draw(acode, ap1, ap2, state)
        # cycle boundary: nothing carries over but the generator state
    return B, nu, smax, kmax, s2nd, nbig, overflow


@njit(cache=True, nogil=True)
def sim_saturated(state, L, n_groups, scodes, sp1, sp2, p0cum, rcum, max_events):
    """Makespans of n_groups independent batches of L customers all arriving
    at time 0 into an empty system. Arrival law plays no role here."""
    K = scodes.size
    out = np.empty(n_groups)
    q = np.zeros(K, np.int64)
    comp = np.empty(K)
    for g in range(n_groups):
        for k in range(K):
            q[k] = 0
            comp[k] = np.inf
        for _ in range(L):
            u = _u01(state)
            ke = _pick(p0cum, u)
            q[ke] += 1
            if q[ke] == 1:
                comp[ke] = _draw(scodes[ke], sp1[ke], sp2[ke], state)
        occ = L
        last = 0.0
        events = 0
        ok = True
        while occ > 0:
            kd = -1
            td = np.inf
            for k in range(K):
                if comp[k] < td:
                    td = comp[k]
                    kd = k
            events += 1
            if events > max_events:
                ok = False
                break
            u = _u01(state)
            dest = _pick(rcum[kd], u)
            q[kd] -= 1
            occ -= 1
            last = td
            if q[kd] > 0:
                comp[kd] = td + _draw(scodes[kd], sp1[kd], sp2[kd], state)
            else:
                comp[kd] = np.inf
            if dest < K:
                q[dest] += 1
                occ += 1
                if q[dest] == 1:
                    comp[dest] = td + _draw(scodes[dest], sp1[dest], sp2[dest], state)
        out[g] = last if ok else np.nan
    return out


def kernel_args(spec: NetworkSpec) -> dict:
    """Pack a NetworkSpec into the flat arrays the jitted loops take."""
    acode, ap1, ap2 = spec.arrival.kernel_params()
    sp = [s.kernel_params() for s in spec.services]
    return {
        "acode": np.int64(acode),
        "ap1": float(ap1),
        "ap2": float(ap2),
        "scodes": np.array([c for c, _, _ in sp], dtype=np.int64),
        "sp1": np.array([a for _, a, _ in sp]),
        "sp2": np.array([b for _, _, b in sp]),
        "p0cum": np.cumsum(spec.p0),
        "rcum": np.ascontiguousarray(np.cumsum(spec.routing, axis=1)),
    }
