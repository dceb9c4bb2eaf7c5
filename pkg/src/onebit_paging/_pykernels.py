"""Pure-Python implementations of the hot loops.

Signatures mirror the compiled ``_kernels`` module exactly.  Page arguments
are dense interned ids in ``range(npages)``.
"""

from __future__ import annotations

import heapq

import numpy as np


def next_use(ids):
    """Index of the next request to the same page, or ``n`` if none."""
    ids = np.asarray(ids, dtype=np.int64)
    n = len(ids)
    nxt = np.full(n, n, dtype=np.int64)
    if n < 2:
        return nxt
    order = np.argsort(ids, kind="stable")
    same = ids[order[1:]] == ids[order[:-1]]
    nxt[order[:-1][same]] = order[1:][same]
    return nxt


def phase_starts(ids, k, npages):
    starts = []
    seen = set()
    for t, p in enumerate(ids.tolist() if hasattr(ids, "tolist") else ids):
        if p not in seen:
            if len(seen) == k or not starts:
                starts.append(t)
                seen = set()
            seen.add(p)
    return np.asarray(starts, dtype=np.int64)


def lfd(ids, k, npages, nxt):
    """Belady/LFD replay.

    Returns ``(fault_flags, evicted_before_reuse, eviction_times,
    eviction_pages)``.  A page never requested again is preferred as victim,
    smallest id first; otherwise the page whose next request is furthest.
    """
    ids_l = ids.tolist() if hasattr(ids, "tolist") else list(ids)
    nxt_l = nxt.tolist() if hasattr(nxt, "tolist") else list(nxt)
    n = len(ids_l)
    faults = bytearray(n)
    ebr = bytearray(n)
    resident = bytearray(npages)
    cur_key = [-1] * npages
    last_req = [0] * npages
    heap: list = []
    occupied = 0
    ev_t: list = []
    ev_p: list = []
    for t in range(n):
        p = ids_l[t]
        nu = nxt_l[t]
        key = nu if nu < n else n + (npages - p)
        if not resident[p]:
            faults[t] = 1
            if occupied == k:
                while True:
                    negkey, q = heapq.heappop(heap)
                    if resident[q] and cur_key[q] == -negkey:
                        break
                resident[q] = 0
                ebr[last_req[q]] = 1
                ev_t.append(t)
                ev_p.append(q)
            else:
                occupied += 1
            resident[p] = 1
        cur_key[p] = key
        last_req[p] = t
        heapq.heappush(heap, (-key, p))
    return (
        np.frombuffer(bytes(faults), dtype=np.uint8).copy(),
        np.frombuffer(bytes(ebr), dtype=np.uint8).copy(),
        np.asarray(ev_t, dtype=np.int64),
        np.asarray(ev_p, dtype=np.int64),
    )


def simulate(code, ids, bits, k, npages, seed):
    """Replay a trace through the reference policy classes."""
    from .policies import POLICY_NAMES, make_policy

    policy = make_policy(POLICY_NAMES[code], k, seed)
    ids_l = ids.tolist() if hasattr(ids, "tolist") else list(ids)
    bits_l = bits.tolist() if hasattr(bits, "tolist") else list(bits)
    flags = bytearray(len(ids_l))
    ev_t: list = []
    ev_p: list = []
    serve = policy.serve
    for t, (p, b) in enumerate(zip(ids_l, bits_l)):
        fault, evicted = serve(p, b)
        if fault:
            flags[t] = 1
        for q in evicted:
            ev_t.append(t)
            ev_p.append(q)
    return (
        np.frombuffer(bytes(flags), dtype=np.uint8).copy(),
        np.asarray(ev_t, dtype=np.int64),
        np.asarray(ev_p, dtype=np.int64),
    )
