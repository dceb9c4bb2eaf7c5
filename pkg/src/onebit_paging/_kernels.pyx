# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; must match ``_pykernels`` and ``policies`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t, uint64_t

cnp.import_array()

ctypedef int64_t i64
ctypedef uint64_t u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline u64 mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef struct Rng:
    u64 seed
    u64 counter


cdef inline i64 rng_below(Rng* r, i64 m) nogil:
    cdef u64 um = <u64>m
    cdef u64 rem = (<u64>0 - um) % um
    cdef u64 limit = <u64>0xFFFFFFFFFFFFFFFFULL - rem
    cdef u64 x
    while True:
        r.counter += 1
        x = mix64(r.seed + r.counter * GOLDEN)
        if x <= limit:
            return <i64>(x % um)


def next_use(const i64[::1] ids):
    cdef Py_ssize_t n = ids.shape[0], t
    cdef i64 npages = 0
    for t in range(n):
        if ids[t] + 1 > npages:
            npages = ids[t] + 1
    out = np.empty(n, dtype=np.int64)
    cdef i64[::1] nxt = out
    cdef i64[::1] seen = np.full(max(npages, 1), n, dtype=np.int64)
    for t in range(n - 1, -1, -1):
        nxt[t] = seen[ids[t]]
        seen[ids[t]] = t
    return out


def phase_starts(const i64[::1] ids, i64 k, i64 npages):
    cdef Py_ssize_t n = ids.shape[0], t
    cdef i64[::1] stamp = np.full(max(npages, 1), -1, dtype=np.int64)
    cdef i64 phase = -1, distinct = 0, p
    starts = []
    for t in range(n):
        p = ids[t]
        if phase < 0 or stamp[p] != phase:
            if distinct == k or phase < 0:
                phase += 1
                distinct = 0
                starts.append(t)
            stamp[p] = phase
            distinct += 1
    return np.asarray(starts, dtype=np.int64)


# ---------------------------------------------------------------- LFD

cdef inline void heap_push(i64* hk, i64* hp, i64* size, i64 key, i64 page) nogil:
    cdef i64 i = size[0], parent
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if hk[parent] >= key:
            break
        hk[i] = hk[parent]
        hp[i] = hp[parent]
        i = parent
    hk[i] = key
    hp[i] = page


cdef inline void heap_pop(i64* hk, i64* hp, i64* size, i64* key, i64* page) nogil:
    key[0] = hk[0]
    page[0] = hp[0]
    size[0] -= 1
    cdef i64 n = size[0], i = 0, child
    cdef i64 lk = hk[n], lp = hp[n]
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and hk[child + 1] > hk[child]:
            child += 1
        if hk[child] <= lk:
            break
        hk[i] = hk[child]
        hp[i] = hp[child]
        i = child
    hk[i] = lk
    hp[i] = lp


def lfd(const i64[::1] ids, i64 k, i64 npages, const i64[::1] nxt):
    cdef Py_ssize_t n = ids.shape[0], t
    faults_a = np.zeros(n, dtype=np.uint8)
    ebr_a = np.zeros(n, dtype=np.uint8)
    ev_t_a = np.empty(n, dtype=np.int64)
    ev_p_a = np.empty(n, dtype=np.int64)
    cdef uint8_t[::1] faults = faults_a
    cdef uint8_t[::1] ebr = ebr_a
    cdef i64[::1] ev_t = ev_t_a
    cdef i64[::1] ev_p = ev_p_a
    cdef uint8_t[::1] resident = np.zeros(max(npages, 1), dtype=np.uint8)
    cdef i64[::1] cur_key = np.full(max(npages, 1), -1, dtype=np.int64)
    cdef i64[::1] last_req = np.zeros(max(npages, 1), dtype=np.int64)
    cdef i64[::1] hk = np.empty(n + 1, dtype=np.int64)
    cdef i64[::1] hp = np.empty(n + 1, dtype=np.int64)
    cdef i64 hsize = 0, occupied = 0, nev = 0, p, q, key, popped
    with nogil:
        for t in range(n):
            p = ids[t]
            key = nxt[t] if nxt[t] < n else n + (npages - p)
            if not resident[p]:
                faults[t] = 1
                if occupied == k:
                    while True:
                        heap_pop(&hk[0], &hp[0], &hsize, &popped, &q)
                        if resident[q] and cur_key[q] == popped:
                            break
                    resident[q] = 0
                    ebr[last_req[q]] = 1
                    ev_t[nev] = t
                    ev_p[nev] = q
                    nev += 1
                else:
                    occupied += 1
                resident[p] = 1
            cur_key[p] = key
            last_req[p] = t
            heap_push(&hk[0], &hp[0], &hsize, key, p)
    return faults_a, ebr_a, ev_t_a[:nev].copy(), ev_p_a[:nev].copy()


# ---------------------------------------------------------------- policies
#
# Resident pages live in ``slots[0:nres]`` sorted by id, so "the r-th
# candidate in ascending id order" is a linear scan.

cdef inline void slot_insert(i64* slots, i64* nres, i64 p) nogil:
    cdef i64 i = nres[0]
    while i > 0 and slots[i - 1] > p:
        slots[i] = slots[i - 1]
        i -= 1
    slots[i] = p
    nres[0] += 1


cdef inline void slot_remove(i64* slots, i64* nres, i64 p) nogil:
    cdef i64 i = 0
    while slots[i] != p:
        i += 1
    while i < nres[0] - 1:
        slots[i] = slots[i + 1]
        i += 1
    nres[0] -= 1


cdef enum:
    LRU = 0
    FIFO = 1
    MARK = 2
    FLUSH0 = 3
    MARK0 = 4
    MARK_PREDICT = 5
    MARK_PREDICT_DET = 6


def simulate(int code, const i64[::1] ids, const uint8_t[::1] bits, i64 k, i64 npages, u64 seed):
    if code < 0 or code > 6:
        raise ValueError(f"unknown policy code {code}")
    cdef Py_ssize_t n = ids.shape[0], t
    cdef i64 P = max(npages, 1)
    flags_a = np.zeros(n, dtype=np.uint8)
    ev_t_a = np.empty(n + 1, dtype=np.int64)
    ev_p_a = np.empty(n + 1, dtype=np.int64)
    cdef uint8_t[::1] flags = flags_a
    cdef i64[::1] ev_t = ev_t_a
    cdef i64[::1] ev_p = ev_p_a
    cdef i64[::1] slots = np.empty(k + 1, dtype=np.int64)
    cdef uint8_t[::1] res = np.zeros(P, dtype=np.uint8)
    cdef uint8_t[::1] bitv = np.zeros(P, dtype=np.uint8)
    cdef i64[::1] stamp = np.zeros(P, dtype=np.int64)      # last use / load time
    cdef i64[::1] mark_ep = np.full(P, -1, dtype=np.int64)
    cdef i64[::1] s_ep = np.full(P, -1, dtype=np.int64)
    cdef Rng rng
    rng.seed = seed
    rng.counter = 0
    cdef i64 nres = 0, nev = 0, ep = 0, p, q, i, m, r, victim, best
    cdef uint8_t b
    cdef bint fault, cond, broken = False

    with nogil:
        for t in range(n):
            p = ids[t]
            b = bits[t]
            fault = not res[p]
            if code == LRU or code == FIFO:
                if fault:
                    flags[t] = 1
                    if nres == k:
                        victim = slots[0]
                        best = stamp[victim]
                        for i in range(1, nres):
                            if stamp[slots[i]] < best:
                                victim = slots[i]
                                best = stamp[victim]
                        slot_remove(&slots[0], &nres, victim)
                        res[victim] = 0
                        ev_t[nev] = t; ev_p[nev] = victim; nev += 1
                    slot_insert(&slots[0], &nres, p)
                    res[p] = 1
                    stamp[p] = t
                elif code == LRU:
                    stamp[p] = t
                bitv[p] = b

            elif code == FLUSH0:
                if fault:
                    flags[t] = 1
                    if nres == k:
                        victim = -1
                        for i in range(nres):
                            if bitv[slots[i]] == 1:
                                victim = slots[i]
                                break
                        if victim >= 0:
                            slot_remove(&slots[0], &nres, victim)
                            res[victim] = 0
                            ev_t[nev] = t; ev_p[nev] = victim; nev += 1
                        else:
                            for i in range(nres):
                                res[slots[i]] = 0
                                ev_t[nev] = t; ev_p[nev] = slots[i]; nev += 1
                            nres = 0
                    slot_insert(&slots[0], &nres, p)
                    res[p] = 1
                bitv[p] = b

            elif code == MARK0:
                if fault:
                    flags[t] = 1
                    if nres == k:
                        cond = True
                        for i in range(nres):
                            q = slots[i]
                            if s_ep[q] == ep and mark_ep[q] != ep:
                                cond = False
                                break
                        if cond:
                            ep += 1
                            for i in range(nres):
                                s_ep[slots[i]] = ep
                    if s_ep[p] == ep and mark_ep[p] != ep:
                        m = 0
                        for i in range(nres):
                            q = slots[i]
                            if s_ep[q] == ep and mark_ep[q] != ep:
                                m += 1
                        if m > 0:
                            r = rng_below(&rng, m)
                            for i in range(nres):
                                q = slots[i]
                                if s_ep[q] == ep and mark_ep[q] != ep:
                                    if r == 0:
                                        victim = q
                                        break
                                    r -= 1
                            slot_remove(&slots[0], &nres, victim)
                            res[victim] = 0
                            ev_t[nev] = t; ev_p[nev] = victim; nev += 1
                    if nres == k:
                        m = 0
                        for i in range(nres):
                            q = slots[i]
                            if s_ep[q] == ep and mark_ep[q] != ep:
                                m += 1
                        if m == 0:
                            broken = True
                            break
                        r = rng_below(&rng, m)
                        for i in range(nres):
                            q = slots[i]
                            if s_ep[q] == ep and mark_ep[q] != ep:
                                if r == 0:
                                    victim = q
                                    break
                                r -= 1
                        slot_remove(&slots[0], &nres, victim)
                        res[victim] = 0
                        ev_t[nev] = t; ev_p[nev] = victim; nev += 1
                    slot_insert(&slots[0], &nres, p)
                    res[p] = 1
                mark_ep[p] = ep
                bitv[p] = b
                if b == 1:
                    slot_remove(&slots[0], &nres, p)
                    res[p] = 0
                    ev_t[nev] = t; ev_p[nev] = p; nev += 1

            else:  # MARK, MARK_PREDICT, MARK_PREDICT_DET
                if fault:
                    flags[t] = 1
                    if nres == k:
                        cond = True
                        for i in range(nres):
                            if mark_ep[slots[i]] != ep:
                                cond = False
                                break
                        if cond:
                            ep += 1
                        victim = -1
                        if code != MARK:
                            m = 0
                            for i in range(nres):
                                q = slots[i]
                                if mark_ep[q] != ep and bitv[q] == 1:
                                    m += 1
                            if m > 0:
                                if code == MARK_PREDICT_DET:
                                    best = -1
                                    for i in range(nres):
                                        q = slots[i]
                                        if mark_ep[q] != ep and bitv[q] == 1:
                                            if best < 0 or stamp[q] < best:
                                                victim = q
                                                best = stamp[q]
                                else:
                                    r = rng_below(&rng, m)
                                    for i in range(nres):
                                        q = slots[i]
                                        if mark_ep[q] != ep and bitv[q] == 1:
                                            if r == 0:
                                                victim = q
                                                break
                                            r -= 1
                        if victim < 0:
                            m = 0
                            for i in range(nres):
                                if mark_ep[slots[i]] != ep:
                                    m += 1
                            r = rng_below(&rng, m)
                            for i in range(nres):
                                q = slots[i]
                                if mark_ep[q] != ep:
                                    if r == 0:
                                        victim = q
                                        break
                                    r -= 1
                        slot_remove(&slots[0], &nres, victim)
                        res[victim] = 0
                        ev_t[nev] = t; ev_p[nev] = victim; nev += 1
                    slot_insert(&slots[0], &nres, p)
                    res[p] = 1
                mark_ep[p] = ep
                bitv[p] = b
                stamp[p] = t

    if broken:
        from .policies import PolicyInvariantError
        raise PolicyInvariantError(f"mark0: full cache without unmarked S-page at t={t}")
    return flags_a, ev_t_a[:nev].copy(), ev_p_a[:nev].copy()
