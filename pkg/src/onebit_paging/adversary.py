"""Lower-bound instances and random evaluation traces.

The randomized instances assume a cache that starts full.  They begin with a
warm-up of pages ``1..k`` (bit 0) whose length is recorded in the label as
``prologue=k``; ground-truth builders treat those indices as uncountable.
"""

from __future__ import annotations

import numpy as np

from .model import RunReport, Setup, Trace
from .policies import Policy, make_policy


class AdversaryError(ValueError):
    pass


def _warmup(k: int):
    return np.arange(1, k + 1, dtype=np.int64), np.zeros(k, dtype=np.uint8)


def adaptive_adversary_run(
    policy: Policy | str, k: int, n: int, bit: int = 0, setup: Setup | str = Setup.DISCARD
) -> tuple[Trace, RunReport]:
    """Always request a page of ``1..k+1`` that the policy does not hold.

    The first k requests are ``1..k``.  Afterwards the smallest page absent
    from the policy's cache is requested (unique once the cache is full).
    """
    if isinstance(policy, str):
        policy = make_policy(policy, k)
    if policy.randomized:
        raise AdversaryError(f"{policy.name} is randomized; the adaptive instance targets deterministic policies")
    if policy.k != k:
        raise AdversaryError(f"policy has cache size {policy.k}, expected {k}")
    if k < 1 or n < k:
        raise AdversaryError("need k >= 1 and n >= k")
    requests = np.empty(n, dtype=np.int64)
    flags = np.zeros(n, dtype=bool)
    ev_t, ev_p = [], []
    universe = range(1, k + 2)
    for t in range(n):
        if t < k:
            page = t + 1
        else:
            held = policy.snapshot().resident
            page = next(p for p in universe if p not in held)
        requests[t] = page
        fault, evicted = policy.serve(page, bit)
        flags[t] = fault
        for q in evicted:
            ev_t.append(t)
            ev_p.append(q)
    trace = Trace(k, requests, np.full(n, bit, dtype=np.uint8), setup, f"adaptive policy={policy.name} k={k} n={n} bit={bit}")
    report = RunReport(flags, np.asarray(ev_t, dtype=np.int64), np.asarray(ev_p, dtype=np.int64), None, policy.name)
    return trace, report


def uniform_random_instance(
    k: int, n: int, seed: int, bit: int = 0, setup: Setup | str = Setup.DISCARD
) -> Trace:
    """``n`` i.i.d. uniform requests over pages ``1..k+1`` after the warm-up."""
    if k < 2 or n < 1:
        raise AdversaryError("need k >= 2 and n >= 1")
    rng = np.random.default_rng(seed)
    head, head_bits = _warmup(k)
    body = rng.integers(1, k + 2, size=n, dtype=np.int64)
    requests = np.concatenate([head, body])
    preds = np.concatenate([head_bits, np.full(n, bit, dtype=np.uint8)])
    return Trace(k, requests, preds, setup, f"uniform k={k} n={n} seed={seed} bit={bit} prologue={k}")


def block_instance(
    k: int, phases: int, block_repeats: int | None = None, seed: int = 0, setup: Setup | str = Setup.DISCARD
) -> Trace:
    """Nested blocks ``p0 s1``, ``p0 s1 s2``, ... per phase, each repeated.

    ``p0`` is the page missing from the optimal cache, ``s`` a random
    arrangement of k-1 of the k cached pages.  All bits are 0 except the k
    requests of the final repetition of the last block, which carry 1.
    """
    if k < 2:
        raise AdversaryError("block instance needs k >= 2")
    if phases < 1:
        raise AdversaryError("need at least one phase")
    repeats = k + 1 if block_repeats is None else block_repeats
    if repeats < 2:
        raise AdversaryError("block_repeats must be at least 2")
    rng = np.random.default_rng(seed)
    head, head_bits = _warmup(k)
    chunks, bit_chunks = [head], [head_bits]
    cache = np.arange(1, k + 1, dtype=np.int64)
    missing = k + 1
    for _ in range(phases):
        order = rng.permutation(cache)
        sigma, left_out = order[: k - 1], int(order[k - 1])
        p0 = missing
        for i in range(1, k):
            block = np.concatenate([[p0], sigma[:i]])
            chunks.append(np.tile(block, repeats))
            bits = np.zeros(len(block) * repeats, dtype=np.uint8)
            if i == k - 1:
                bits[-len(block):] = 1
            bit_chunks.append(bits)
        # the optimal cache now holds the last block; the left-out page is next p0
        cache = np.sort(np.concatenate([[p0], sigma]))
        missing = left_out
    return Trace(
        k,
        np.concatenate(chunks),
        np.concatenate(bit_chunks),
        setup,
        f"blocks k={k} phases={phases} repeats={repeats} seed={seed} prologue={k}",
    )


def three_page_round_instance(
    k: int, m: int, seed: int, setup: Setup | str = Setup.DISCARD
) -> Trace:
    """``m`` rounds: one of pages 1..3 (bit 1), then pages 4..k+1 (bit 0).

    Each round has k-1 requests; with ``k == 3`` the tail is page 4 alone.
    """
    if k < 3:
        raise AdversaryError("three-page rounds need k >= 3")
    if m < 1:
        raise AdversaryError("need at least one round")
    rng = np.random.default_rng(seed)
    head, head_bits = _warmup(k)
    rounds = np.empty((m, k - 1), dtype=np.int64)
    rounds[:, 0] = rng.integers(1, 4, size=m)
    rounds[:, 1:] = np.arange(4, k + 2)
    bits = np.zeros((m, k - 1), dtype=np.uint8)
    bits[:, 0] = 1
    return Trace(
        k,
        np.concatenate([head, rounds.reshape(-1)]),
        np.concatenate([head_bits, bits.reshape(-1)]),
        setup,
        f"rounds k={k} m={m} seed={seed} prologue={k}",
    )


def round_robin(k: int, n: int, pages: int | None = None, setup: Setup | str = Setup.DISCARD) -> Trace:
    """Cyclic requests ``1, 2, ..., pages, 1, ...`` (default ``pages = k+1``)."""
    pages = k + 1 if pages is None else pages
    requests = np.arange(n, dtype=np.int64) % pages + 1
    return Trace(k, requests, np.zeros(n, dtype=np.uint8), setup, f"roundrobin k={k} n={n} pages={pages}")


def random_trace(
    k: int, n: int, num_pages: int, seed: int, zipf: float = 0.0, setup: Setup | str = Setup.DISCARD
) -> Trace:
    """i.i.d. requests over ``0..num_pages-1``; ``zipf > 0`` skews towards low ids."""
    if num_pages < 1 or n < 1:
        raise AdversaryError("need num_pages >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    if zipf > 0:
        weights = 1.0 / np.arange(1, num_pages + 1) ** zipf
        requests = rng.choice(num_pages, size=n, p=weights / weights.sum())
    else:
        requests = rng.integers(0, num_pages, size=n)
    return Trace(k, requests.astype(np.int64), np.zeros(n, dtype=np.uint8), setup,
                 f"random k={k} n={n} pages={num_pages} zipf={zipf} seed={seed}")
