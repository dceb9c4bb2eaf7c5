"""Offline computations: k-phases, LFD, exhaustive OPT and ground-truth bits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import RunReport, Setup, Trace, TraceError


@dataclass(frozen=True, eq=False)
class PhasePartition:
    """Greedy left-to-right split into maximal runs of at most k distinct pages."""

    phase_starts: np.ndarray
    n: int

    @property
    def count(self) -> int:
        return len(self.phase_starts)

    @property
    def phase_ends(self) -> np.ndarray:
        return np.append(self.phase_starts[1:], self.n)

    @property
    def phase_index(self) -> np.ndarray:
        """Phase number of every request index."""
        idx = np.zeros(self.n, dtype=np.int64)
        idx[self.phase_starts[1:]] = 1
        return np.cumsum(idx)

    def phase_of(self, i: int) -> int:
        return int(np.searchsorted(self.phase_starts, i, side="right") - 1)

    def bounds(self):
        return list(zip(self.phase_starts.tolist(), self.phase_ends.tolist()))

    def lengths(self) -> np.ndarray:
        return self.phase_ends - self.phase_starts


def k_phase_partition(requests, k: int) -> PhasePartition:
    if k < 1:
        raise ValueError("k must be positive")
    if isinstance(requests, Trace):
        ids, npages = requests.ids, requests.num_pages
    else:
        raw = np.asarray(requests, dtype=np.int64)
        universe, ids = np.unique(raw, return_inverse=True)
        ids, npages = np.ascontiguousarray(ids.reshape(-1), dtype=np.int64), len(universe)
    if len(ids) == 0:
        raise ValueError("cannot partition an empty request sequence")
    starts = np.asarray(kernels.phase_starts(ids, k, npages), dtype=np.int64)
    return PhasePartition(starts, len(ids))


def phase_page_sets(trace: Trace, partition: PhasePartition | None = None) -> list[set]:
    """Distinct interned ids of each phase."""
    partition = partition or k_phase_partition(trace, trace.k)
    ids = trace.ids
    return [set(np.unique(ids[s:e]).tolist()) for s, e in partition.bounds()]


def new_page_counts(trace: Trace, partition: PhasePartition | None = None) -> np.ndarray:
    """Pages of each phase not requested in the previous one (all pages of phase 0).

    For a marking algorithm started on an empty cache this is the number of
    pages absent from the cache when the phase begins.
    """
    sets = phase_page_sets(trace, partition)
    counts = [len(sets[0])]
    counts += [len(cur - prev) for prev, cur in zip(sets, sets[1:])]
    return np.asarray(counts, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class LfdSchedule:
    opt_cost: int
    evicted_before_reuse: np.ndarray


def lfd_run(trace: Trace) -> tuple[LfdSchedule, RunReport]:
    """Run Belady's rule; predictions are ignored.

    Among pages never requested again the smallest id is evicted first, which
    fixes the ground truth derived from this run.
    """
    trace.check()
    ids = trace.ids
    nxt = kernels.next_use(ids)
    faults, ebr, times, pages = kernels.lfd(ids, trace.k, trace.num_pages, nxt)
    flags = np.asarray(faults, dtype=bool)
    ebr = np.asarray(ebr, dtype=bool)
    ebr.setflags(write=False)
    report = RunReport(
        fault_flags=flags,
        eviction_times=np.asarray(times, dtype=np.int64),
        eviction_pages=trace.universe[np.asarray(pages, dtype=np.int64)],
        policy="lfd",
    )
    return LfdSchedule(int(flags.sum()), ebr), report


def opt_cost(trace: Trace) -> int:
    return lfd_run(trace)[0].opt_cost


class InstanceTooLarge(ValueError):
    pass


def brute_force_opt(
    trace: Trace,
    max_n: int = 20,
    max_pages: int = 7,
    max_k: int = 4,
    max_states: int = 10**7,
) -> int:
    """Exact minimum fault count by dynamic programming over cache contents.

    States are sets of resident pages (bitmasks over interned ids) after each
    request.  Only demand paging is explored: a hit keeps the cache, a fault
    loads the page, evicting any single resident page when the cache is full.
    Every schedule can be made demand-driven without extra loads, so the
    minimum is exact.
    """
    trace.check()
    n, k, npages = len(trace), trace.k, trace.num_pages
    if n > max_n or npages > max_pages or k > max_k:
        raise InstanceTooLarge(
            f"n={n}, pages={npages}, k={k} exceeds limits n<={max_n}, pages<={max_pages}, k<={max_k}"
        )
    layer = {0: 0}
    visited = 0
    for p in trace.ids.tolist():
        bit = 1 << p
        nxt: dict = {}
        for state, cost in layer.items():
            if state & bit:
                options = ((state, cost),)
            elif bin(state).count("1") < k:
                options = ((state | bit, cost + 1),)
            else:
                options = tuple(
                    ((state & ~(1 << q)) | bit, cost + 1)
                    for q in range(npages)
                    if state >> q & 1
                )
            for s, c in options:
                if c < nxt.get(s, n + 1):
                    nxt[s] = c
        visited += len(nxt)
        if visited > max_states:
            raise InstanceTooLarge(f"more than {max_states} DP states")
        layer = nxt
    return min(layer.values())


@dataclass(frozen=True, eq=False)
class GroundTruth:
    bits: np.ndarray
    countable: np.ndarray
    setup: Setup

    def __len__(self):
        return len(self.bits)


def _mask_prologue(countable: np.ndarray, trace: Trace, ignore_prefix: int | None):
    m = trace.prologue if ignore_prefix is None else ignore_prefix
    if m:
        countable[:m] = False
    return countable


def ground_truth_discard(trace: Trace, ignore_prefix: int | None = None) -> GroundTruth:
    """Bit 1 iff LFD evicts the page after this request and before its next one.

    Indices inside a declared warm-up prologue are marked uncountable.
    """
    schedule, _ = lfd_run(trace)
    bits = schedule.evicted_before_reuse.astype(np.uint8)
    countable = _mask_prologue(np.ones(len(trace), dtype=bool), trace, ignore_prefix)
    return GroundTruth(bits, countable, Setup.DISCARD)


def ground_truth_phase(trace: Trace, ignore_prefix: int | None = None) -> GroundTruth:
    """Bit 0 iff the page is requested again in the following k-phase.

    Only the last request of a page inside a phase counts, and nothing in the
    final phase counts; final-phase bits are stored as 0.
    """
    trace.check()
    n = len(trace)
    bits = np.zeros(n, dtype=np.uint8)
    countable = np.zeros(n, dtype=bool)
    if n == 0:
        return GroundTruth(bits, countable, Setup.PHASE)
    partition = k_phase_partition(trace, trace.k)
    ids = trace.ids
    nxt = kernels.next_use(ids)
    sets = phase_page_sets(trace, partition)
    members = np.zeros(trace.num_pages, dtype=bool)
    bounds = partition.bounds()
    for j, (s, e) in enumerate(bounds[:-1]):
        following = list(sets[j + 1])
        members[following] = True
        bits[s:e] = ~members[ids[s:e]]
        members[following] = False
        # last request of its page within this phase
        countable[s:e] = nxt[s:e] >= e
    return GroundTruth(bits, _mask_prologue(countable, trace, ignore_prefix), Setup.PHASE)


def ground_truth(trace: Trace, setup: Setup | str, ignore_prefix: int | None = None) -> GroundTruth:
    setup = Setup.parse(setup)
    if setup is Setup.DISCARD:
        return ground_truth_discard(trace, ignore_prefix)
    if setup is Setup.PHASE:
        return ground_truth_phase(trace, ignore_prefix)
    raise TraceError("ground truth needs the discard or phase setup")


@dataclass(frozen=True)
class PhaseErrorTally:
    """Counts for one phase measured against the cache held at its start."""

    phase: int
    new_pages: int
    unrequested_ones: int
    unrequested_zeros: int


def phase_error_tallies(trace: Trace, predictions=None) -> list[PhaseErrorTally]:
    """Per non-first phase: new pages c, unrequested 1-pages l and 0-pages z.

    The cache at a phase start is taken to be the page set of the previous
    phase (the content of any marking algorithm); each page's bit is its last
    prediction in that phase.  For a phase with k distinct pages, z = c - l.
    """
    preds = trace.predictions if predictions is None else np.asarray(predictions, dtype=np.uint8)
    partition = k_phase_partition(trace, trace.k)
    sets = phase_page_sets(trace, partition)
    ids = trace.ids.tolist()
    bounds = partition.bounds()
    tallies = []
    for j in range(1, len(bounds)):
        ps, s = bounds[j - 1]
        last_bit = {}
        for i in range(ps, s):
            last_bit[ids[i]] = int(preds[i])
        cache = sets[j - 1]
        cur = sets[j]
        missing = cache - cur
        tallies.append(
            PhaseErrorTally(
                j,
                len(cur - cache),
                sum(1 for p in missing if last_bit[p] == 1),
                sum(1 for p in missing if last_bit[p] == 0),
            )
        )
    return tallies
