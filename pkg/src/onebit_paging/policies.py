"""Online eviction policies behind a serve-one-request interface.

The classes here are the reference semantics.  :func:`run_policy` replays a
whole trace through the compiled kernel when it is available; the kernel is
required to reproduce these classes exactly (same RNG draws, same victims).

Ties are broken by ascending page id everywhere, and random choices are made
by index into the sorted candidate list.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .model import CacheSnapshot, RunReport, Trace, TraceError
from .rng import SplitMix64


class PolicyInvariantError(AssertionError):
    """Internal consistency failure inside a policy (indicates a bug)."""


class Step(NamedTuple):
    fault: bool
    evicted: tuple


class Policy:
    name = ""
    randomized = False
    uses_predictions = False

    def __init__(self, k: int, seed: int | None = None):
        if k < 1:
            raise ValueError("cache size must be positive")
        self.k = k
        self.seed = seed
        self.rng = SplitMix64(seed or 0) if self.randomized else None
        self.resident: set = set()
        self.bits: dict = {}
        self.time = 0

    @property
    def full(self) -> bool:
        return len(self.resident) >= self.k

    def serve(self, page, bit: int = 0) -> Step:
        step = self._serve(page, int(bit))
        self.time += 1
        return step

    def _serve(self, page, bit: int) -> Step:
        raise NotImplementedError

    def _marked(self, page) -> bool:
        return False

    def snapshot(self) -> CacheSnapshot:
        return CacheSnapshot(
            frozenset(self.resident),
            {p: self._marked(p) for p in self.resident},
            {p: self.bits.get(p, 0) for p in self.resident},
        )


class LRU(Policy):
    name = "lru"

    def __init__(self, k, seed=None):
        super().__init__(k, seed)
        self._order: OrderedDict = OrderedDict()

    def _serve(self, page, bit):
        self.bits[page] = bit
        if page in self._order:
            self._order.move_to_end(page)
            return Step(False, ())
        evicted = ()
        if self.full:
            victim, _ = self._order.popitem(last=False)
            self.resident.discard(victim)
            evicted = (victim,)
        self._order[page] = None
        self.resident.add(page)
        return Step(True, evicted)


class FIFO(LRU):
    name = "fifo"

    def _serve(self, page, bit):
        self.bits[page] = bit
        if page in self._order:
            return Step(False, ())
        evicted = ()
        if self.full:
            victim, _ = self._order.popitem(last=False)
            self.resident.discard(victim)
            evicted = (victim,)
        self._order[page] = None
        self.resident.add(page)
        return Step(True, evicted)


class _Marking(Policy):
    """Shared phase bookkeeping for Mark and Mark&Predict.

    A new phase starts on a fault that finds the cache full with every
    resident page marked; starting from an empty cache this reproduces the
    greedy k-phase partition of the request sequence.
    """

    randomized = True

    def __init__(self, k, seed=None):
        super().__init__(k, seed)
        self.marked: set = set()
        self.phase_starts = [0]
        self.new_page_counts = [0]
        self._old: set = set()

    def _marked(self, page):
        return page in self.marked

    def _choose(self, unmarked: list):
        return self.rng.choice(sorted(unmarked))

    def _serve(self, page, bit):
        evicted = ()
        fault = page not in self.resident
        if fault:
            if self.full:
                if self.resident <= self.marked:
                    self.marked.clear()
                    self._old = set(self.resident)
                    self.phase_starts.append(self.time)
                    self.new_page_counts.append(0)
                victim = self._choose([p for p in self.resident if p not in self.marked])
                self.resident.discard(victim)
                evicted = (victim,)
            self.resident.add(page)
        if page not in self.marked and page not in self._old:
            self.new_page_counts[-1] += 1
        self.marked.add(page)
        self.bits[page] = bit
        return Step(fault, evicted)


class Mark(_Marking):
    name = "mark"


class MarkAndPredict(_Marking):
    """Marking algorithm that prefers unmarked pages predicted 1 as victims.

    With ``deterministic=True`` the least recently used unmarked 1-page is
    evicted instead of a uniformly random one.  Pages without a recorded bit
    count as 0-pages.
    """

    uses_predictions = True

    def __init__(self, k, seed=None, deterministic: bool = False):
        super().__init__(k, seed)
        self.deterministic = deterministic
        self.name = "mark-predict-det" if deterministic else "mark-predict"
        self.last_use: dict = {}

    def _choose(self, unmarked):
        ones = sorted(p for p in unmarked if self.bits.get(p, 0) == 1)
        if ones:
            if self.deterministic:
                return min(ones, key=self.last_use.__getitem__)
            return self.rng.choice(ones)
        return self.rng.choice(sorted(unmarked))

    def _serve(self, page, bit):
        step = super()._serve(page, bit)
        self.last_use[page] = self.time
        return step


class FlushOnAllZero(Policy):
    """On a fault, evict the smallest 1-page; if every page is a 0-page, flush."""

    name = "flush0"
    uses_predictions = True

    def __init__(self, k, seed=None):
        super().__init__(k, seed)
        self.flushes: list[int] = []

    def _serve(self, page, bit):
        evicted = ()
        fault = page not in self.resident
        if fault:
            if self.full:
                ones = [p for p in self.resident if self.bits[p] == 1]
                if ones:
                    evicted = (min(ones),)
                else:
                    evicted = tuple(sorted(self.resident))
                    self.flushes.append(self.time)
                self.resident.difference_update(evicted)
            self.resident.add(page)
        self.bits[page] = bit
        return Step(fault, evicted)


@dataclass
class Mark0Phase:
    start: int
    cache: dict  # page -> time of its most recent request when the phase began
    full_cache_evictions: int = 0
    replacement_evictions: int = 0

    @property
    def zero_evictions(self) -> int:
        return self.full_cache_evictions + self.replacement_evictions


class Mark0(Policy):
    """Evicts 1-pages right after serving them and random unmarked S-pages otherwise.

    ``S`` is the cache content frozen at the start of each phase.  A phase
    begins on a fault that finds the cache full with every S-page in cache
    marked (vacuously true for the empty initial ``S``).
    """

    name = "mark0"
    randomized = True
    uses_predictions = True

    def __init__(self, k, seed=None):
        super().__init__(k, seed)
        self.S: set = set()
        self.marked: set = set()
        self.last_request: dict = {}
        self.phases: list[Mark0Phase] = [Mark0Phase(0, {})]

    def _marked(self, page):
        return page in self.marked

    def _unmarked_s_in_cache(self):
        return sorted(p for p in self.resident if p in self.S and p not in self.marked)

    def _serve(self, page, bit):
        evicted = []
        fault = page not in self.resident
        if fault:
            if self.full and all(p in self.marked for p in self.resident if p in self.S):
                self.S = set(self.resident)
                self.marked.clear()
                self.phases.append(
                    Mark0Phase(self.time, {p: self.last_request[p] for p in self.S})
                )
            phase = self.phases[-1]
            if page in self.S and page not in self.marked:
                candidates = self._unmarked_s_in_cache()
                if candidates:
                    # happens even when the cache has free slots
                    victim = self.rng.choice(candidates)
                    self.resident.discard(victim)
                    evicted.append(victim)
                    phase.replacement_evictions += 1
            if self.full:
                candidates = self._unmarked_s_in_cache()
                if not candidates:
                    raise PolicyInvariantError(
                        f"mark0: full cache without unmarked S-page at t={self.time}"
                    )
                victim = self.rng.choice(candidates)
                self.resident.discard(victim)
                evicted.append(victim)
                phase.full_cache_evictions += 1
            self.resident.add(page)
        self.marked.add(page)
        self.bits[page] = bit
        self.last_request[page] = self.time
        if bit == 1:
            self.resident.discard(page)
            evicted.append(page)
        return Step(fault, tuple(evicted))


POLICY_NAMES = ("lru", "fifo", "mark", "flush0", "mark0", "mark-predict", "mark-predict-det")
POLICY_CODES = {name: code for code, name in enumerate(POLICY_NAMES)}
RANDOMIZED = frozenset({"mark", "mark0", "mark-predict", "mark-predict-det"})
PREDICTION_AWARE = frozenset({"flush0", "mark0", "mark-predict", "mark-predict-det"})


def make_policy(name: str, k: int, seed: int | None = None) -> Policy:
    if name == "lru":
        return LRU(k)
    if name == "fifo":
        return FIFO(k)
    if name == "mark":
        return Mark(k, seed)
    if name == "flush0":
        return FlushOnAllZero(k)
    if name == "mark0":
        return Mark0(k, seed)
    if name == "mark-predict":
        return MarkAndPredict(k, seed)
    if name == "mark-predict-det":
        return MarkAndPredict(k, seed, deterministic=True)
    raise KeyError(f"unknown policy {name!r}; known: {', '.join(POLICY_NAMES)}")


def run_policy(name: str, trace: Trace, seed: int | None = None) -> RunReport:
    """Replay ``trace`` through policy ``name`` from an empty cache."""
    if name not in POLICY_CODES:
        raise KeyError(f"unknown policy {name!r}; known: {', '.join(POLICY_NAMES)}")
    trace.check()
    if name in PREDICTION_AWARE and trace.setup.value == "none":
        raise TraceError(f"policy {name} needs a trace with a prediction setup")
    seed = (seed or 0) if name in RANDOMIZED else None
    flags, times, pages = kernels.simulate(
        POLICY_CODES[name], trace.ids, trace.predictions, trace.k, trace.num_pages, seed or 0
    )
    return RunReport(
        fault_flags=np.asarray(flags, dtype=bool),
        eviction_times=np.asarray(times, dtype=np.int64),
        eviction_pages=trace.universe[np.asarray(pages, dtype=np.int64)],
        rng_seed=seed,
        policy=name,
    )
