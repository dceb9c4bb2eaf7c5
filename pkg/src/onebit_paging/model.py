"""Core value types: traces, run reports and bound parameters."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np


class TraceError(ValueError):
    """A trace violates one of its structural invariants."""


class Setup(str, enum.Enum):
    DISCARD = "discard"
    PHASE = "phase"
    NONE = "none"

    @classmethod
    def parse(cls, value: "Setup | str") -> "Setup":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise TraceError(f"unknown setup {value!r}") from None


_PROLOGUE_RE = re.compile(r"(?:^|\s)prologue=(\d+)(?:\s|$)")


@dataclass(frozen=True, eq=False)
class Trace:
    """A request sequence with one prediction bit per request.

    ``requests`` holds raw page ids (non-negative integers).  Construction does
    not validate; call :func:`validate_trace` or :meth:`check`.
    """

    cache_size: int
    requests: np.ndarray
    predictions: np.ndarray
    setup: Setup = Setup.NONE
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "requests", np.asarray(self.requests, dtype=np.int64))
        object.__setattr__(self, "predictions", np.asarray(self.predictions, dtype=np.uint8))
        object.__setattr__(self, "setup", Setup.parse(self.setup))
        self.requests.setflags(write=False)
        self.predictions.setflags(write=False)

    def __len__(self) -> int:
        return len(self.requests)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.cache_size == other.cache_size
            and self.setup == other.setup
            and self.label == other.label
            and np.array_equal(self.requests, other.requests)
            and np.array_equal(self.predictions, other.predictions)
        )

    __hash__ = None

    @property
    def k(self) -> int:
        return self.cache_size

    @cached_property
    def _interning(self):
        universe, ids = np.unique(self.requests, return_inverse=True)
        ids = np.ascontiguousarray(ids.reshape(-1), dtype=np.int64)
        ids.setflags(write=False)
        return universe, ids

    @property
    def universe(self) -> np.ndarray:
        """Sorted distinct raw page ids; interned id ``j`` is ``universe[j]``."""
        return self._interning[0]

    @property
    def ids(self) -> np.ndarray:
        """Dense interned ids, order-preserving with respect to raw ids."""
        return self._interning[1]

    @property
    def num_pages(self) -> int:
        return len(self.universe)

    @property
    def prologue(self) -> int:
        """Length of the warm-up prefix declared in the label (``prologue=N``)."""
        m = _PROLOGUE_RE.search(self.label)
        return int(m.group(1)) if m else 0

    def with_predictions(self, predictions, setup: "Setup | str | None" = None) -> "Trace":
        return Trace(
            self.cache_size,
            self.requests,
            predictions,
            self.setup if setup is None else setup,
            self.label,
        )

    def check(self) -> "Trace":
        verdict = validate_trace(self)
        if not verdict.ok:
            raise TraceError(verdict.message)
        return self


class Verdict(NamedTuple):
    ok: bool
    message: str = ""
    index: int | None = None


def validate_trace(trace: Trace) -> Verdict:
    if not isinstance(trace.cache_size, (int, np.integer)) or trace.cache_size < 1:
        return Verdict(False, f"cache_size must be a positive integer, got {trace.cache_size!r}")
    n, m = len(trace.requests), len(trace.predictions)
    if n != m:
        return Verdict(False, f"length mismatch: {n} requests vs {m} predictions", min(n, m))
    if n:
        neg = np.flatnonzero(trace.requests < 0)
        if neg.size:
            i = int(neg[0])
            return Verdict(False, f"negative page id at index {i}", i)
        bad = np.flatnonzero(trace.predictions > 1)
        if bad.size:
            i = int(bad[0])
            return Verdict(False, f"prediction bit not in {{0,1}} at index {i}", i)
    return Verdict(True)


@dataclass
class RunReport:
    """Outcome of one policy on one trace.  Eviction pages are raw ids."""

    fault_flags: np.ndarray
    eviction_times: np.ndarray
    eviction_pages: np.ndarray
    rng_seed: int | None = None
    policy: str = ""

    @property
    def faults(self) -> int:
        return int(np.count_nonzero(self.fault_flags))

    @property
    def evictions(self) -> int:
        return len(self.eviction_times)

    @property
    def eviction_log(self) -> list[tuple[int, int]]:
        return list(zip(self.eviction_times.tolist(), self.eviction_pages.tolist()))


@dataclass(frozen=True)
class BoundParams:
    """Coefficients of ``ALG <= alpha*OPT + beta*eta0 + gamma*eta1 + b``."""

    alpha: float
    beta: float
    gamma: float
    b: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "b"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v!r}")

    def bound(self, opt: float, eta0: float, eta1: float) -> float:
        return self.alpha * opt + self.beta * eta0 + self.gamma * eta1 + self.b


def harmonic(k: int) -> float:
    return math.fsum(1.0 / i for i in range(1, k + 1))


@dataclass(frozen=True)
class CacheSnapshot:
    """Read-only copy of a policy's cache: resident pages with (marked, bit)."""

    resident: frozenset
    marked: dict = field(default_factory=dict)
    bits: dict = field(default_factory=dict)

    def __contains__(self, page) -> bool:
        return page in self.resident

    def __len__(self) -> int:
        return len(self.resident)
