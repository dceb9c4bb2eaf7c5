"""Noise models over ground-truth bits and setup-aware error counting."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .model import Setup
from .oracle import GroundTruth

NOISE_KINDS = ("flip_each_zero", "flip_each_one", "flip_exactly", "constant", "replace_all")


class NoiseError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """How to corrupt ground truth.

    ``flip_each_zero`` / ``flip_each_one`` flip every truth-0 (truth-1) bit
    independently with ``prob``.  ``flip_exactly`` plants exactly ``count0``
    wrong 0-predictions and ``count1`` wrong 1-predictions at countable
    indices chosen uniformly without replacement.  ``constant`` and
    ``replace_all`` ignore the truth altogether.
    """

    kind: str
    prob: float = 0.0
    count0: int = 0
    count1: int = 0
    bit: int = 0
    bits: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise NoiseError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.prob <= 1.0:
            raise NoiseError(f"probability {self.prob} outside [0, 1]")
        if self.count0 < 0 or self.count1 < 0:
            raise NoiseError("flip counts must be non-negative")
        if self.bit not in (0, 1):
            raise NoiseError("constant bit must be 0 or 1")

    @classmethod
    def flip_each_zero(cls, prob, seed=0):
        return cls("flip_each_zero", prob=prob, seed=seed)

    @classmethod
    def flip_each_one(cls, prob, seed=0):
        return cls("flip_each_one", prob=prob, seed=seed)

    @classmethod
    def flip_exactly(cls, count0, count1, seed=0):
        return cls("flip_exactly", count0=count0, count1=count1, seed=seed)

    @classmethod
    def constant(cls, bit):
        return cls("constant", bit=bit)

    @classmethod
    def replace_all(cls, bits):
        return cls("replace_all", bits=tuple(int(b) for b in bits))

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if v not in (None, 0, 0.0) or k == "kind"}
        if self.bits is not None:
            d["bits"] = list(self.bits)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        d = dict(d)
        if "bits" in d and d["bits"] is not None:
            d["bits"] = tuple(d["bits"])
        unknown = set(d) - {"kind", "prob", "count0", "count1", "bit", "bits", "seed"}
        if unknown:
            raise NoiseError(f"unknown noise fields: {sorted(unknown)}")
        return cls(**d)


def apply_noise(truth: GroundTruth, spec: NoiseSpec) -> np.ndarray:
    bits = np.asarray(truth.bits, dtype=np.uint8)
    n = len(bits)
    if spec.kind == "constant":
        return np.full(n, spec.bit, dtype=np.uint8)
    if spec.kind == "replace_all":
        out = np.asarray(spec.bits, dtype=np.uint8)
        if len(out) != n:
            raise NoiseError(f"replacement has {len(out)} bits, truth has {n}")
        return out.copy()
    rng = np.random.default_rng(spec.seed)
    out = bits.copy()
    if spec.kind == "flip_each_zero":
        out[(bits == 0) & (rng.random(n) < spec.prob)] = 1
    elif spec.kind == "flip_each_one":
        out[(bits == 1) & (rng.random(n) < spec.prob)] = 0
    else:
        countable = np.asarray(truth.countable, dtype=bool)
        # a wrong 0-prediction sits where the truth is 1, and vice versa
        for want, truth_value in ((spec.count0, 1), (spec.count1, 0)):
            pool = np.flatnonzero(countable & (bits == truth_value))
            if want > len(pool):
                raise NoiseError(
                    f"cannot plant {want} errors: only {len(pool)} countable truth-{truth_value} positions"
                )
            if want:
                chosen = rng.choice(pool, size=want, replace=False)
                out[chosen] = 1 - truth_value
    return out


@dataclass(frozen=True, eq=False)
class ErrorReport:
    eta0_flags: np.ndarray = field(repr=False)
    eta1_flags: np.ndarray = field(repr=False)

    @property
    def eta0(self) -> int:
        return int(np.count_nonzero(self.eta0_flags))

    @property
    def eta1(self) -> int:
        return int(np.count_nonzero(self.eta1_flags))

    @property
    def mismatch_flags(self) -> np.ndarray:
        return self.eta0_flags | self.eta1_flags

    def __repr__(self):
        return f"ErrorReport(eta0={self.eta0}, eta1={self.eta1})"


def count_errors(predictions, truth: GroundTruth, setup: Setup | str | None = None) -> ErrorReport:
    """Count wrong 0- and 1-predictions at the indices that count for the setup."""
    if setup is not None and Setup.parse(setup) is not truth.setup:
        raise NoiseError(f"truth was built for {truth.setup.value}, not {Setup.parse(setup).value}")
    p = np.asarray(predictions, dtype=np.uint8)
    if len(p) != len(truth.bits):
        raise NoiseError(f"{len(p)} predictions vs {len(truth.bits)} truth bits")
    wrong = (p != truth.bits) & truth.countable
    return ErrorReport(wrong & (p == 0), wrong & (p == 1))
