"""Batch experiments over seeds and (alpha, beta, gamma)-bound checks."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import adversary
from .model import BoundParams, Setup, Trace, harmonic
from .oracle import ground_truth, opt_cost
from .policies import POLICY_NAMES, RANDOMIZED, run_policy
from .predictions import NoiseSpec, apply_noise, count_errors
from .rng import derive_seed
from .traceio import read_trace


class SpecError(ValueError):
    pass


def gamma_reference(x: float) -> float:
    """Coefficient on eta1 for the large-eta1 Mark&Predict guarantee, x = eta1/OPT."""
    return 2.0 / x * (math.log(2 * x + 1) + 1)


def markpredict_refined_bound(opt: float, eta0: float, eta1: float, k: int, b: float = 0.0) -> float:
    """``2 (ln(2 eta1/OPT + 1) + 2) OPT + H_k eta0 + b``."""
    if opt <= 0:
        return harmonic(k) * eta0 + b
    return 2 * (math.log(2 * eta1 / opt + 1) + 2) * opt + harmonic(k) * eta0 + b


def guarantee(policy: str, k: int, b: float | None = None) -> BoundParams:
    """Proven (alpha, beta, gamma) for each policy, with ``b = 2k`` unless given."""
    b = 2 * k if b is None else b
    hk = harmonic(k)
    table = {
        "lru": (k, 0, 0),
        "fifo": (k, 0, 0),
        "mark": (2 * hk, 0, 0),
        "flush0": (1, k - 1, 1),
        "mark0": (1, 2 * hk, 1),
        "mark-predict": (2, hk, 1),
        "mark-predict-det": (2, hk, 1),
    }
    if policy not in table:
        raise SpecError(f"unknown policy {policy!r}")
    return BoundParams(*table[policy], b)


@dataclass
class BoundCheck:
    policy: str
    params: BoundParams
    mean_alg_cost: float
    opt_cost: float
    eta0: float
    eta1: float
    stderr: float = 0.0
    tolerance_se: float = 3.0
    gamma_ref: float | None = None

    @property
    def bound(self) -> float:
        return self.params.bound(self.opt_cost, self.eta0, self.eta1)

    @property
    def slack(self) -> float:
        return self.mean_alg_cost - self.bound

    @property
    def status(self) -> str:
        if self.slack <= 0:
            return "satisfied"
        if self.slack <= self.tolerance_se * self.stderr:
            return "inconclusive"
        return "violated"

    @property
    def satisfied(self) -> bool:
        return self.status != "violated"

    @property
    def normalized_ratio(self) -> float | None:
        if self.opt_cost <= 0:
            return None
        return (self.mean_alg_cost - self.params.b) / self.opt_cost

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "gamma": self.params.gamma,
            "b": self.params.b,
            "mean_alg_cost": self.mean_alg_cost,
            "stderr": self.stderr,
            "opt": self.opt_cost,
            "eta0": self.eta0,
            "eta1": self.eta1,
            "bound": self.bound,
            "slack": self.slack,
            "status": self.status,
            "satisfied": self.satisfied,
            "normalized_ratio": self.normalized_ratio,
            "gamma_ref": self.gamma_ref,
            "tolerance_se": self.tolerance_se,
        }


def check_bound(
    mean_alg_cost: float,
    opt: float,
    eta0: float,
    eta1: float,
    params: BoundParams,
    *,
    policy: str = "",
    stderr: float = 0.0,
    tolerance_se: float = 3.0,
    with_gamma_ref: bool = False,
) -> BoundCheck:
    for name, v in (("opt", opt), ("eta0", eta0), ("eta1", eta1)):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{name} must be finite and non-negative")
    ref = None
    if with_gamma_ref and opt > 0 and eta1 > 0:
        ref = gamma_reference(eta1 / opt)
    return BoundCheck(policy, params, float(mean_alg_cost), float(opt), float(eta0), float(eta1),
                      float(stderr), tolerance_se, ref)


GENERATORS = ("uniform", "blocks", "rounds", "adaptive", "random", "roundrobin")


def build_trace(source: dict) -> Trace:
    """Load or generate the trace described by an experiment's ``trace`` entry."""
    source = dict(source)
    if "file" in source:
        return read_trace(source["file"])
    gen = source.pop("generator", None)
    setup = source.pop("setup", "discard")
    try:
        if gen == "uniform":
            return adversary.uniform_random_instance(source["k"], source["n"], source.get("seed", 0),
                                                     source.get("bit", 0), setup)
        if gen == "blocks":
            return adversary.block_instance(source["k"], source["phases"], source.get("block_repeats"),
                                            source.get("seed", 0), setup)
        if gen == "rounds":
            return adversary.three_page_round_instance(source["k"], source["m"], source.get("seed", 0), setup)
        if gen == "adaptive":
            trace, _ = adversary.adaptive_adversary_run(source.get("policy", "lru"), source["k"], source["n"],
                                                        source.get("bit", 0), setup)
            return trace
        if gen == "random":
            return adversary.random_trace(source["k"], source["n"], source["pages"], source.get("seed", 0),
                                          source.get("zipf", 0.0), setup)
        if gen == "roundrobin":
            return adversary.round_robin(source["k"], source["n"], source.get("pages"), setup)
    except KeyError as exc:
        raise SpecError(f"generator {gen!r} needs parameter {exc.args[0]!r}") from None
    raise SpecError(f"unknown trace source {gen!r}; expected a file or one of {GENERATORS}")


@dataclass
class ExperimentSpec:
    trace: dict
    setup: Setup = Setup.DISCARD
    noise: NoiseSpec | str | None = None
    policies: list = field(default_factory=lambda: ["lru"])
    trials: int = 1
    base_seed: int = 0
    bounds: list = field(default_factory=list)  # (policy, BoundParams | (a, b0, g) | None)
    tolerance_se: float = 3.0

    def __post_init__(self):
        self.setup = Setup.parse(self.setup)
        if self.setup is Setup.NONE:
            raise SpecError("experiments need the discard or phase setup")
        if self.trials < 1:
            raise SpecError("trials must be >= 1")
        unknown = [p for p in self.policies if p not in POLICY_NAMES]
        unknown += [p for p, _ in self.bounds if p not in POLICY_NAMES]
        if unknown:
            raise SpecError(f"unknown policies: {unknown}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        noise = d.get("noise")
        if isinstance(noise, dict):
            noise = NoiseSpec.from_dict(noise)
        elif noise not in (None, "perfect"):
            raise SpecError("noise must be an object, 'perfect', or null")
        bounds = []
        for entry in d.get("bounds", []):
            entry = dict(entry)
            policy = entry.pop("policy")
            if entry.get("guarantee") or not entry:
                bounds.append((policy, None))
            else:
                coeffs = (entry["alpha"], entry["beta"], entry["gamma"])
                if entry.get("b") is None:
                    bounds.append((policy, coeffs))  # b = 2k once the trace is known
                else:
                    bounds.append((policy, BoundParams(*coeffs, entry["b"])))
        policies = d.get("policies", ["lru"])
        if isinstance(policies, str):
            policies = [p.strip() for p in policies.split(",") if p.strip()]
        return cls(
            trace=d["trace"],
            setup=d.get("setup", "discard"),
            noise=noise,
            policies=list(policies),
            trials=int(d.get("trials", 1)),
            base_seed=int(d.get("base_seed", 0)),
            bounds=bounds,
            tolerance_se=float(d.get("tolerance_se", 3.0)),
        )

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class TrialRecord:
    trial: int
    seed: int | None
    faults: int
    evictions: int


@dataclass
class PolicyResult:
    policy: str
    trials: list
    checks: list = field(default_factory=list)

    @property
    def costs(self) -> np.ndarray:
        return np.asarray([t.faults for t in self.trials], dtype=float)

    @property
    def mean_cost(self) -> float:
        return float(self.costs.mean())

    @property
    def stderr(self) -> float:
        c = self.costs
        return float(c.std(ddof=1) / math.sqrt(len(c))) if len(c) > 1 else 0.0


@dataclass
class ExperimentResult:
    label: str
    k: int
    n: int
    setup: Setup
    opt: int
    eta0: int
    eta1: int
    results: list

    def by_policy(self, name: str) -> PolicyResult:
        for r in self.results:
            if r.policy == name:
                return r
        raise KeyError(name)

    def rows(self):
        for r in self.results:
            check = r.checks[0] if r.checks else None
            for t in r.trials:
                bound = check.bound if check else None
                yield {
                    "trace": self.label,
                    "policy": r.policy,
                    "trial": t.trial,
                    "seed": "" if t.seed is None else t.seed,
                    "faults": t.faults,
                    "evictions": t.evictions,
                    "opt": self.opt,
                    "eta0": self.eta0,
                    "eta1": self.eta1,
                    "bound": "" if bound is None else repr(bound),
                    "slack": "" if bound is None else repr(t.faults - bound),
                }

    def to_dict(self) -> dict:
        return {
            "trace": self.label,
            "k": self.k,
            "n": self.n,
            "setup": self.setup.value,
            "opt": self.opt,
            "eta0": self.eta0,
            "eta1": self.eta1,
            "policies": [
                {
                    "policy": r.policy,
                    "mean_cost": r.mean_cost,
                    "stderr": r.stderr,
                    "trials": [vars(t) for t in r.trials],
                    "checks": [c.to_dict() for c in r.checks],
                }
                for r in self.results
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        results = []
        for p in d["policies"]:
            trials = [TrialRecord(**t) for t in p["trials"]]
            checks = [
                BoundCheck(c["policy"], BoundParams(c["alpha"], c["beta"], c["gamma"], c["b"]),
                           c["mean_alg_cost"], c["opt"], c["eta0"], c["eta1"], c["stderr"],
                           c.get("tolerance_se", 3.0), c.get("gamma_ref"))
                for c in p.get("checks", [])
            ]
            results.append(PolicyResult(p["policy"], trials, checks))
        return cls(d["trace"], d["k"], d["n"], Setup.parse(d["setup"]), d["opt"], d["eta0"], d["eta1"], results)


def _run_trial(args):
    policy, trace, trial, seed = args
    report = run_policy(policy, trace, seed)
    return policy, TrialRecord(trial, seed, report.faults, report.evictions)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run every policy for ``spec.trials`` seeds on one trace.

    Trial ``t`` of policy ``P`` uses ``derive_seed(base_seed, P, t)``.
    Deterministic policies run a single trial.  Ground truth, predictions and
    OPT are computed once.  Output order is (policy order in the spec, trial),
    independent of ``workers``.
    """
    trace = build_trace(spec.trace).check()
    truth = ground_truth(trace, spec.setup)
    if spec.noise is None:
        preds = trace.predictions
    elif spec.noise == "perfect":
        preds = truth.bits
    else:
        preds = apply_noise(truth, spec.noise)
    errors = count_errors(preds, truth, spec.setup)
    opt = opt_cost(trace)
    eval_trace = trace.with_predictions(preds, spec.setup)

    jobs = []
    for policy in spec.policies:
        if policy in RANDOMIZED:
            jobs += [(policy, eval_trace, t, derive_seed(spec.base_seed, policy, t)) for t in range(spec.trials)]
        else:
            jobs.append((policy, eval_trace, 0, None))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_run_trial, jobs))
    else:
        done = [_run_trial(j) for j in jobs]

    per_policy: dict = {p: [] for p in spec.policies}
    for policy, record in done:
        per_policy[policy].append(record)
    results = []
    for policy in spec.policies:
        trials = sorted(per_policy[policy], key=lambda r: r.trial)
        pr = PolicyResult(policy, trials)
        for bp, params in spec.bounds:
            if bp != policy:
                continue
            if params is None:
                params = guarantee(policy, trace.k)
            elif not isinstance(params, BoundParams):
                params = BoundParams(*params, 2 * trace.k)
            pr.checks.append(
                check_bound(pr.mean_cost, opt, errors.eta0, errors.eta1, params, policy=policy,
                            stderr=pr.stderr, tolerance_se=spec.tolerance_se,
                            with_gamma_ref=policy.startswith("mark-predict"))
            )
        results.append(pr)
    return ExperimentResult(trace.label, trace.k, len(trace), spec.setup, opt, errors.eta0, errors.eta1, results)
