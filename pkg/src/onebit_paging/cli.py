"""Command line entry point: ``onebit-paging <command> ...``.

Exit status is 0 on success, 1 when ``check --strict`` finds a violated bound
and 2 on any input error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import adversary
from .harness import (
    ExperimentResult,
    ExperimentSpec,
    SpecError,
    check_bound,
    guarantee,
    run_experiment,
)
from .model import BoundParams, TraceError
from .oracle import ground_truth
from .predictions import NoiseError, NoiseSpec, apply_noise
from .traceio import format_results, read_trace, write_trace

EXIT_OK, EXIT_VIOLATED, EXIT_INPUT = 0, 1, 2


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _noise_arg(value: str) -> NoiseSpec | str:
    if value == "perfect":
        return value
    try:
        return NoiseSpec.from_dict(json.loads(value))
    except json.JSONDecodeError:
        with open(value, encoding="utf-8") as fh:
            return NoiseSpec.from_dict(json.load(fh))


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "uniform":
        trace = adversary.uniform_random_instance(args.k, args.n, args.seed, args.bit, args.setup)
    elif kind == "blocks":
        trace = adversary.block_instance(args.k, args.m, args.block_repeats, args.seed, args.setup)
    elif kind == "rounds":
        trace = adversary.three_page_round_instance(args.k, args.m, args.seed, args.setup)
    elif kind == "adaptive":
        trace, _ = adversary.adaptive_adversary_run(args.policy, args.k, args.n, args.bit, args.setup)
    elif kind == "random":
        trace = adversary.random_trace(args.k, args.n, args.pages or 2 * args.k, args.seed, args.zipf, args.setup)
    else:
        trace = adversary.round_robin(args.k, args.n, args.pages, args.setup)
    if args.out:
        write_trace(trace, args.out)
    else:
        print(f"k={trace.k} setup={trace.setup.value} label={trace.label}")
        for page, bit in zip(trace.requests.tolist(), trace.predictions.tolist()):
            print(page, bit)
    return EXIT_OK


def cmd_truth(args) -> int:
    trace = read_trace(args.trace)
    truth = ground_truth(trace, args.setup)
    write_trace(trace.with_predictions(truth.bits, args.setup), args.out)
    return EXIT_OK


def cmd_noise(args) -> int:
    trace = read_trace(args.trace)
    setup = args.setup or trace.setup
    truth = ground_truth(trace, setup)
    spec = _noise_arg(args.spec)
    bits = truth.bits if spec == "perfect" else apply_noise(truth, spec)
    write_trace(trace.with_predictions(bits, setup), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    if args.spec:
        spec = ExperimentSpec.load(args.spec)
    else:
        if not args.trace:
            raise SpecError("run needs --spec FILE or --trace FILE")
        spec = ExperimentSpec(
            trace={"file": args.trace},
            setup=args.setup,
            noise=_noise_arg(args.noise) if args.noise else None,
            policies=[p.strip() for p in args.policies.split(",") if p.strip()],
            trials=args.trials,
            base_seed=args.seed,
            bounds=[(p.strip(), None) for p in args.policies.split(",") if p.strip()] if args.guarantees else [],
        )
    result = run_experiment(spec, workers=args.workers)
    _emit(format_results(result, args.format), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    with open(args.results, encoding="utf-8") as fh:
        result = ExperimentResult.from_dict(json.load(fh))
    pr = result.by_policy(args.policy)
    coeffs = (args.alpha, args.beta, args.gamma)
    if all(c is None for c in coeffs):
        params = guarantee(args.policy, result.k, args.b)
    elif any(c is None for c in coeffs):
        raise SpecError("give all of --alpha --beta --gamma, or none to use the proven guarantee")
    else:
        params = BoundParams(args.alpha, args.beta, args.gamma, 2 * result.k if args.b is None else args.b)
    check = check_bound(pr.mean_cost, result.opt, result.eta0, result.eta1, params,
                        policy=args.policy, stderr=pr.stderr, tolerance_se=args.tolerance_se,
                        with_gamma_ref=args.policy.startswith("mark-predict"))
    print(json.dumps(check.to_dict(), sort_keys=True))
    if args.strict and check.status == "violated":
        return EXIT_VIOLATED
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.results, encoding="utf-8") as fh:
        result = ExperimentResult.from_dict(json.load(fh))
    _emit(format_results(result, args.format), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onebit-paging", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a trace")
    g.add_argument("kind", choices=["uniform", "blocks", "rounds", "adaptive", "random", "roundrobin"])
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--m", "--phases", dest="m", type=int, default=100,
                   help="rounds (rounds) or phases (blocks)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--bit", type=int, choices=[0, 1], default=0)
    g.add_argument("--block-repeats", type=int, default=None)
    g.add_argument("--policy", default="lru", help="target of the adaptive adversary")
    g.add_argument("--pages", type=int, default=None)
    g.add_argument("--zipf", type=float, default=0.0)
    g.add_argument("--setup", choices=["discard", "phase", "none"], default="discard")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("truth", help="replace predictions by ground truth")
    t.add_argument("setup", choices=["discard", "phase"])
    t.add_argument("--trace", required=True)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_truth)

    nz = sub.add_parser("noise", help="corrupt ground truth with a noise model")
    nz.add_argument("--spec", required=True, help="JSON object, JSON file, or 'perfect'")
    nz.add_argument("--trace", required=True)
    nz.add_argument("--setup", choices=["discard", "phase"], default=None)
    nz.add_argument("--out", required=True)
    nz.set_defaults(func=cmd_noise)

    r = sub.add_parser("run", help="run policies over seeds")
    r.add_argument("--spec", help="experiment JSON file")
    r.add_argument("--trace")
    r.add_argument("--setup", choices=["discard", "phase"], default="discard")
    r.add_argument("--noise", help="JSON noise spec or 'perfect'; default uses the trace's bits")
    r.add_argument("--policies", default="lru")
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--guarantees", action="store_true", help="check each policy's proven bound")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--format", choices=["csv", "json"], default="json")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="check ALG <= a*OPT + b0*eta0 + g*eta1 + b")
    c.add_argument("--results", required=True, help="JSON written by 'run --format json'")
    c.add_argument("--policy", required=True)
    c.add_argument("--alpha", type=float)
    c.add_argument("--beta", type=float)
    c.add_argument("--gamma", type=float)
    c.add_argument("--b", type=float, default=None, help="additive constant (default 2k)")
    c.add_argument("--tolerance-se", type=float, default=3.0)
    c.add_argument("--strict", action="store_true")
    c.set_defaults(func=cmd_check)

    rp = sub.add_parser("report", help="convert results JSON to csv or json")
    rp.add_argument("--results", required=True)
    rp.add_argument("--format", choices=["csv", "json"], default="csv")
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TraceError, SpecError, NoiseError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
