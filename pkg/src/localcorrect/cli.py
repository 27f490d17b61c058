"""Command-line entry point: ``localcorrect <subcommand> [flags]``.

Exit codes: 0 success, 1 acceptance threshold missed, 2 bad input or unmet
precondition, 3 typicality redraw budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .boolfn import Isomorphism, JuntaFunction, PsfFunction, load_function
from .corrector import ConstantsProfile, locally_correct_junta, locally_correct_psf
from .harness import (
    ExperimentConfig,
    emit_report,
    point_hex,
    render_report,
    run_experiment,
    run_typicality_suite,
)
from .influence import (
    EstimatorParams,
    estimate_influence,
    estimate_symmetric_influence,
    influence_exact,
    symmetric_influence_exact,
)
from .oracle import NoiseSpec, make_oracle, read_flip_file
from .typicality import TypicalityBudgetExceeded, and_core, draw_typical_junta_core, draw_typical_psf_core

SEED_ENV = "LOCALCORRECT_SEED"
WORKERS_ENV = "LOCALCORRECT_WORKERS"

EXIT_OK, EXIT_ACCEPTANCE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: {name}={raw!r} is not an integer")


def _noise_arg(text: str) -> tuple[str, str | None]:
    if text in ("exact", "procedural"):
        return text, None
    if text.startswith("adversarial:") and len(text) > len("adversarial:"):
        return "adversarial", text.split(":", 1)[1]
    raise argparse.ArgumentTypeError("noise must be exact, procedural or adversarial:FILE")


def _profile_arg(text: str) -> str:
    try:
        ConstantsProfile.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return text


def _common(p: argparse.ArgumentParser, family: bool = True):
    if family:
        p.add_argument("--family", choices=("junta", "psf"), default="junta")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--epsilon", type=float, default=0.001)
    p.add_argument("--noise", type=_noise_arg, default=("procedural", None),
                   help="exact, procedural or adversarial:FILE")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--profile", type=_profile_arg, default="paper", help="paper or scaled:FACTOR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localcorrect", description="Local correction of juntas and partially "
                                     "symmetric functions known up to isomorphism.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, family in (("correct-junta", "junta"), ("correct-psf", "psf")):
        p = sub.add_parser(name, help=f"correct one point of a planted {family}")
        _common(p, family=False)
        p.set_defaults(family=family)
        p.add_argument("--function", help="function descriptor JSON (overrides --k/--n; uses its sigma)")
        p.add_argument("--x", help="target point as little-endian hex (default: random)")
        p.add_argument("--out", help="write the JSON result here as well")

    p = sub.add_parser("experiment", help="many seeded end-to-end trials")
    _common(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--no-gating", action="store_true", help="skip the typicality checks on drawn cores")
    p.add_argument("--identity-sigma", action="store_true")
    p.add_argument("--amplify", type=int, default=1, help="odd repetition count for majority vote (default off)")
    p.add_argument("--timing", action="store_true", help="record wall time per trial")
    p.add_argument("--min-lower-bound", type=float, default=None,
                   help="exit 1 unless the one-sided 95%% lower bound on success reaches this value")

    p = sub.add_parser("typicality", help="pass rates of the typicality checks on random cores")
    _common(p)
    p.add_argument("--trials", type=int, default=100, help="number of random cores")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--inject-and", action="store_true", help="also check the AND core (juntas only)")
    p.add_argument("--min-pass-rate", type=float, default=None,
                   help="exit 1 if any check's pass rate falls below this value")

    p = sub.add_parser("estimate", help="estimate influence or symmetric influence of a variable set")
    _common(p)
    p.add_argument("--vars", required=True, help="comma-separated 0-based variables")
    p.add_argument("--measure", choices=("influence", "symmetric"), default="influence")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--function", help="function descriptor JSON (default: random planted core)")
    p.add_argument("--out")
    return parser


# ---------------------------------------------------------------------------


def _write(text: str, out: str | None):
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc}") from exc
    sys.stdout.write(text)


def _noise_spec(args, rng) -> NoiseSpec:
    mode, path = args.noise
    if mode == "adversarial":
        return read_flip_file(path, args.n)
    return NoiseSpec(args.epsilon, mode, int(rng.integers(0, 2**63)))


def _planted(args, rng):
    """(f, sigma, core) from a descriptor, or a gated random core with a random sigma."""
    if getattr(args, "function", None):
        f, sigma = load_function(args.function)
        if args.family == "junta" and not isinstance(f, JuntaFunction):
            raise ValueError("descriptor is not a junta")
        if args.family == "psf" and not isinstance(f, PsfFunction):
            raise ValueError("descriptor is not a partially symmetric function")
        args.n, args.k = f.n, f.core.k
        # cores are stored relative to their own positions; fold them into sigma
        lift = list(f.positions) + [i for i in range(f.n) if i not in f.positions]
        base = Isomorphism(lift)
        sigma = base if sigma is None else sigma.compose(base)
        f = type(f)(f.core, range(f.core.k), f.n)
        return f, sigma, f.core
    if args.k < 0 or args.n < args.k:
        raise ValueError(f"need 0 <= k <= n, got k={args.k}, n={args.n}")
    if args.family == "junta":
        core, _ = draw_typical_junta_core(args.k, rng)
        f = JuntaFunction(core, range(args.k), args.n)
    else:
        core, _ = draw_typical_psf_core(args.k, args.n, rng)
        f = PsfFunction(core, range(args.k), args.n)
    return f, Isomorphism.random(args.n, rng), core


def cmd_correct(args) -> int:
    rng = np.random.default_rng(args.seed)
    f, sigma, core = _planted(args, rng)
    oracle = make_oracle(f, sigma, _noise_spec(args, rng))
    if args.x:
        raw = np.frombuffer(bytes.fromhex(args.x), dtype=np.uint8)
        x = np.unpackbits(raw, bitorder="little")
        if x.size < args.n or x[args.n:].any():
            raise ValueError(f"--x does not fit {args.n} variables")
        x = x[:args.n]
    else:
        x = rng.integers(0, 2, args.n, dtype=np.uint8)
    correct = locally_correct_junta if args.family == "junta" else locally_correct_psf
    bit, trace = correct(core, args.k, oracle, x, ConstantsProfile.parse(args.profile), rng)
    expected = oracle.true_value(x)
    result = {"family": args.family, "k": args.k, "n": args.n, "x": point_hex(x), "output": bit,
              "expected": expected, "success": bit == expected, "query_count": oracle.query_count,
              "trace": trace.to_dict()}
    _write(json.dumps(result) + "\n", args.out)
    return EXIT_OK


def _config(args, **extra) -> ExperimentConfig:
    mode, path = args.noise
    return ExperimentConfig(family=args.family, k=args.k, n=args.n, epsilon=args.epsilon, noise=mode,
                            noise_file=path, trials=args.trials, profile=args.profile, seed=args.seed,
                            workers=args.workers, out=args.out, format=args.format, **extra)


def cmd_experiment(args) -> int:
    cfg = _config(args, gating=not args.no_gating, sigma="identity" if args.identity_sigma else "random",
                  amplify=args.amplify, timing=args.timing)
    report = run_experiment(cfg)
    if args.out:
        emit_report(report, args.out, args.format, args.timing)
        print(json.dumps(report.summary))
    else:
        sys.stdout.write(render_report(report, args.format, args.timing))
    if args.min_lower_bound is not None and report.summary["lower95"] < args.min_lower_bound:
        print(f"acceptance failed: lower95={report.summary['lower95']:.4f} < {args.min_lower_bound}",
              file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


def cmd_typicality(args) -> int:
    if args.n < args.k:
        raise ValueError("n must be at least k")
    cfg = _config(args)
    extra = [and_core(args.k)] if args.inject_and and args.family == "junta" else []
    report = run_typicality_suite(cfg, extra)
    if args.out:
        emit_report(report, args.out, args.format)
        print(json.dumps(report.summary))
    else:
        sys.stdout.write(render_report(report, args.format))
    if args.min_pass_rate is not None:
        rates = [c["pass_rate"] for c in report.summary["checks"].values()]
        if any(r is not None and r < args.min_pass_rate for r in rates):
            print(f"acceptance failed: a pass rate is below {args.min_pass_rate}", file=sys.stderr)
            return EXIT_ACCEPTANCE
    return EXIT_OK


def cmd_estimate(args) -> int:
    rng = np.random.default_rng(args.seed)
    f, sigma, _ = _planted(args, rng)
    try:
        J = [int(v) for v in args.vars.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"--vars must be comma-separated integers, got {args.vars!r}")
    oracle = make_oracle(f, sigma, _noise_spec(args, rng))
    params = EstimatorParams(args.delta, args.eta)
    est = estimate_influence if args.measure == "influence" else estimate_symmetric_influence
    value = est(oracle, J, params, rng)
    result = {"measure": args.measure, "vars": J, "n": args.n, "estimate": value, "q": params.q,
              "query_count": oracle.query_count}
    if args.n <= 20:
        exact = influence_exact if args.measure == "influence" else symmetric_influence_exact
        result["exact_noiseless"] = exact(f.permuted(sigma), J)
    _write(json.dumps(result) + "\n", args.out)
    return EXIT_OK


COMMANDS = {"correct-junta": cmd_correct, "correct-psf": cmd_correct, "experiment": cmd_experiment,
            "typicality": cmd_typicality, "estimate": cmd_estimate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is None:
        args.seed = _env_int(SEED_ENV, 0)
    if hasattr(args, "workers") and args.workers is None:
        args.workers = _env_int(WORKERS_ENV, 1)
    try:
        return COMMANDS[args.command](args)
    except TypicalityBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
