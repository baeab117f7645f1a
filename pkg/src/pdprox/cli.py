"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .experiment import REGULARIZERS, SOLVERS, ExperimentSpec, run_experiment
from .losses import KINDS
from .numerics import write_libsvm
from .synthetic import SYNTH_KINDS, gen_synthetic

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _step(value: str):
    if value == "grid":
        return value
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'grid', got {value!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("step values must be positive")
    return v


def _floats(value: str):
    try:
        return tuple(float(x) for x in value.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")


def _names(value: str):
    return tuple(x.strip() for x in value.split(",") if x.strip())


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {value!r}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--variant", default="dual", choices=("dual", "dual-fast", "primal", "subgradient", "pegasos"))
    p.add_argument("--step-scale", type=_step, default=1.0,
                   help="multiplier on sqrt(1/(2c)), or 'grid' to tune over 2^-10..2^10")
    p.add_argument("--step-ratio", type=_step, default=None,
                   help="primal/dual step ratio for the two-step scheme, or 'grid'")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--tol", type=float, default=None, help="stop once the duality gap is below this")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results")


def _data_args(p: argparse.ArgumentParser):
    p.add_argument("--data", help="libsvm file; a synthetic set is drawn when omitted")
    p.add_argument("--synth", default="classification", choices=SYNTH_KINDS)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--loss", default="hinge", choices=KINDS)
    p.add_argument("--loss-param", type=float, default=None,
                   help="slope (generalized hinge / piecewise linear) or eps (eps-insensitive)")
    p.add_argument("--reg", default="l2sq", choices=REGULARIZERS)
    p.add_argument("--dual-cap", type=_floats, default=(), help="comma-separated caps m on sum(alpha)")
    p.add_argument("--bias", type=_bool, nargs="?", const=True, default=False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdprox", description="Primal-dual prox solvers and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one solver on one problem")
    _common(solve)
    _data_args(solve)

    bench = sub.add_parser("bench", help="run several solvers and write one CSV each")
    _common(bench)
    _data_args(bench)
    bench.add_argument("--solvers", type=_names, default=("pdprox-dual", "pdprox-primal"))
    bench.add_argument("--task", default="erm", choices=("erm", "svm-dual-cap"))

    synth = sub.add_parser("synth", help="write a synthetic dataset in libsvm format")
    synth.add_argument("--config")
    synth.add_argument("--kind", default="classification", choices=("classification", "regression", "grouped"))
    synth.add_argument("--n", type=int, default=200)
    synth.add_argument("--d", type=int, default=20)
    synth.add_argument("--noise", type=float, default=0.1)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)

    mc = sub.add_parser("mc", help="matrix completion with a trace-norm penalty")
    _common(mc)
    mc.add_argument("--data", required=True, help="triplet file: 'row col value' per line, 0-based")
    mc.add_argument("--loss", default="absolute", choices=("absolute", "thresholds"))
    mc.add_argument("--thresholds", type=_floats, default=(0.0, 3.0, 6.0, 9.0))
    return parser


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file (``#`` starts a comment)."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _apply_config(parser, argv):
    """Re-parse with file values installed as subcommand defaults."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        values = read_config(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    by_dest = {a.dest: a for a in subparser._actions}
    by_dest["lambda"] = by_dest["lam"]
    defaults = {}
    for key, value in values.items():
        action = by_dest.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        conv = action.type or (lambda s: s)
        try:
            defaults[action.dest] = conv(value)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key!r}: {exc}")
        if action.choices is not None and defaults[action.dest] not in action.choices:
            raise UsageError(f"invalid choice for {key!r}: {value!r}")
        action.required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _spec_from_args(args) -> ExperimentSpec:
    common = dict(lam=args.lam, iters=args.iters, stride=args.stride, step_scale=args.step_scale,
                  step_ratio=args.step_ratio, tol=args.tol, out=args.out, seed=args.seed)
    if args.command == "mc":
        solver = args.variant if args.variant in ("subgradient",) else f"pdprox-{args.variant}"
        if args.variant == "pegasos":
            raise UsageError("pegasos does not apply to matrix completion")
        thresholds = tuple(args.thresholds) if args.loss == "thresholds" else None
        return ExperimentSpec(task="matrix-completion", solvers=(solver,), data=args.data,
                              thresholds=thresholds, reg="l2sq", **common)
    data = dict(data=args.data, synth=args.synth, n=args.n, d=args.d, noise=args.noise,
                loss=args.loss, loss_param=args.loss_param, reg=args.reg,
                dual_caps=tuple(args.dual_cap), bias=args.bias)
    if args.command == "solve":
        solver = args.variant if args.variant in ("subgradient", "pegasos") else f"pdprox-{args.variant}"
        task = "svm-dual-cap" if args.dual_cap else "erm"
        return ExperimentSpec(task=task, solvers=(solver,), **data, **common)
    bad = [s for s in args.solvers if s not in SOLVERS]
    if bad:
        raise UsageError(f"unknown solver(s) {', '.join(bad)}; choose from {', '.join(SOLVERS)}")
    return ExperimentSpec(task=args.task, solvers=args.solvers, **data, **common)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        print(f"pdprox: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "synth":
        try:
            ds = gen_synthetic(args.kind, args.n, args.d, args.noise, args.seed)
            write_libsvm(ds, args.out)
        except (ValueError, OSError) as exc:
            print(f"pdprox: error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print(f"wrote {ds.n} examples with {ds.d} features to {args.out}")
        return EXIT_OK

    try:
        spec = _spec_from_args(args)
    except UsageError as exc:
        print(f"pdprox: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"pdprox: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return run_experiment(spec)


if __name__ == "__main__":
    sys.exit(main())
