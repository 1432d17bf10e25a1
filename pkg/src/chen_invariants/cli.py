"""Command line interface: ``chen-invariants <command> [options]``.

Commands: compute, sweep, qp, equality, sample, selfcheck. JSON output keeps
full precision; ``--format text`` rounds reals to 12 significant digits.
Tolerances for verdicts can be overridden with the environment variables
``CHEN_INVARIANTS_HOLDS_TOL`` and ``CHEN_INVARIANTS_EQUALITY_TOL``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, qp
from .errors import InconsistentKindError, ShapeValidationError
from .grassmann import DEFAULT_STARTS
from .harness import EXIT_INCONSISTENT, EXIT_INPUT, InputError
from .shapes import shape_from_document


def _int_list(text):
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed(text):
    try:
        return harness.check_seed(int(text))
    except (ValueError, InputError):
        raise argparse.ArgumentTypeError(f"seed must be an integer in [0, 2^64 - 1], got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chen-invariants", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", parents=[common], help="invariants and bounds of one shape")
    p.add_argument("--in", dest="input", required=True, help="shape JSON file, or - for stdin")
    p.add_argument("--k", type=_int_list, help="orders to evaluate (default 3..n)")
    p.add_argument("--kind", choices=harness.CLI_KINDS, help="default follows the ambient kind")
    p.add_argument("--starts", type=int, default=DEFAULT_STARTS)

    p = sub.add_parser("sweep", parents=[common], help="seeded random inequality sweep")
    p.add_argument("--kind", choices=harness.CLI_KINDS, default=harness.KIND_REAL)
    p.add_argument("--n", type=_int_list, default=(3, 4, 5))
    p.add_argument("--p", type=_int_list, default=(1, 2, 3))
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--starts", type=int, default=DEFAULT_STARTS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall_time (breaks byte-identical output)")

    p = sub.add_parser("qp", parents=[common], help="solve one trace-constrained QP")
    p.add_argument("--in", dest="input", help="QP JSON file instead of the flags below")
    p.add_argument("--label", choices=(qp.FR_REAL, qp.F1_LAGRANGIAN, qp.FR_LAGRANGIAN))
    p.add_argument("--n", type=int)
    p.add_argument("--k-order", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--trace", type=float, default=1.0)
    p.add_argument("--method", choices=harness.QP_METHODS, default="all")
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("equality", parents=[common], help="extremal shape round trip")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--a", type=_float_list, required=True, help="comma-separated, one per normal direction")
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--rotate-seed", type=_seed, help="apply a seeded random tangent rotation first")

    p = sub.add_parser("sample", parents=[common], help="seeded random shape document")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--lagrangian", action="store_true")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--c", type=float, default=0.0)

    p = sub.add_parser("selfcheck", parents=[common], help="identity and cross-check suite")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _read_json(source):
    try:
        text = sys.stdin.read() if source == "-" else Path(source).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON ({exc})") from None


def _run(args, tols):
    if args.command == "compute":
        shape, ambient = shape_from_document(_read_json(args.input))
        return harness.cmd_compute(shape, ambient, ks=args.k, kind=args.kind, tols=tols, starts=args.starts)
    if args.command == "sweep":
        cfg = harness.SweepConfig(
            kind=args.kind,
            ns=args.n,
            ps=args.p,
            count=args.count,
            seed=args.seed,
            scale=args.scale,
            starts=args.starts,
            tols=tols,
        )
        return harness.cmd_sweep(cfg, workers=args.workers, timing=args.timing)
    if args.command == "qp":
        if args.input:
            problem = qp.qp_from_document(_read_json(args.input))
        else:
            if args.label is None or args.n is None:
                raise InputError("qp needs --in or both --label and --n")
            try:
                problem = qp.build_qp(args.label, args.n, args.trace, k_order=args.k_order, r=args.r)
            except (TypeError, ValueError) as exc:
                raise InputError(str(exc)) from None
        return harness.cmd_qp(problem, method=args.method, starts=args.starts, seed=args.seed)
    if args.command == "equality":
        return harness.cmd_equality(args.n, args.p, args.a, c=args.c, rotate_seed=args.rotate_seed, tols=tols)
    if args.command == "sample":
        return harness.cmd_sample(args.n, args.p, seed=args.seed, lagrangian=args.lagrangian, scale=args.scale, c=args.c)
    return harness.cmd_selfcheck(seed=args.seed, perturb=args.perturb)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render_text(obj, prefix="") -> list[str]:
    """Flatten a report into ``path: value`` lines."""
    lines = []
    if isinstance(obj, dict):
        for key, val in obj.items():
            lines += render_text(val, f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, val in enumerate(obj):
            lines += render_text(val, f"{prefix}[{i}]")
    elif isinstance(obj, list):
        lines.append(f"{prefix}: [{', '.join(_fmt(v) for v in obj)}]")
    else:
        lines.append(f"{prefix}: {_fmt(obj)}")
    return lines


def render(report, fmt="json") -> str:
    if fmt == "text":
        return "\n".join(render_text(report)) + "\n"
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tols = harness.Tolerances.from_env()
        report, code = _run(args, tols)
    except (InputError, ShapeValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InconsistentKindError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    text = render(report, args.format)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
