"""Command-line entry point.

Exit codes: 0 success, 1 I/O, parse or verification failure, 2 structural
rejection (non-biclique component, non-rounded or non-bivalued input).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .bivalued import BivaluedError, check_ef1, check_po_certificate, solve_bivalued
from .generate import KINDS, generate
from .instance import InstanceError, StructuralError, dump_json, instance_to_json, load_instance
from .numeric import from_json_scalar
from .reduction import ReductionError, build_reduction, check_reduction_properties, load_game
from .solver import SolverError, iteration_bounds, solve_exact_rounded, solve_fptas
from .verify import VerificationError, verify_ce

logger = logging.getLogger("choremarket")

EXIT_OK, EXIT_FAIL, EXIT_STRUCTURAL = 0, 1, 2
BENCH_COLUMNS = ("n", "m", "alpha", "iterations", "balance_calls", "wall_time", "bound_ratio")


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    if args.mode == "exact":
        if args.alpha is None:
            raise UsageError("exact mode requires --alpha")
        inst = load_instance(args.instance, exact=True)
        res = solve_exact_rounded(inst, alpha=args.alpha, check=args.check)
    else:
        if args.epsilon is None or not 0 < args.epsilon < 1:
            raise UsageError("fptas mode requires --epsilon in (0, 1)")
        inst = load_instance(args.instance).to_approx()
        res = solve_fptas(inst, float(args.epsilon), check=args.check)
    _emit(dump_json(res.to_json()), args.out)
    if args.trace:
        Path(args.trace).write_text(res.trace_jsonl(), encoding="utf-8")
    print(
        f"solved: {res.iterations} iterations, {res.balance_calls} balance calls, "
        f"epsilon achieved {float(res.epsilon_achieved):.3g}",
        file=sys.stderr,
    )
    return EXIT_OK


def _read_result(path: str):
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        p = [from_json_scalar(v, allow_inf=False) for v in raw["prices"]]
        x = [[from_json_scalar(v, allow_inf=False) for v in row] for row in raw["allocation"]]
    except (KeyError, TypeError) as exc:
        raise VerificationError("result file needs 'prices' and 'allocation'") from exc
    return p, x


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    p, x = _read_result(args.result)
    if any(isinstance(v, float) for v in p + [v for row in x for v in row]):
        inst = inst.to_approx()
    report = verify_ce(inst, p, x, args.epsilon)
    print(report.table())
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json(), indent=1) + "\n", encoding="utf-8")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_gen(args) -> int:
    if args.n < 1 or args.m < 1:
        raise UsageError("--n and --m must be at least 1")
    inst = generate(args.kind, args.n, args.m, args.seed, alpha=args.alpha, beta=args.beta)
    _emit(dump_json(instance_to_json(inst)), args.out)
    return EXIT_OK


def cmd_reduce(args) -> int:
    game = load_game(json.loads(Path(args.game).read_text(encoding="utf-8")))
    inst, params, labels = build_reduction(game)
    _emit(dump_json(instance_to_json(inst)), args.out)
    sidecar = args.labels or (str(Path(args.out).with_suffix("")) + ".labels.json" if args.out else None)
    if sidecar:
        Path(sidecar).write_text(dump_json(labels.to_json(params)), encoding="utf-8")
    if args.audit:
        report = check_reduction_properties(inst, labels, params)
        print(report.table(), file=sys.stderr)
        if not report.passed:
            return EXIT_FAIL
    return EXIT_OK


def cmd_ef1po(args) -> int:
    inst = load_instance(args.instance, exact=True)
    res = solve_bivalued(inst)
    ef1, pair = check_ef1(inst.d, res.allocation)
    po, wit = check_po_certificate(inst.d, res.prices, res.allocation)
    out = res.to_json()
    out.update(ef1=ef1, po_certificate=po)
    _emit(dump_json(out), args.out)
    if not ef1:
        print(f"EF1 violated by agents {pair}", file=sys.stderr)
    if not po:
        print(f"PO certificate broken at {wit}", file=sys.stderr)
    return EXIT_OK if ef1 and po else EXIT_FAIL


def parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            n, m = (int(v) for v in tok.lower().split("x"))
        except ValueError as exc:
            raise UsageError(f"bad size {tok!r}; expected NxM") from exc
        if n < 1 or m < 1:
            raise UsageError(f"bad size {tok!r}")
        sizes.append((n, m))
    return sizes


def bench_rows(
    sizes: Sequence[tuple[int, int]],
    seed: int,
    alpha: Fraction = Fraction(1),
    mode: str = "exact",
    epsilon: float = 0.01,
    repeats: int = 1,
) -> list[dict]:
    """One row per solved instance, in input order."""
    rows = []
    for n, m in sizes:
        for r in range(repeats):
            if mode == "exact":
                inst = generate("rounded", n, m, seed + r, alpha=alpha)
                rate = alpha
            else:
                inst = generate("uniform", n, m, seed + r).to_approx()
                rate = epsilon
            t0 = time.perf_counter()
            res = solve_exact_rounded(inst, alpha=alpha) if mode == "exact" else solve_fptas(inst, epsilon)
            wall = time.perf_counter() - t0
            _, scale = iteration_bounds(n, m, float(rate), float(inst.d_max))
            ratio = res.iterations / scale if scale > 0 else 0.0
            rows.append(
                {
                    "n": n,
                    "m": m,
                    "alpha": str(rate),
                    "iterations": res.iterations,
                    "balance_calls": res.balance_calls,
                    "wall_time": f"{wall:.6f}",
                    "bound_ratio": f"{ratio:.6g}",
                }
            )
    return rows


def bench_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_bench(args) -> int:
    if args.mode == "fptas" and not 0 < args.epsilon < 1:
        raise UsageError("--epsilon must lie in (0, 1)")
    rows = bench_rows(
        parse_sizes(args.sizes), args.seed, alpha=args.alpha, mode=args.mode,
        epsilon=float(args.epsilon), repeats=args.repeats,
    )
    _emit(bench_csv(rows), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="choremarket", description="Competitive equilibria for divisible chores.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="compute an equal-income equilibrium")
    sp.add_argument("instance")
    sp.add_argument("--mode", choices=("exact", "fptas"), default="exact")
    sp.add_argument("--alpha", type=_rational, help="rounding base for exact mode")
    sp.add_argument("--epsilon", type=float, help="accuracy for fptas mode, in (0, 1)")
    sp.add_argument("--out", help="result JSON (default stdout)")
    sp.add_argument("--trace", help="write the step trace as JSON lines")
    sp.add_argument("--check", action="store_true", help="assert solver invariants after every step")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="check prices and allocation against an instance")
    sp.add_argument("instance")
    sp.add_argument("result")
    sp.add_argument("--epsilon", type=_rational, default=Fraction(0))
    sp.add_argument("--json", help="also write the report as JSON")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("gen", help="generate a seeded random instance")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--kind", choices=KINDS, default="uniform")
    sp.add_argument("--alpha", type=_rational, default=Fraction(1))
    sp.add_argument("--beta", type=_rational, default=Fraction(2))
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("reduce", help="build the layered exchange market of a polymatrix game")
    sp.add_argument("--game", required=True, help="JSON file with the payoff matrix M")
    sp.add_argument("--out", help="instance JSON (default stdout)")
    sp.add_argument("--labels", help="labels sidecar (default OUT stem + .labels.json)")
    sp.add_argument("--audit", action="store_true", help="print the structural audit on stderr")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("ef1po", help="integral EF1 + PO allocation of a bivalued instance")
    sp.add_argument("instance")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_ef1po)

    sp = sub.add_parser("bench", help="iteration counts against the theoretical scale")
    sp.add_argument("--sizes", default="2x4,4x8,8x16", help="comma separated NxM list")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--mode", choices=("exact", "fptas"), default="exact")
    sp.add_argument("--alpha", type=_rational, default=Fraction(1))
    sp.add_argument("--epsilon", type=float, default=0.01)
    sp.add_argument("--repeats", type=int, default=1, help="instances per size")
    sp.add_argument("--out", help="CSV file (default stdout)")
    sp.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; keep 2 for structural rejection
        return EXIT_OK if exc.code == 0 else EXIT_FAIL
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except StructuralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except BivaluedError as exc:
        print(f"error: {exc} after {len(exc.trace)} steps", file=sys.stderr)
        return EXIT_FAIL
    except (
        InstanceError, ReductionError, VerificationError, SolverError, UsageError,
        OSError, ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
