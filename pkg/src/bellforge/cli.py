"""Command-line entry point: ``bellforge {verify,optimize,evolve,bench-permanent}``."""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from .fock import format_occupation, parse_occupation
from .interferometer import Circuit
from .optimize.search import OptimizerConfig, certify, multistart
from .permanent import permanent_naive, permanent_ryser
from .schemes import load_scheme
from .simulate import aux_patterns, evolve, residual_report

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
BENCH_MAX_N = 14
NAIVE_CHECK_MAX_N = 7


def fmt(x) -> str:
    if x is None:
        return "nan"
    return f"{float(x):.17g}"


def positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {n}")
    return n


def seed_int(text: str) -> int:
    n = int(text, 0)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return n


def parse_sizes(text: str) -> list[int]:
    """``"2-12"``, ``"2..12"`` or ``"3,5,7"``."""
    text = text.strip()
    try:
        for sep in ("..", "-"):
            if sep in text:
                lo, hi = (int(p) for p in text.split(sep, 1))
                sizes = list(range(lo, hi + 1))
                break
        else:
            sizes = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size range {text!r}") from None
    if not sizes or min(sizes) < 1 or max(sizes) > BENCH_MAX_N:
        raise argparse.ArgumentTypeError(f"sizes must lie in 1..{BENCH_MAX_N}")
    return sizes


def load_circuits(paths: Sequence[str]) -> list[Circuit]:
    """Circuit files, or one file holding a ``circuits`` list (bundle or report)."""
    out: list[Circuit] = []
    for p in paths:
        data = json.loads(Path(p).read_text())
        if isinstance(data, dict) and "circuits" in data:
            out.extend(Circuit.from_dict(c) for c in data["circuits"])
        else:
            out.append(Circuit.from_dict(data))
    return out


def save_circuits(circuits: Sequence[Circuit], path: str) -> None:
    if len(circuits) == 1:
        circuits[0].save(path)
    else:
        Path(path).write_text(json.dumps({"circuits": [c.to_dict() for c in circuits]}, indent=2) + "\n")


def write_json(data: dict, path: str) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def print_report(rep) -> None:
    print(f"scheme              {rep.scheme.name}")
    print(f"success_probability {fmt(rep.success_probability)}")
    for k, p in enumerate(rep.stage_probabilities, 1):
        if len(rep.stage_probabilities) > 1:
            print(f"stage{k}_probability  {fmt(p)}")
    print(f"fidelity            {fmt(rep.fidelity)}")
    print(f"byproduct_weight    {fmt(rep.byproduct_weight)}")
    print(f"beam_splitters      {rep.n_beam_splitters}")
    print(f"certified           {str(rep.certified).lower()}")


def cmd_verify(args) -> int:
    scheme = load_scheme(args.scheme)
    circuits = load_circuits(args.circuit)
    rep = certify(circuits, scheme)
    print_report(rep)
    if args.report:
        write_json(rep.to_dict(), args.report)
    return EXIT_OK if rep.certified else EXIT_FAIL


def cmd_optimize(args) -> int:
    scheme = load_scheme(args.scheme)
    config = OptimizerConfig.for_scheme(
        scheme,
        mu=args.mu,
        eps=args.eps,
        restarts=args.restarts,
        seed=args.seed,
        max_iterations=args.max_iterations,
        gradient_mode=args.gradient,
    )
    result = multistart(scheme, config)
    rep = result.report
    if args.out:
        save_circuits(result.circuits, args.out)
    if args.trace:
        result.write_trace(args.trace)
    if args.report:
        write_json(rep.to_dict(), args.report)
    for r in result.restarts:
        print(
            f"restart {r.restart:3d} {r.status:15s} it={r.iterations:5d} "
            f"p={fmt(r.probability)} 1-F={fmt(None if r.fidelity is None else 1 - r.fidelity)} "
            f"bs={r.n_beam_splitters}"
        )
    print(f"best_restart        {result.best.restart}")
    print(f"final_cost          {fmt(result.cost)}")
    print_report(rep)
    ok = result.converged and rep.certified
    if not ok:
        print("not converged", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_evolve(args) -> int:
    circuits = load_circuits([args.circuit])
    if len(circuits) != 1:
        raise ValueError("evolve takes a single circuit")
    circ = circuits[0]
    occ = parse_occupation(args.input)
    if len(occ) != circ.n_modes:
        raise ValueError(f"input {args.input!r} has {len(occ)} modes, circuit has {circ.n_modes}")
    out = evolve(circ.unitary(), occ)
    amps = [
        {"occupation": format_occupation(b), "re": a.real, "im": a.imag, "probability": abs(a) ** 2}
        for b, a in out.terms(args.tol)
    ]
    report: dict = {"input": format_occupation(occ), "n_modes": circ.n_modes, "amplitudes": amps}
    for row in amps:
        print(f"{row['occupation']}  {fmt(row['re'])}  {fmt(row['im'])}  {fmt(row['probability'])}")
    if args.scheme:
        scheme = load_scheme(args.scheme)
        if scheme.n_modes != circ.n_modes:
            raise ValueError(f"{scheme.name} scheme has {scheme.n_modes} modes, circuit has {circ.n_modes}")
        res = residual_report(out, scheme)
        report["aux_modes"] = list(scheme.aux_modes)
        report["herald"] = res
        print(f"aux modes {list(scheme.aux_modes)}")
        for row in res["outcome_table"]:
            print(f"aux {row['pattern']}  {fmt(row['probability'])}")
    elif args.aux:
        aux = [int(m) for m in args.aux.split(",")]
        basis = out.basis
        table = {}
        for d in aux_patterns(out.n_photons, len(aux)):
            table[format_occupation(d)] = float(
                sum(abs(a) ** 2 for b, a in zip(basis, out.amplitudes) if tuple(b[m] for m in aux) == d)
            )
        report["aux_modes"] = aux
        report["outcome_table"] = [{"pattern": k, "probability": v} for k, v in table.items()]
        for k, v in table.items():
            print(f"aux {k}  {fmt(v)}")
    if args.report:
        write_json(report, args.report)
    return EXIT_OK


def cmd_bench_permanent(args) -> int:
    rng = np.random.default_rng(args.seed)
    ok = True
    print("n  mean_s  stdev_s  check")
    for n in args.sizes:
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        times = []
        value = None
        for _ in range(args.reps):
            t0 = time.perf_counter()
            value = permanent_ryser(a)
            times.append(time.perf_counter() - t0)
        check = "-"
        if n <= NAIVE_CHECK_MAX_N:
            ref = permanent_naive(a)
            good = abs(value - ref) <= 1e-10 * max(1.0, abs(ref))
            ok &= good
            check = "ok" if good else "MISMATCH"
        sd = statistics.stdev(times) if len(times) > 1 else 0.0
        print(f"{n:2d} {fmt(statistics.fmean(times))} {fmt(sd)} {check}")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellforge", description="Heralded dual-rail Bell-state interferometers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="certify circuit(s) against a scheme")
    p.add_argument("--circuit", nargs="+", required=True, metavar="FILE")
    p.add_argument("--scheme", required=True, help="scheme name or JSON config")
    p.add_argument("--report", metavar="OUT")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("optimize", help="multistart search for a scheme")
    p.add_argument("--scheme", required=True, help="scheme name or JSON config")
    p.add_argument("--mu", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--restarts", type=positive_int, default=20)
    p.add_argument("--seed", type=seed_int, default=42)
    p.add_argument("--max-iterations", type=positive_int, default=5000)
    p.add_argument("--gradient", choices=("analytic", "finite-difference"), default="analytic")
    p.add_argument("--out", metavar="CIRCUIT")
    p.add_argument("--trace", metavar="CSV")
    p.add_argument("--report", metavar="OUT")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evolve", help="output state of a circuit for one input occupation")
    p.add_argument("--circuit", required=True, metavar="FILE")
    p.add_argument("--input", required=True, help="digit-per-mode occupation, e.g. '1111 0'")
    p.add_argument("--scheme", help="scheme whose aux modes define the outcome table")
    p.add_argument("--aux", help="comma-separated aux modes when no scheme is given")
    p.add_argument("--tol", type=float, default=1e-14, help="drop amplitudes below this magnitude")
    p.add_argument("--report", metavar="OUT")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("bench-permanent", help="time Ryser's permanent")
    p.add_argument("--sizes", type=parse_sizes, default=parse_sizes("2-12"))
    p.add_argument("--reps", type=positive_int, default=5)
    p.add_argument("--seed", type=seed_int, default=0)
    p.set_defaults(func=cmd_bench_permanent)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"bellforge {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
