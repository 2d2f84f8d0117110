"""Command-line front end.

    protoforge check    --spec FILE [--delta D] [--cap N]
    protoforge synth    --spec FILE --out DIR [--delta D] [--cap N] [--format F]
    protoforge verify   CSA.json ... --spec FILE [--delta D]
    protoforge simulate CSA.json ... --spec FILE [--delta D] --runs N --seed K
                        [--traces --out DIR]
    protoforge feasible --spec FILE [--grid-n A:B:S] [--grid-dmax A:B:S]
                        [--grid-tau A:B:S] [--cap N] [--out DIR]

Exit codes: 0 success, 1 requirement not met (unrealizable or verification
failure), 2 malformed input or I/O error, 3 exploration budget exhausted.
PROTOFORGE_BUDGET overrides the deduction budget.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import bounds as bounds_mod
from . import medium as medium_mod
from .csa import export_dot, export_json, import_json
from .errors import (
    DivergenceDetected,
    NotWellPosed,
    ProbabilityOutOfRange,
    ProtoforgeError,
    SpecSyntaxError,
    Unrealizable,
)
from .semantics import Scenario, check_correctness, run_monte_carlo
from .speclang import FullSpec, enumerate_sequences, parse_spec, well_posed
from .synthesis import bounds_by_name, synthesize_all

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3


def _load_spec(path: str, delta_override) -> FullSpec:
    text = Path(path).read_text()
    full = parse_spec(text)
    if delta_override is not None:
        full = FullSpec(full.protocol, delta_override, full.cars)
    return full


def _print_wellposed(report):
    if report.ok:
        print("well-posed: yes")
    else:
        print("well-posed: no")
        for v in report.violations:
            print(f"  violation: {v.message}")


def cmd_check(args) -> int:
    full = _load_spec(args.spec, args.delta)
    report = well_posed(full.protocol)
    _print_wellposed(report)
    if not report.ok:
        print("realizable: no")
        return EXIT_FAIL
    print(f"delta: {full.delta!r}")
    solved = bounds_mod.solve_opt(full.protocol, full.delta, cap=args.cap)
    if isinstance(solved, bounds_mod.Infeasible):
        print(f"realizable: no ({solved})")
        return EXIT_FAIL
    print("realizable: yes")
    for name, n in bounds_by_name(full.protocol, solved).items():
        print(f"  bound {name}: {n}")
    print(f"  total: {sum(solved.values())}")
    return EXIT_OK


def cmd_synth(args) -> int:
    full = _load_spec(args.spec, args.delta)
    try:
        result = synthesize_all(full, cap=args.cap)
    except (NotWellPosed, Unrealizable) as exc:
        print(f"unrealizable: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats = {"json", "dot"} if args.format is None else {args.format}
    for car in full.cars:
        csa = result.csas[car]
        if "json" in formats:
            (out / f"{car}.json").write_text(export_json(csa))
        if "dot" in formats:
            (out / f"{car}.dot").write_text(export_dot(csa))
    named = bounds_by_name(full.protocol, result.bounds)
    (out / "bounds.json").write_text(json.dumps(named, indent=2) + "\n")
    print(f"synthesized {len(full.cars)} automata into {out}")
    for name, n in named.items():
        print(f"  bound {name}: {n}")
    return EXIT_OK


def cmd_verify(args) -> int:
    full = _load_spec(args.spec, args.delta)
    csas = [import_json(Path(p).read_text()) for p in args.csas]
    report = check_correctness(csas, full.delta, full.protocol)
    print(f"delta: {full.delta!r}")
    for chk in report.checks:
        names = ".".join(e.name for e in chk.events)
        verdict = "ok" if chk.satisfied else "VIOLATED"
        print(f"  {names}: required {chk.required!r}, achieved {chk.achieved!r}, "
              f"margin {chk.margin!r} [{verdict}]")
    print(f"verdict: {'pass' if report.ok else 'fail'}")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    full = _load_spec(args.spec, args.delta)
    csas = [import_json(Path(p).read_text()) for p in args.csas]
    print(f"delta: {full.delta!r}")
    print(f"seed: {args.seed}")
    print(f"runs: {args.runs}")
    out_dir = Path(args.out) if args.out else None
    if args.traces and out_dir is None:
        print("--traces requires --out", file=sys.stderr)
        return EXIT_INPUT
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for i, pseq in enumerate(enumerate_sequences(full.protocol)):
        scenario = Scenario.for_sequence(pseq.events)
        result = run_monte_carlo(
            csas, full.delta, scenario, runs=args.runs, seed=args.seed,
            collect_traces=args.traces,
        )
        rate = result.empirical_rate
        stderr = math.sqrt(rate * (1.0 - rate) / result.runs) if result.runs else 0.0
        names = ".".join(e.name for e in pseq.events)
        print(f"  {names}: {result.successes}/{result.runs} rate {rate!r} stderr {stderr!r}")
        if args.traces:
            lines = [json.dumps(t, sort_keys=True) for t in result.traces]
            (out_dir / f"traces_{i}_{names}.jsonl").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _parse_grid(text: str, integer: bool) -> list:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid {text!r} is not of the form START:STOP:STEP")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"grid {text!r} must have positive step and stop >= start")
    values = []
    v = start
    while v <= stop + 1e-9:
        values.append(int(round(v)) if integer else v)
        v += step
    return values


def cmd_feasible(args) -> int:
    full = _load_spec(args.spec, args.delta)
    grid_n = _parse_grid(args.grid_n, integer=True)
    grid_dmax = _parse_grid(args.grid_dmax, integer=False)
    grid_tau = _parse_grid(args.grid_tau, integer=False)
    rows = medium_mod.feasibility_sweep(
        full.protocol, grid_n, grid_dmax, grid_tau, cap=args.cap
    )
    csv = medium_mod.sweep_csv(rows)
    sys.stdout.write(csv)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "feasibility.csv").write_text(csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="protoforge", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, csas=False):
        p.add_argument("--spec", required=True, help="protocol specification (.psl)")
        p.add_argument("--delta", type=float, default=None,
                       help="override the drop-probability bound")
        p.add_argument("--cap", type=int, default=512,
                       help="largest retransmission bound searched")
        if csas:
            p.add_argument("csas", nargs="+", metavar="CSA.json")

    p = sub.add_parser("check", help="well-posedness and realizability")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synth", help="synthesize one CSA per car")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=["dot", "json"], default=None,
                   help="restrict CSA output to one format")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="exact correctness check of CSA files")
    common(p, csas=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo simulation of CSA files")
    common(p, csas=True)
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--traces", action="store_true", help="write trace JSONL files")
    p.add_argument("--out", default=None, help="output directory for traces")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("feasible", help="realizability sweep over medium parameters")
    common(p)
    p.add_argument("--grid-n", default="2:11:1", help="car-count grid START:STOP:STEP")
    p.add_argument("--grid-dmax", default="100:1000:100", help="data-length grid")
    p.add_argument("--grid-tau", default="1:10:1", help="minimum-delay grid")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.add_argument("--out", default=None, help="also write feasibility.csv here")
    p.set_defaults(func=cmd_feasible)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecSyntaxError, ProbabilityOutOfRange, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DivergenceDetected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ProtoforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
