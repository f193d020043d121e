"""Command-line entry point: ``pbcert verify|solve|bench|check-model``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .proofio import ParseError, read_formula


def _int_list(values: Sequence[str]) -> list[int]:
    out = []
    for v in values:
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            if ".." in part:
                lo, _, hi = part.partition("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    return out


def cmd_verify(args: argparse.Namespace) -> int:
    from .verifier import verify

    formula = read_formula(args.formula)
    with open(args.proof) as fh:
        verdict = verify(formula, fh, expect_unsat=args.expect == "unsat", trace=args.trace,
                         trace_stream=sys.stdout)
    print(f"verdict: {verdict}")
    if args.stats:
        for k, v in verdict.stats.items():
            print(f"stat {k}: {v}")
    return 0 if verdict.ok else 1


def cmd_solve(args: argparse.Namespace) -> int:
    from .cdcl import SAT, UNSAT, Solver

    formula = read_formula(args.input)
    fh = open(args.proof, "w") if args.proof else None
    try:
        res = Solver(formula, fh, use_xor=not args.no_xor, seed=args.seed,
                     conflict_budget=args.conflict_budget, time_limit=args.time_limit).solve()
    finally:
        if fh is not None:
            fh.close()
    if res.status == SAT:
        print("s SATISFIABLE")
        assert res.model is not None
        names = formula.registry
        lits = [("" if l > 0 else "-") + names.name(abs(l)) for l in res.model]
        for i in range(0, len(lits), 10):
            print("v " + " ".join(lits[i:i + 10]))
        print("v 0")
        code = 10
    elif res.status == UNSAT:
        print("s UNSATISFIABLE")
        code = 20
    else:
        print("s UNKNOWN")
        print(f"c {res.reason}")
        code = 0
    if args.stats:
        for k, v in res.stats.items():
            print(f"c {k}: {v}")
    return code


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import REPORT_FIELDS, run_scaling, summary_line

    rows, slope = run_scaling(_int_list(args.nodes), _int_list(args.seeds), args.degree, args.out,
                              args.workers, args.timeout)
    print(",".join(REPORT_FIELDS))
    for r in rows:
        print(",".join(str(r[k]) for k in REPORT_FIELDS))
    print(summary_line(rows, slope))
    return 0 if all(r["verdict"] in ("verified-unsat", "timeout") for r in rows) else 1


def cmd_check_model(args: argparse.Namespace) -> int:
    from .verifier import check_model

    formula = read_formula(args.formula)
    reg = formula.registry
    lits: list[int] = []
    with open(args.model) as fh:
        for line in fh:
            toks = line.split()
            if toks and toks[0] in ("s", "c"):
                continue
            if toks and toks[0] == "v":
                toks = toks[1:]
            for t in toks:
                if t == "0":
                    continue
                neg = t.startswith("-") or t.startswith("~")
                name = t[1:] if neg else t
                vid = int(name) if name.isdigit() else reg.id(name)
                lits.append(-vid if neg else vid)
    bad = check_model(formula, lits)
    if bad:
        print(f"model violates {len(bad)} constraint(s): {' '.join(map(str, bad[:20]))}")
        return 1
    print("model satisfies all constraints")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbcert", description="Pseudo-Boolean proof checking and proof-logging SAT solving.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check a proof against a formula")
    v.add_argument("formula", help="input formula (.opb or DIMACS .cnf)")
    v.add_argument("proof", help="proof file")
    v.add_argument("--stats", action="store_true", help="print checking statistics")
    v.add_argument("--trace", type=int, default=0, metavar="N", help="echo the first N checked steps")
    v.add_argument("--expect", choices=["unsat"], help="require the proof to end with a conclusion")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", help="solve a clausal formula, optionally writing a proof")
    s.add_argument("input")
    s.add_argument("--proof", metavar="OUT", help="write the proof here")
    s.add_argument("--no-xor", action="store_true", help="disable parity detection and elimination")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--conflict-budget", type=int, default=None)
    s.add_argument("--time-limit", type=float, default=None, metavar="SECONDS")
    s.add_argument("--stats", action="store_true")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="benchmark families")
    bsub = b.add_subparsers(dest="family", required=True)
    t = bsub.add_parser("tseitin", help="Tseitin formulas on random regular graphs")
    t.add_argument("--nodes", nargs="+", required=True, help="node counts, e.g. 10,20 or 10..14")
    t.add_argument("--degree", type=int, default=5)
    t.add_argument("--seeds", nargs="+", default=["0"])
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--workers", type=int, default=None)
    t.add_argument("--timeout", type=float, default=60.0, help="per-instance solve limit in seconds")
    t.set_defaults(func=cmd_bench)

    c = sub.add_parser("check-model", help="evaluate a model (v-lines or literals) on a formula")
    c.add_argument("formula")
    c.add_argument("model")
    c.set_defaults(func=cmd_check_model)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
