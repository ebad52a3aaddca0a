"""Command-line front end.

Exit codes: 0 sat, 1 unsat, 2 unknown or out-of-fragment, 3 usage/parse/internal error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import arith as ar
from .formula import And, FormulaError, ParseError, parse, print_formula, show_word
from .oracle import bounded_sat
from .solver import OUT, SAT, UNSAT, solve_problem

EXIT = {SAT: 0, UNSAT: 1}


def build_parser():
    p = argparse.ArgumentParser(prog="chainfree",
                                description="Decide weakly chaining string constraints.")
    p.add_argument("file", help="input file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--classify-only", action="store_true",
                      help="only report the fragment class of each clause")
    mode.add_argument("--oracle", action="store_true",
                      help="bounded brute-force search instead of the decision procedure")
    p.add_argument("--bound", type=int, default=3, help="word-length bound for --oracle")
    p.add_argument("--backend", default=os.environ.get("CHAINFREE_BACKEND", "internal"),
                   help="internal | external:<command>  (default: $CHAINFREE_BACKEND or internal)")
    p.add_argument("--node-limit", type=int, default=ar.DEFAULT_NODE_LIMIT,
                   help="branch-and-bound node limit of the internal backend")
    p.add_argument("--model", action="store_true", help="print a model when sat")
    p.add_argument("--trace", action="store_true", help="log pipeline steps to stderr")
    p.add_argument("--cap", type=int, default=100_000, help="live-clause cap for splitting")
    p.add_argument("--emit-lia", metavar="PATH", help="write the generated QF_LIA problems here")
    return p


def _visible(name):
    return not name.startswith("_")


def _print_model(model, out):
    for v, w in model.items():
        if _visible(v):
            print(f"model: {v} = {show_word(w)}", file=out)


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 3
    logging.basicConfig(level=logging.DEBUG if args.trace else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        with open(args.file, encoding="utf-8") as fh:
            problem = parse(fh.read())
        if args.oracle:
            res = bounded_sat(problem, args.bound)
            if res.found:
                print("verdict: sat", file=out)
                if args.model:
                    _print_model({v: res.witness[v] for v in problem.variables}, out)
                return 0
            print(f"verdict: unknown (no witness up to length {args.bound})", file=out)
            return 2
        backend = ar.make_backend(args.backend, args.node_limit)
        result = solve_problem(problem, backend, cap=args.cap, want_model=args.model,
                               classify_only=args.classify_only, keep_lia=bool(args.emit_lia))
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (OSError, FormulaError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # internal error
        logging.getLogger(__name__).debug("internal error", exc_info=True)
        print(f"error: internal: {type(e).__name__}: {e}", file=sys.stderr)
        return 3

    if args.classify_only:
        print(f"verdict: {result.verdict}", file=out)
        for c in result.clauses:
            print(f"clause {c.index}: {c.kind.value}", file=out)
        return 0

    print(f"verdict: {result.verdict}", file=out)
    for c in result.clauses:
        extra = f" ({c.message})" if c.message else ""
        print(f"clause {c.index}: {c.kind.value} {c.status}{extra}", file=out)
        if args.trace:
            print(f"  atoms: {print_formula(And(tuple(c.clause)))}", file=sys.stderr)
    if result.verdict == OUT:
        w = result.witness
        print("out-of-fragment: non-benign chain", file=out)
        print(f"witness: {w}", file=out)
    if result.model is not None:
        _print_model(result.model, out)
    if args.emit_lia:
        _write_lia(args.emit_lia, result)
    return EXIT.get(result.verdict, 2)


def _write_lia(path, result):
    with open(path, "w", encoding="utf-8") as fh:
        for c in result.clauses:
            for k, lia in enumerate(c.lia, 1):
                fh.write(f"; clause {c.index}, leaf {k}\n")
                fh.write(ar.to_smtlib(lia))
                fh.write("(reset)\n")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
