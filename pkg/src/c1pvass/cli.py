"""Command-line entry point.

Exit codes: 0 for YES, BOUNDED or plain success; 1 for NO or UNBOUNDED;
2 for usage and model errors; 3 when the solver budget runs out.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import grammar, guarded_analysis as ga, presburger as pb
from .model import (C1pvassModel, ModelError, format_rational, parse_model,
                    parse_rational, validate)
from .oracle import Budget, search
from .zero_analysis import (ZeroAnalysis, ZeroAnalysisError, build_cover_zero_pda, build_reach_zero_pda,
                            build_unary_pda)

EXIT = {"YES": 0, "NO": 1, "BOUNDED": 0, "UNBOUNDED": 1, "INTERVAL": 0, "EMPTY": 0,
        "RESOURCE-EXCEEDED": 3, "OK": 0, "INVALID": 2, "WITNESS": 0, "NO-WITNESS-WITHIN-BUDGET": 1,
        "EMITTED": 0}


@dataclass
class QueryResult:
    verdict: str
    payload: dict = field(default_factory=dict)
    micros: int = 0
    text: Optional[str] = None  # human-readable line(s); defaults to the verdict

    @property
    def exit_code(self) -> int:
        return EXIT[self.verdict]

    def render(self, as_json: bool) -> str:
        if as_json:
            return json.dumps({"verdict": self.verdict, "payload": self.payload, "micros": self.micros},
                              sort_keys=True)
        return self.text if self.text is not None else self.verdict


class UsageError(Exception):
    pass


def _load(path: str) -> C1pvassModel:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")
    return parse_model(text)


def _guarded(model: C1pvassModel, args) -> bool:
    return getattr(args, "force_guarded", False) or not model.is_zero_guarded()


def _integer_k(k: Fraction) -> int:
    if k.denominator != 1:
        raise UsageError(f"guarded queries take an integer k, got {format_rational(k)}")
    return int(k)


def _yes(b: bool, **payload) -> QueryResult:
    return QueryResult("YES" if b else "NO", payload)


def cmd_check(args) -> QueryResult:
    model = _load(args.file)
    if args.what == "bound":
        if _guarded(model, args):
            return QueryResult("BOUNDED" if ga.decide_bounded_guarded(model, args.budget) else "UNBOUNDED",
                               {"pipeline": "guarded"})
        za = ZeroAnalysis(model)
        if not za.cover_zero:
            return QueryResult("BOUNDED", {"pipeline": "zero", "empty": True})
        rep = za.bound()
        if not rep.bounded:
            return QueryResult("UNBOUNDED", {"pipeline": "zero"})
        right = "closed" if rep.right_closed else "open"
        return QueryResult("BOUNDED", {"pipeline": "zero", "b": rep.b, "right": right},
                           text=f"BOUNDED b={rep.b} right={right}")
    if args.k is None:
        raise UsageError(f"check {args.what} needs -k")
    k = parse_rational(args.k)
    if _guarded(model, args):
        ki = _integer_k(k)
        fn = ga.decide_reach_guarded if args.what == "reach" else ga.decide_cover_guarded
        return _yes(fn(model, ki, args.budget), pipeline="guarded", k=str(ki))
    za = ZeroAnalysis(model)
    verdict = za.reach(k) if args.what == "reach" else za.cover(k)
    return _yes(verdict, pipeline="zero", k=format_rational(k))


def cmd_interval(args) -> QueryResult:
    model = _load(args.file)
    if not model.is_zero_guarded():
        raise UsageError("interval is only available for models whose guards are all 0")
    iv = ZeroAnalysis(model).interval()
    if iv.empty:
        return QueryResult("EMPTY", {"interval": "EMPTY"}, text="INTERVAL EMPTY")
    payload = {"interval": iv.format(), "lo": format_rational(iv.lo), "lo_closed": iv.lo_closed,
               "hi": None if iv.hi is None else format_rational(iv.hi), "hi_closed": iv.hi_closed}
    return QueryResult("INTERVAL", payload, text=f"INTERVAL {iv.format()}")


def _zero_pda(model: C1pvassModel, which: str):
    if not model.is_zero_guarded():
        raise UsageError(f"the {which} PDA is only defined for models whose guards are all 0")
    return {"unary": build_unary_pda, "cover0": build_cover_zero_pda, "reach0": build_reach_zero_pda}[which](model)


def _query(model: C1pvassModel, mode: str, k: Fraction, budget: int, solve: bool) -> ga.Query:
    ki = _integer_k(k)
    fn = ga.reach_query if mode == "reach" else ga.cover_query
    return fn(model, ki, budget, solve=solve)


def cmd_emit(args) -> QueryResult:
    model = _load(args.file)
    k = parse_rational(args.k or "0")
    if args.what == "pda":
        q = _query(model, args.mode, k, args.budget, solve=False)
        return QueryResult("EMITTED", {"kind": "pda"}, text=q.slices.format().rstrip("\n"))
    if args.what == "cnf":
        if args.of in ("cover", "reach"):
            pda = _query(model, args.of, k, args.budget, solve=False).slices.pda
        else:
            pda = _zero_pda(model, args.of)
        cnf = grammar.to_cnf(grammar.pda_to_cfg(pda))
        return QueryResult("EMITTED", {"kind": "cnf"}, text=grammar.format_cnf(cnf).rstrip("\n"))
    q = _query(model, args.mode, k, args.budget, solve=False)
    formula = q.formula if q.formula is not None else pb.FALSE
    return QueryResult("EMITTED", {"kind": "parikh"}, text=pb.to_smtlib(formula).rstrip("\n"))


def cmd_oracle(args) -> QueryResult:
    model = _load(args.file)
    k = parse_rational(args.k or "0")
    run = search(model, args.mode, k, Budget(args.max_steps, args.max_stack))
    if run is None:
        return QueryResult("NO-WITNESS-WITHIN-BUDGET", {})
    path = " ".join([model.initial] + [t.dst for t in run.path])
    return QueryResult("WITNESS", run.to_json(), text=f"WITNESS {path} interval={run.final_interval.format()}")


def cmd_validate(args) -> QueryResult:
    try:
        model = _load(args.file)
    except ModelError as e:
        return QueryResult("INVALID", {"diagnostics": e.diagnostics}, text="\n".join(e.diagnostics))
    diags = validate(model)
    if diags:
        return QueryResult("INVALID", {"diagnostics": diags}, text="\n".join(diags))
    return QueryResult("OK", {"states": len(model.states), "transitions": len(model.transitions)})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="c1pvass", description="Decide queries on one-dimensional continuous pushdown VASS.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON envelope {verdict, payload, micros}")
    common.add_argument("--budget", type=int, default=pb.DEFAULT_BUDGET, help="branch-and-bound node budget")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="reach / cover / bound")
    c.add_argument("what", choices=["reach", "cover", "bound"])
    c.add_argument("-k", help="target value p or p/q (integers only for guarded models)")
    c.add_argument("--force-guarded", action="store_true", help="use the guarded pipeline even when all guards are 0")
    c.add_argument("file")
    c.set_defaults(func=cmd_check)

    i = sub.add_parser("interval", parents=[common], help="reachable interval of a guard-free model")
    i.add_argument("file")
    i.set_defaults(func=cmd_interval)

    e = sub.add_parser("emit", parents=[common], help="print derived artifacts")
    e.add_argument("what", choices=["pda", "cnf", "parikh"])
    e.add_argument("--mode", choices=["cover", "reach"], default="cover")
    e.add_argument("--of", choices=["unary", "cover0", "reach0", "cover", "reach"], default="unary",
                   help="which PDA to convert for 'emit cnf'")
    e.add_argument("-k", help="target value for slice constructions (default 0)")
    e.add_argument("file")
    e.set_defaults(func=cmd_emit)

    o = sub.add_parser("oracle", parents=[common], help="search for a witness run")
    o.add_argument("file")
    o.add_argument("--mode", choices=["reach", "cover", "any"], default="reach")
    o.add_argument("-k", help="target value p or p/q (default 0)")
    o.add_argument("--max-steps", type=int, default=14)
    o.add_argument("--max-stack", type=int, default=7)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate", parents=[common], help="check a model file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    start = time.perf_counter()
    try:
        result = args.func(args)
    except (UsageError, ModelError, ZeroAnalysisError) as e:
        for line in getattr(e, "diagnostics", None) or [str(e)]:
            print(f"error: {line}", file=sys.stderr)
        return 2
    except pb.ResourceExceeded as e:
        result = QueryResult("RESOURCE-EXCEEDED", {"reason": str(e)})
    result.micros = int((time.perf_counter() - start) * 1e6)
    print(result.render(args.json))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
