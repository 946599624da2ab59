"""Acceptance criteria 1 to 9; each test records one PASS/FAIL line for the summary."""

import contextlib
import io
import random
import time
from fractions import Fraction

from c1pvass import cli, grammar, presburger as pb
from c1pvass import guarded_analysis as ga
from c1pvass.generate import ModelShape, random_cfg, random_model
from c1pvass.model import erase_guards, serialize_model
from c1pvass.oracle import Budget, check_normal_form, final_intervals, normalize_run
from c1pvass.zero_analysis import ZeroAnalysis, build_unary_pda

from conftest import ACCEPTANCE, load


class Record:
    """Collects failures for one criterion and files a single summary line."""

    def __init__(self, n: int):
        self.n = n
        self.failures: list[str] = []
        self.start = time.perf_counter()

    def expect(self, cond: bool, what: str) -> None:
        if not cond:
            self.failures.append(what)

    def finish(self, limit: float = None, extra: str = "") -> None:
        took = time.perf_counter() - self.start
        if limit is not None and took >= limit:
            self.failures.append(f"took {took:.1f}s, limit {limit:.0f}s")
        detail = f"{took:.2f}s {extra}".rstrip()
        if self.failures:
            detail += " | " + "; ".join(self.failures[:5])
        ACCEPTANCE[self.n] = (not self.failures, detail)
        assert not self.failures, self.failures


def test_criterion_1_running_example():
    rec = Record(1)
    m = load("fig1.c1p")
    for k in range(5):
        rec.expect(not ga.decide_cover_guarded(m, k), f"cover {k} should be NO")
        rec.expect(not ga.decide_reach_guarded(m, k), f"reach {k} should be NO")
    rec.expect(ga.decide_bounded_guarded(m), "guarded model should be BOUNDED")
    za = ZeroAnalysis(erase_guards(m))
    rec.expect(za.cover(4), "zeroed cover 4 should be YES")
    rec.expect(not za.bounded, "zeroed model should be UNBOUNDED")
    rec.finish(limit=5)


def test_criterion_2_cover_without_reach():
    rec = Record(2)
    m = load("example-4.2.c1p")
    rec.expect(ga.decide_cover_guarded(m, 1), "cover 1 should be YES")
    rec.expect(not ga.decide_reach_guarded(m, 1), "reach 1 should be NO")
    rec.finish(limit=5)


def test_criterion_3_single_increment():
    rec = Record(3)
    m = load("single.c1p")
    za = ZeroAnalysis(m)
    rec.expect(za.cover(0), "cover 0 should be YES")
    rec.expect(not za.reach(0), "reach 0 should be NO")
    rec.finish()


def test_criterion_4_dense_normal_form():
    rec = Record(4)
    updates = [1, 1, -1, -1, 1, -1, 1]
    scalings = [1, Fraction(4, 5), Fraction(9, 10), Fraction(9, 10), 1, 1, 1]
    counters, c = [], Fraction(0)
    for u, g in zip(updates, scalings):
        c += u * Fraction(g)
        counters.append(c)
    run = normalize_run(updates, scalings)
    rec.expect(run.signed() == ["+1", "+1", "-d", "-d", "+e", "-1", "+e"], f"tags {run.signed()}")
    problems = check_normal_form(run, counters, 1)
    rec.expect(not problems, f"normal-form checks: {problems}")
    rec.finish(extra=" ".join(run.signed()))


def test_criterion_5_oracle_agreement():
    rec = Record(5)
    rng = random.Random(2024)
    ks = [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)]
    checked = witnesses = 0
    for i in range(200):
        m = random_model(rng, ModelShape(max_states=6, stack_symbols=2))
        za = ZeroAnalysis(m)
        ivs = final_intervals(m, Budget(14, 7))
        for k in ks:
            for mode in ("cover", "reach"):
                seen = any(iv.meets_at_least(k) if mode == "cover" else k in iv for iv in ivs)
                decided = za.cover(k) if mode == "cover" else za.reach(k)
                checked += 1
                witnesses += seen
                rec.expect(decided or not seen, f"model {i} {mode} k={k}: oracle witness but procedure NO")
    rec.finish(limit=120, extra=f"queries={checked} oracle-witnesses={witnesses} "
                                f"disagreements={len(rec.failures)}")


def _cli(argv) -> int:
    with contextlib.redirect_stdout(io.StringIO()):
        return cli.main(argv)


def test_criterion_6_guarded_degeneration(tmp_path):
    rec = Record(6)
    rng = random.Random(77)
    disagreements = 0
    for i in range(50):
        m = random_model(rng, ModelShape(max_states=5, stack_symbols=2))
        path = tmp_path / f"m{i}.c1p"
        path.write_text(serialize_model(m))
        for k in range(4):
            for what in ("cover", "reach"):
                base = ["check", what, "-k", str(k), str(path)]
                poly, forced = _cli(base), _cli(base + ["--force-guarded"])
                if poly != forced:
                    disagreements += 1
                    rec.expect(False, f"model {i} {what} k={k}: exit {poly} vs {forced}")
    rec.finish(limit=300, extra=f"disagreements={disagreements}")


def _finite_cnfs():
    rng = random.Random(5)
    for _ in range(200):
        m = random_model(rng, ModelShape(max_states=6))
        cnf = grammar.to_cnf(grammar.pda_to_cfg(build_unary_pda(m)))
        if cnf.productions and grammar.finiteness(cnf):
            yield cnf
    for _ in range(300):
        cnf = grammar.to_cnf(random_cfg(rng, n_vars=6, max_prods=3, max_body=3))
        if cnf.productions and grammar.finiteness(cnf):
            yield cnf


def test_criterion_7_fixpoint_iterations():
    rec = Record(7)
    count = 0
    for cnf in _finite_cnfs():
        count += 1
        it = grammar.longest_word_lengths(cnf).iterations
        rec.expect(it <= len(cnf.variables), f"{it} iterations for {len(cnf.variables)} variables")
    rec.expect(count >= 50, f"only {count} finite grammars generated")
    rec.finish(extra=f"grammars={count} violations={len(rec.failures)}")


def _images(words, letters):
    return {tuple(w.count(a) for a in letters) for w in words}


def test_criterion_8_parikh_round_trip():
    rec = Record(8)
    norm = 6
    rng = random.Random(8)
    letters = "ab"
    done = 0
    while done < 50:
        g = random_cfg(rng, n_vars=5, letters=letters, max_prods=3, max_body=3)
        if grammar.emptiness(g):
            continue
        done += 1
        pf = pb.parikh_formula(grammar.inline_single_productions(g), alphabet=letters)
        small = _images(grammar.bounded_language(g, norm), letters)
        for na in range(norm + 1):
            for nb in range(norm + 1 - na):
                fixed = pb.conj(pf.formula, pb.atom({"#a": 1}, "=", na), pb.atom({"#b": 1}, "=", nb))
                sat = pb.solve(fixed, repairs=[pf.repair]).sat
                rec.expect(sat or (na, nb) not in small, f"grammar {done}: ({na},{nb}) missing (completeness)")
                rec.expect(not sat or (na, nb) in small, f"grammar {done}: ({na},{nb}) spurious (soundness)")
        # an unconstrained model must also be a real Parikh image
        res = pb.solve(pf.formula, repairs=[pf.repair])
        rec.expect(res.sat, f"grammar {done}: nonempty grammar but formula UNSAT")
        if res.sat:
            vec = tuple(res.assignment["#" + a] for a in letters)
            words = grammar.bounded_language(g, sum(vec))
            rec.expect(vec in _images(words, letters), f"grammar {done}: free model {vec} not realized")
    rec.finish(limit=120, extra=f"grammars={done} failures={len(rec.failures)}")


def test_criterion_9_intervals():
    rec = Record(9)
    expected = {"chain2.c1p": "(0,2]", "chain-pm.c1p": "[0,1)", "single.c1p": "(0,1]"}
    shown = []
    for name, want in expected.items():
        m = load(name)
        got = ZeroAnalysis(m).interval()
        shown.append(f"{name}={got.format()}")
        rec.expect(got.format() == want, f"{name}: {got.format()} != {want}")
        # the oracle's witnesses must stay inside the reported interval
        for iv in final_intervals(m, Budget(14, 7)):
            for probe in (iv.lo, iv.hi):
                if probe is not None and probe in iv:
                    rec.expect(probe in got, f"{name}: oracle value {probe} outside {got.format()}")
    rec.finish(extra=" ".join(shown))
