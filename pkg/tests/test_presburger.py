import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from c1pvass import grammar, presburger as pb
from c1pvass.generate import random_cfg

NAMES = ("x", "y", "z")
BOX = 5


def random_formula(rng: random.Random, depth: int = 2):
    if depth == 0 or rng.random() < 0.3:
        coeffs = {v: rng.randint(-3, 3) for v in rng.sample(NAMES, rng.randint(1, 3))}
        return pb.atom(coeffs, rng.choice(pb.OPS), rng.randint(-4, 8))
    parts = [random_formula(rng, depth - 1) for _ in range(rng.randint(1, 3))]
    return pb.conj(*parts) if rng.random() < 0.5 else pb.disj(*parts)


def boxed(f):
    return pb.conj(f, *[pb.atom({v: 1}, "<=", BOX) for v in NAMES])


def brute_force(f):
    for vals in itertools.product(range(BOX + 1), repeat=len(NAMES)):
        if pb.evaluate(f, dict(zip(NAMES, vals))):
            return True
    return False


@given(st.randoms(use_true_random=False))
@settings(max_examples=200, deadline=None)
def test_solver_matches_brute_force(rng):
    f = boxed(random_formula(rng))
    res = pb.solve(f)
    assert res.sat == brute_force(f)
    if res.sat:
        assert pb.evaluate(f, res.assignment)


def test_parity_is_refuted_without_search():
    f = pb.conj(pb.atom({"x": 2, "y": 4}, "=", 7))
    res = pb.solve(f)
    assert not res.sat and res.stats.bb_nodes == 0


def test_unbounded_relaxation_with_integer_obstruction():
    # x - y = 1/2 has rational points on a ray but no integer point
    f = pb.conj(pb.atom({"x": 2, "y": -2}, "=", 1), pb.atom({"x": 1, "y": 1}, ">=", 3))
    assert not pb.solve(f).sat


def test_strict_atoms_and_empty_formulas():
    assert pb.solve(pb.TRUE).sat
    assert not pb.solve(pb.FALSE).sat
    assert not pb.solve(pb.conj(pb.atom({"x": 1}, ">", 2), pb.atom({"x": 1}, "<", 3))).sat
    assert pb.solve(pb.conj(pb.atom({"x": 1}, ">", 2), pb.atom({"x": 1}, "<", 4))).assignment["x"] == 3


def test_variables_are_nonnegative():
    assert not pb.solve(pb.atom({"x": 1}, "<", 0)).sat


def test_budget_is_enforced():
    # a knapsack with many fractional vertices
    f = pb.conj(pb.atom({"a": 6, "b": 10, "c": 15}, "=", 7 * 30 + 1), pb.atom({"a": 1}, "<=", 1))
    assert pb.solve(f, budget=1).status == "RESOURCE-EXCEEDED"
    assert pb.solve(f).status in ("SAT", "UNSAT")


def test_lattice_feasibility():
    eq = pb.atom({"x": 6, "y": 10}, "=", 4)
    assert pb.lattice_feasible([eq])
    assert not pb.lattice_feasible([pb.atom({"x": 6, "y": 10}, "=", 3)])
    assert not pb.lattice_feasible([pb.atom({"x": 1, "y": 1}, "=", 1), pb.atom({"x": 1, "y": 1}, "=", 2)])
    # inequalities are ignored
    assert pb.lattice_feasible([pb.atom({"x": 2}, "<=", 1)])


def test_bound_propagation():
    rows = [({0: 1, 1: -1}, 0), ({1: 2}, 7)]  # x0 <= x1, 2 x1 <= 7
    assert pb.propagate_upper_bounds(rows, 2) == {0: 3, 1: 3}
    assert pb.propagate_upper_bounds([({0: 1, 1: -1}, 0)], 2) == {}


def test_simplex_detects_infeasibility_incrementally():
    lp = pb.DualSimplex(2)
    lp.add({0: 1, 1: 1}, ">=", 3)
    assert lp.solve()
    assert sum(lp.solution()) == 3
    lp.add({0: 1}, "<=", 1)
    lp.add({1: 2}, "<=", 5)
    assert lp.solve()
    x = lp.solution()
    assert x[0] <= 1 and x[1] <= Fraction(5, 2) and sum(x) == 3
    snapshot = lp.copy()
    lp.add({1: 1}, "<=", 1)
    assert not lp.solve()
    assert snapshot.solve()


def test_smtlib_output():
    f = pb.conj(pb.atom({"#a": 2, "y0": -1}, ">=", 1), pb.disj(pb.atom({"z[S]": 1}, "=", 0), pb.TRUE))
    text = pb.to_smtlib(f)
    assert text.startswith("(set-logic QF_LIA)\n")
    assert "(declare-const |#a| Int)" in text and "(assert (>= |z[S]| 0))" in text
    assert text.rstrip().endswith("(check-sat)")
    assert text.count("(") == text.count(")")


def test_paired_formula_shares_disjuncts():
    f = pb.disj(pb.atom({"x": 1}, "<=", 2), pb.atom({"x": 1, "y": -1}, ">=", 1))
    g = pb.conj(pb.paired(f, lambda v: "d." + v), pb.atom({"d.x": 1}, ">=", 1))
    res = pb.solve(g)
    assert res.sat
    asg = res.assignment
    assert asg["x"] - asg["y"] >= 1 and asg["d.x"] - asg["d.y"] >= 0
    h = pb.homogenize(pb.atom({"x": 1}, "<", 3), lambda v: "d." + v)
    assert h == pb.Atom((("d.x", 1),), "<=", 0)


def parikh_images(g, letters, norm):
    return {tuple(w.count(a) for a in letters) for w in grammar.bounded_language(g, norm)}


@given(st.randoms(use_true_random=False))
@settings(max_examples=40, deadline=None)
def test_parikh_formula_round_trip(rng):
    g = random_cfg(rng, n_vars=4, letters="ab", max_prods=3, max_body=3)
    if grammar.emptiness(g):
        return
    pf = pb.parikh_formula(grammar.inline_single_productions(g), alphabet="ab")
    images = parikh_images(g, "ab", 5)
    for na in range(6):
        for nb in range(6 - na):
            f = pb.conj(pf.formula, pb.atom({"#a": 1}, "=", na), pb.atom({"#b": 1}, "=", nb))
            assert pb.solve(f, repairs=[pf.repair]).sat == ((na, nb) in images)


def test_parikh_formula_excludes_detached_cycles():
    # B -> b B is a cycle that never reaches the start symbol
    g = grammar.Cfg(("S", "B"), frozenset("ab"), (("S", ("a",)), ("B", ("b", "B")), ("B", ("b",))), "S")
    pf = pb.parikh_formula(g, alphabet="ab")
    assert not pb.solve(pb.conj(pf.formula, pb.atom({"#b": 1}, ">=", 1)), repairs=[pf.repair]).sat


def test_parikh_formula_needs_a_start_production():
    g = grammar.Cfg(("S",), frozenset("a"), (), "S")
    with pytest.raises(ValueError):
        pb.parikh_formula(g)
