import random

import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from c1pvass.generate import ModelShape, random_model
from c1pvass.model import (C1pvassModel, ModelError, Transition, erase_guards, flatten_updates,
                           format_rational, parse_model, parse_rational, pop, prepare, push,
                           serialize_model, single_final, validate, with_cover_target)
from c1pvass.oracle import Budget, search

ONE_EDGE = """c1pvass v1
state s0 initial
state f final
trans s0 f add={add} stack=none
"""


def test_parse_fixture(fixture_model):
    m = fixture_model("fig1.c1p")
    assert m.initial == "s0" and m.finals == {"f"}
    assert m.guard("f") == 4 and m.guard("s1") == 2
    assert Transition("s0", "s1", 2, push("a")) in m.transitions
    assert Transition("s4", "f", 0, pop("a")) in m.transitions
    assert not m.is_flat() and not m.is_zero_guarded()


@given(st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_serialize_round_trip(rng):
    m = random_model(rng, ModelShape(max_states=5, max_update=3, guard_values=(0, 1, 5)))
    again = parse_model(serialize_model(m))
    assert again.states == m.states
    assert again.finals == m.finals
    assert set(again.transitions) == set(m.transitions)
    assert again.guards == m.guards


@pytest.mark.parametrize("text, fragment", [
    ("c1pvass v2\nstate s initial final\n", "header"),
    ("c1pvass v1\nstate s0\nstate f final\n", "initial"),
    ("c1pvass v1\nstate s0 initial\n", "final"),
    ("c1pvass v1\nstate s0 initial lb=1 final\n", "initial guard nonzero"),
    ("c1pvass v1\nstate s0 initial final\ntrans s0 x add=1 stack=none\n", "undeclared"),
    ("c1pvass v1\nstate s0 initial final\ntrans s0 s0 add=one stack=none\n", "counter update"),
    ("c1pvass v1\nstate s0 initial final\ntrans s0 s0 add=1 stack=swap:a\n", "stack operation"),
    ("c1pvass v1\nstate s0 initial final\ntrans s0 s0 add=1 stack=none\ntrans s0 s0 add=0 stack=none\n",
     "duplicate transition"),
])
def test_parse_rejects(text, fragment):
    with pytest.raises(ModelError) as err:
        parse_model(text)
    assert any(fragment in d for d in err.value.diagnostics), err.value.diagnostics


def test_validate_reports_every_problem():
    m = C1pvassModel.build(["s0", "s0"], "q", [], [Transition("s0", "z", 1)], {"s0": -1})
    diags = validate(m)
    assert len(diags) >= 4


@pytest.mark.parametrize("text, value", [("0", 0), ("3", 3), ("1/2", Fraction(1, 2)), ("6/4", Fraction(3, 2))])
def test_rationals(text, value):
    assert parse_rational(text) == value
    assert parse_rational(format_rational(parse_rational(text))) == value


def test_rational_rejects_negative_and_garbage():
    for bad in ("-1", "x", "1/0"):
        with pytest.raises(ModelError):
            parse_rational(bad)


def test_flatten_keeps_reachable_values():
    m = parse_model(ONE_EDGE.format(add=3))
    flat = flatten_updates(m)
    assert flat.is_flat()
    budget = Budget(40, 12)
    assert search(flat, "reach", 3, budget) is not None
    assert search(flat, "reach", Fraction(5, 2), budget) is not None
    assert search(flat, "cover", Fraction(7, 2), budget) is None


def test_flatten_negative_update():
    m = parse_model("""c1pvass v1
state s0 initial
state s1
state f final
trans s0 s1 add=3 stack=none
trans s1 f add=-2 stack=none
""")
    flat = flatten_updates(m)
    budget = Budget(60, 12)
    assert search(flat, "reach", 0, budget) is not None
    assert search(flat, "reach", 1, budget) is not None
    assert search(flat, "cover", Fraction(3), budget) is None


def test_flat_models_are_left_alone(fixture_model):
    m = fixture_model("chain2.c1p")
    assert flatten_updates(m) == m


def test_single_final_and_cover_target(fixture_model):
    m = fixture_model("example-4.2.c1p")
    one = single_final(m)
    assert len(one.finals) == 1
    target = with_cover_target(m, 3)
    (t,) = target.finals
    assert target.guard(t) == 3
    assert t not in m.states


def test_erase_and_prepare(fixture_model):
    m = fixture_model("fig1.c1p")
    z = erase_guards(m)
    assert z.is_zero_guarded() and z.transitions == m.transitions
    p = prepare(m)
    assert p.is_flat() and len(p.finals) == 1


def test_model_size_counts_binary_updates():
    small = parse_model(ONE_EDGE.format(add=1))
    big = parse_model(ONE_EDGE.format(add=1000))
    assert big.size() - small.size() == (1000).bit_length() - 1


def test_random_models_validate():
    rng = random.Random(3)
    for _ in range(50):
        assert validate(random_model(rng, ModelShape(guard_values=(0, 2)))) == []
