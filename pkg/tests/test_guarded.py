import random

import pytest

from c1pvass import guarded_analysis as ga
from c1pvass.generate import ModelShape, random_model
from c1pvass.model import ModelError, parse_model, prepare
from c1pvass.oracle import Budget, final_intervals
from c1pvass.zero_analysis import ZeroAnalysis


def loop_model(guard: int):
    """s0 and s1 both loop on +1; s1 needs ``guard`` and leads to f."""
    return parse_model(f"""c1pvass v1
state s0 initial
state s1 lb={guard}
state f final
trans s0 s0 add=1 stack=none
trans s0 s1 add=0 stack=none
trans s1 s1 add=1 stack=none
trans s1 f add=0 stack=none
""")


def test_ladder():
    ladder = ga.GuardLadder.of_guards([4, 2, 2, 0])
    assert ladder.levels == (0, 2, 4) and ladder.start == 0 and ladder.m == 2
    assert [ladder.level_of(g) for g in (0, 1, 2, 3, 4)] == [0, 1, 1, 2, 2]
    back = ga.GuardLadder.of_guards([-3, -1, 0, 2])
    assert back.levels == (-1, 0, 2) and back.start == 1
    with pytest.raises(ValueError):
        ga.GuardLadder((1, 2))


def test_blocks_of_two_levels():
    names = sorted(str(b) for b in ga.blocks(ga.GuardLadder((0, 3))))
    assert names == ["B0", "G+0", "G+1", "G0", "G1", "R0", "R1"]


def test_slices_are_block_acyclic():
    rng = random.Random(9)
    for _ in range(40):
        m = random_model(rng, ModelShape(max_states=5, guard_values=(0, 1, 2, 3)))
        slices, _ = ga.build_cover_slices(prepare(m))
        assert slices.block_acyclic()
        assert slices.pda.well_formed() == []
        for k in (0, 2):
            reach, _, _ = ga.build_reach_slices(prepare(m), k)
            assert reach.pda.well_formed() == []


def test_running_example(fixture_model):
    m = fixture_model("fig1.c1p")
    for k in range(5):
        assert not ga.decide_cover_guarded(m, k)
        assert not ga.decide_reach_guarded(m, k)
    assert ga.decide_bounded_guarded(m)


def test_cover_without_reach(fixture_model):
    m = fixture_model("example-4.2.c1p")
    assert [ga.decide_cover_guarded(m, k) for k in range(4)] == [True, True, True, False]
    assert [ga.decide_reach_guarded(m, k) for k in range(4)] == [False, False, True, False]


@pytest.mark.parametrize("guard, k, cover, reach", [
    (0, 3, True, True),
    (2, 1, True, False),  # s1 forces at least 2 before f
    (2, 0, True, False),
    (2, 2, True, True),
    (5, 5, True, True),
])
def test_loop_guards(guard, k, cover, reach):
    m = loop_model(guard)
    assert ga.decide_cover_guarded(m, k) == cover
    assert ga.decide_reach_guarded(m, k) == reach


def test_guarded_boundedness():
    assert not ga.decide_bounded_guarded(loop_model(3))
    bounded = parse_model("""c1pvass v1
state s0 initial
state s1 lb=1
state f final
trans s0 s1 add=1 stack=none
trans s1 f add=1 stack=none
""")
    assert ga.decide_bounded_guarded(bounded)
    # the +1 loop only pushes a, so the pop of b towards f never fires after it
    stuck = parse_model("""c1pvass v1
state s0 initial
state s1
state s2 lb=2
state f final
trans s0 s1 add=1 stack=none
trans s1 s1 add=1 stack=push:a
trans s0 f add=0 stack=none
trans s1 s2 add=0 stack=none
trans s2 f add=0 stack=pop:b
""")
    assert ga.decide_bounded_guarded(stuck)


def test_non_integer_targets_are_rejected():
    with pytest.raises(ModelError):
        ga.decide_cover_guarded(loop_model(0), 0.5)


def test_degenerates_to_the_polynomial_pipeline():
    rng = random.Random(21)
    for _ in range(12):
        m = random_model(rng, ModelShape(max_states=4))
        za = ZeroAnalysis(m)
        for k in range(3):
            assert ga.decide_cover_guarded(m, k) == za.cover(k)
            assert ga.decide_reach_guarded(m, k) == za.reach(k)
        assert ga.decide_bounded_guarded(m) == (za.bounded or not za.cover_zero)


def test_oracle_witnesses_are_found():
    rng = random.Random(31)
    for _ in range(25):
        m = random_model(rng, ModelShape(max_states=4, guard_values=(0, 1, 2)))
        ivs = final_intervals(m, Budget(10, 5))
        for k in range(3):
            if any(iv.meets_at_least(k) for iv in ivs):
                assert ga.decide_cover_guarded(m, k)
            if any(k in iv for iv in ivs):
                assert ga.decide_reach_guarded(m, k)


def test_query_exposes_artifacts(fixture_model):
    q = ga.cover_query(fixture_model("example-4.2.c1p"), 1)
    assert q.verdict and q.result.sat
    assert q.grammar is not None and q.parikh is not None
    assert q.slices.format().startswith("initial ")
    unsolved = ga.reach_query(fixture_model("example-4.2.c1p"), 1, solve=False)
    assert unsolved.result is None and not unsolved.verdict
