"""Decisions for models with lower-bound guards.

Each question becomes: does the slice PDA accept a word whose Parikh image
satisfies a linear side condition?  The slice PDA is a stack of copies (blocks)
of the model, one group per guard level, and the letters it reads record how
many +1 and -1 transitions were taken in which level.

Coverability uses one slice PDA.  Reachability runs a forward slice PDA and a
backward one (on the reversed run, started from k) in lockstep, which yields the
conditions on every prefix and every suffix of the run at once.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import grammar, presburger as pb
from .model import (C1pvassModel, ModelError, Pda, PdaEdge, erase_guards, flatten_updates,
                    require_valid, single_final, with_cover_target)
from .zero_analysis import ZeroAnalysis



@dataclass(frozen=True)
class GuardLadder:
    """Distinct guard values, lowest first.  Runs start in level ``start``.

    Levels below ``start`` only occur on the backward side, where guards are
    shifted down by k; all negative shifted guards share the single level -1.
    """

    levels: tuple[int, ...]
    start: int = 0

    def __post_init__(self):
        if list(self.levels) != sorted(set(self.levels)):
            raise ValueError("levels must be strictly increasing")
        if not 0 <= self.start < len(self.levels) or self.levels[self.start] != 0:
            raise ValueError("the start level must have value 0")

    @property
    def m(self) -> int:
        return len(self.levels) - 1

    @staticmethod
    def of_guards(guards: Iterable[int]) -> "GuardLadder":
        values = set(guards) | {0}
        if min(values) < 0:
            values = {v for v in values if v >= 0} | {-1}
        levels = tuple(sorted(values))
        return GuardLadder(levels, levels.index(0))

    def level_of(self, guard: int) -> int:
        """Index of the lowest level whose blocks contain a state with this guard."""
        for i, v in enumerate(self.levels):
            if guard <= v:
                return i
        raise ValueError(f"guard {guard} above the ladder")


@dataclass(frozen=True)
class SliceLetter:
    kind: str  # "a", "a'", "b"
    index: int

    def __str__(self):
        return f"{self.kind}{self.index}"


@dataclass(frozen=True, order=True)
class Block:
    """``G``: no nonzero update since entering the level; ``G+``: only +1 since;
    ``B``: entered by a -1 straight from ``G`` of the level above, so the counter
    just dropped below that level; ``R``: anything else."""

    tag: str
    level: int

    def __str__(self):
        return f"{self.tag}{self.level}"


@dataclass(frozen=True)
class SlicePda:
    pda: Pda
    provenance: dict  # PDA state -> (model state, block label)
    block_edges: frozenset  # (block label, block label) pairs, self-loops excluded
    letters: tuple[str, ...] = ()

    def block_acyclic(self) -> bool:
        edges = defaultdict(set)
        nodes = set()
        for a, b in self.block_edges:
            edges[a].add(b)
            nodes.update((a, b))
        return not grammar.has_cycle(sorted(nodes), edges)

    def format(self) -> str:
        p = self.pda
        lines = [f"initial {p.initial}"]
        for s in sorted(p.states):
            if s in self.provenance:
                orig, block = self.provenance[s]
                lines.append(f"state {orig}@{block}" + (" final" if s in p.finals else ""))
        for e in sorted(p.edges, key=lambda e: (e.src, e.dst, e.letter, str(e.stack))):
            lines.append(f"edge {e.src} -> {e.dst} read={e.letter or '@eps'} stack={e.stack}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# block structure


def blocks(ladder: GuardLadder) -> list[Block]:
    out = []
    for i in range(ladder.start, ladder.m + 1):
        out += [Block("G", i), Block("G+", i), Block("R", i)]
        if i >= 1:
            out.append(Block("B", i - 1))
    return sorted(out)


def block_moves(ladder: GuardLadder, update: int) -> list[tuple[Block, Block, Optional[SliceLetter]]]:
    """Which block changes a transition with this update may make, and what it reads."""
    bl = blocks(ladder)
    if update == 0:
        return [(b, b, None) for b in bl]
    moves = []
    top = ladder.m
    for i in range(ladder.start, top + 1):
        G, Gp, R = Block("G", i), Block("G+", i), Block("R", i)
        if update > 0:
            a, a2 = SliceLetter("a", i), SliceLetter("a'", i)
            moves += [(Gp, Gp, a), (R, R, a), (G, Gp, a)]
            if i >= 1:
                moves.append((Block("B", i - 1), R, a))
            if i < top:
                moves += [(G, Block("G", i + 1), a2), (Gp, Block("G", i + 1), a2), (R, Block("R", i + 1), a2)]
        else:
            b = SliceLetter("b", i)
            moves += [(R, R, b), (Gp, R, b)]
            if i >= 1:
                B = Block("B", i - 1)
                moves += [(B, B, b), (G, B, b)]
    return moves


def member(ladder: GuardLadder, block: Block, guard: int) -> bool:
    return guard <= ladder.levels[block.level]


def level_entry_formula(ladder: GuardLadder, count: Callable[[SliceLetter], dict]) -> pb.Formula:
    """Level-entry conditions: entering level k by an a' letter needs enough +1
    transitions below it, strictly more if some -1 happened before."""

    def summed(letters) -> dict:
        acc = defaultdict(int)
        for x in letters:
            for v, c in count(x).items():
                acc[v] += c
        return acc

    parts = []
    for k in range(ladder.start + 1, ladder.m + 1):
        below = range(ladder.start, k)
        ups = summed([SliceLetter("a", i) for i in below] + [SliceLetter("a'", i) for i in below])
        downs = summed(SliceLetter("b", i) for i in below)
        lk = ladder.levels[k]
        parts.append(pb.disj(
            pb.atom(count(SliceLetter("a'", k - 1)), "=", 0),
            pb.conj(pb.atom(ups, ">=", lk), pb.atom(downs, "=", 0)),
            pb.conj(pb.atom(ups, ">", lk), pb.atom(downs, ">", 0)),
        ))
    return pb.conj(*parts) if parts else pb.TRUE


def _single(letter: SliceLetter) -> dict:
    return {pb.letter_var(str(letter)): 1}


def cover_formula(ladder: GuardLadder) -> pb.Formula:
    return level_entry_formula(ladder, _single)


# ---------------------------------------------------------------------------
# coverability


def _prepared(model: C1pvassModel) -> C1pvassModel:
    require_valid(model)
    return flatten_updates(model)


def build_cover_slices(model: C1pvassModel) -> tuple[SlicePda, GuardLadder]:
    """Slice PDA of a flattened single-final model."""
    if not model.is_flat() or len(model.finals) != 1:
        raise ModelError("cover slices need a flattened model with a single final state")
    ladder = GuardLadder.of_guards(model.guards.values())
    guards = model.guards
    (final,) = model.finals

    def name(s, b):
        return f"{s}@{b}"

    edges = []
    block_edges = set()
    for t in model.transitions:
        for b1, b2, letter in block_moves(ladder, t.update):
            if member(ladder, b1, guards[t.src]) and member(ladder, b2, guards[t.dst]):
                edges.append(PdaEdge(name(t.src, b1), name(t.dst, b2), str(letter) if letter else "", t.stack))
                if b1 != b2:
                    block_edges.add((str(b1), str(b2)))
    bl = blocks(ladder)
    prov = {name(s, b): (s, str(b)) for b in bl for s in model.states if member(ladder, b, guards[s])}
    finals = frozenset(name(final, b) for b in bl if name(final, b) in prov)
    letters = tuple(sorted({e.letter for e in edges if e.letter}))
    pda = Pda(tuple(sorted(prov)), frozenset(letters), tuple(edges), name(model.initial, Block("G", 0)),
              finals, model.stack_alphabet)
    return SlicePda(pda, prov, frozenset(block_edges), letters), ladder


def _check_k(k) -> int:
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise ModelError(f"guarded queries need a nonnegative integer k, got {k}")
    return int(k)


@dataclass
class Query:
    """Everything a guarded decision builds, kept for inspection and emission."""

    slices: SlicePda
    grammar: Optional[grammar.Cfg]
    formula: Optional[pb.Formula]
    parikh: Optional[pb.ParikhFormula]
    result: Optional[pb.SolveResult] = None
    notes: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        if self.result is None:
            return False
        if self.result.status == "RESOURCE-EXCEEDED":
            raise pb.ResourceExceeded("solver budget exhausted")
        return self.result.sat


def _grammar_of(slices: SlicePda) -> Optional[grammar.Cfg]:
    g = grammar.pda_to_cfg(slices.pda)
    if grammar.emptiness(g):
        return None
    return grammar.inline_single_productions(g)


def _finish(slices: SlicePda, side: Callable[[Callable[[str], dict]], pb.Formula],
            budget: int, solve: bool) -> Query:
    g = _grammar_of(slices)
    if g is None:
        return Query(slices, None, None, None, None, ["slice PDA language is empty"])
    pf = pb.parikh_formula(g)
    formula = pb.conj(side(lambda letter: {pf.letter_vars[letter]: 1} if letter in pf.letter_vars else {}),
                      pf.formula)
    q = Query(slices, g, formula, pf)
    if solve:
        q.result = pb.solve(formula, budget, repairs=[pf.repair])
    return q


def cover_query(model: C1pvassModel, k, budget: int = pb.DEFAULT_BUDGET, solve: bool = True) -> Query:
    k = _check_k(k)
    m = with_cover_target(_prepared(model), k)
    slices, ladder = build_cover_slices(m)
    return _finish(slices, lambda cnt: level_entry_formula(ladder, lambda x: cnt(str(x))), budget, solve)


def decide_cover_guarded(model: C1pvassModel, k, budget: int = pb.DEFAULT_BUDGET) -> bool:
    return cover_query(model, k, budget).verdict


# ---------------------------------------------------------------------------
# reachability


def _reversed_moves(ladder: GuardLadder, update: int):
    return block_moves(ladder, -update)


def build_reach_slices(model: C1pvassModel, k: int) -> tuple[SlicePda, GuardLadder, Optional[GuardLadder]]:
    """Lockstep product of the forward slice PDA and the backward one.

    The backward copy walks the reversed run from the final state, with the
    counter starting at k, so its guards are shifted down by k.  A product edge
    for a transition u -> v pairs a forward block move (f1 -> f2) with a
    backward block move (b2 -> b1) of the reversed transition v -> u, and joins
    (u, f1, b1) to (v, f2, b2).  If only the final state has a shifted guard of
    at least 0 (and that one at most 0) the backward side constrains nothing
    and is dropped.
    """
    if not model.is_flat() or len(model.finals) != 1:
        raise ModelError("reach slices need a flattened model with a single final state")
    (final,) = model.finals
    guards = model.guards
    fwd = GuardLadder.of_guards(guards.values())
    shifted = {s: g - k for s, g in guards.items()}
    need_bwd = shifted[final] > 0 or any(h >= 0 for s, h in shifted.items() if s != final)
    bwd = GuardLadder.of_guards(shifted.values()) if need_bwd else None

    def fl(x: Optional[SliceLetter]) -> str:
        return f"F{x}" if x else ""

    def bl(x: Optional[SliceLetter]) -> str:
        return f"B{x}" if x else ""

    def combine(a: str, b: str) -> str:
        return "/".join(p for p in (a, b) if p)

    def label(fb: Block, bb: Optional[Block]) -> str:
        return f"{fb}" if bb is None else f"{fb}|{bb}"

    def name(s, fb, bb):
        return f"{s}@{label(fb, bb)}"

    edges = []
    block_edges = set()
    fblocks = blocks(fwd)
    bblocks = blocks(bwd) if bwd else [None]
    for t in model.transitions:
        fmoves = [mv for mv in block_moves(fwd, t.update)
                  if member(fwd, mv[0], guards[t.src]) and member(fwd, mv[1], guards[t.dst])]
        if bwd is None:
            bmoves = [(None, None, None)]
        else:
            # reversed transition t.dst -> t.src with the negated update
            bmoves = [mv for mv in _reversed_moves(bwd, t.update)
                      if member(bwd, mv[0], shifted[t.dst]) and member(bwd, mv[1], shifted[t.src])]
        for f1, f2, fx in fmoves:
            for b2, b1, bx in bmoves:
                src, dst = name(t.src, f1, b1), name(t.dst, f2, b2)
                edges.append(PdaEdge(src, dst, combine(fl(fx), bl(bx)), t.stack))
                if (f1, b1) != (f2, b2):
                    block_edges.add((label(f1, b1), label(f2, b2)))
    prov = {}
    for fb in fblocks:
        for bb in bblocks:
            for s in model.states:
                if member(fwd, fb, guards[s]) and (bb is None or member(bwd, bb, shifted[s])):
                    prov[name(s, fb, bb)] = (s, label(fb, bb))
    init = "$init"
    g0 = Block("G", 0)
    starts = [name(model.initial, g0, bb) for bb in bblocks if name(model.initial, g0, bb) in prov]
    for st in starts:
        edges.append(PdaEdge(init, st, ""))
    bstart = Block("G", bwd.start) if bwd else None
    finals = frozenset(name(final, fb, bstart) for fb in fblocks if name(final, fb, bstart) in prov)
    letters = tuple(sorted({e.letter for e in edges if e.letter}))
    alphabet = frozenset(letters)
    pda = Pda(tuple(sorted(prov)) + (init,), alphabet, tuple(edges), init, finals, model.stack_alphabet)
    return SlicePda(pda, prov, frozenset(block_edges), letters), fwd, bwd


def reach_side_formula(fwd: GuardLadder, bwd: Optional[GuardLadder], k: int,
                       letters: Iterable[str], cnt: Callable[[str], dict]) -> pb.Formula:
    """Level-entry conditions on both sides plus the total: k + [some -1] <= #(+1)."""
    fparts = defaultdict(list)
    bparts = defaultdict(list)
    for w in letters:
        for part in w.split("/"):
            (fparts if part[0] == "F" else bparts)[part[1:]].append(w)

    def counter(parts):
        def count(x: SliceLetter) -> dict:
            acc = defaultdict(int)
            for w in parts.get(str(x), ()):
                for v, c in cnt(w).items():
                    acc[v] += c
            return acc
        return count

    fc = counter(fparts)
    ups = defaultdict(int)
    downs = defaultdict(int)
    for x, ws in fparts.items():
        target = downs if x.startswith("b") else ups
        for w in ws:
            for v, c in cnt(w).items():
                target[v] += c
    out = [level_entry_formula(fwd, fc)]
    if bwd is not None:
        out.append(level_entry_formula(bwd, counter(bparts)))
    out.append(pb.disj(pb.atom(ups, ">=", k + 1), pb.conj(pb.atom(downs, "=", 0), pb.atom(ups, ">=", k))))
    return pb.conj(*out)


def reach_formula(fwd: GuardLadder, bwd: Optional[GuardLadder], k: int, letters: Iterable[str]) -> pb.Formula:
    return reach_side_formula(fwd, bwd, k, letters, lambda w: {pb.letter_var(w): 1})


def reach_query(model: C1pvassModel, k, budget: int = pb.DEFAULT_BUDGET, solve: bool = True) -> Query:
    k = _check_k(k)
    m = single_final(_prepared(model))
    slices, fwd, bwd = build_reach_slices(m, k)
    return _finish(slices, lambda cnt: reach_side_formula(fwd, bwd, k, slices.letters, cnt), budget, solve)


def decide_reach_guarded(model: C1pvassModel, k, budget: int = pb.DEFAULT_BUDGET) -> bool:
    return reach_query(model, k, budget).verdict


# ---------------------------------------------------------------------------
# boundedness


def _rename(v: str) -> str:
    return "d." + v


def bounded_query(model: C1pvassModel, budget: int = pb.DEFAULT_BUDGET) -> Query:
    """Unbounded iff some integer model of the cover formula (target 0) admits an
    integer direction, along the same disjuncts, that increases the number of
    +1 transitions.  Integer points of a rational polyhedron that has one are
    unbounded in exactly the directions of its recession cone."""
    base = cover_query(model, 0, budget, solve=False)
    if base.formula is None:
        return base
    ups = defaultdict(int)
    for a, v in base.parikh.letter_vars.items():
        if a.startswith("a"):
            ups[_rename(v)] += 1
    rec = pb.conj(pb.paired(base.formula, _rename), pb.atom(ups, ">=", 1))
    q = Query(base.slices, base.grammar, rec, base.parikh)
    q.result = pb.solve(rec, budget, repairs=[base.parikh.repair])
    return q


def decide_bounded_guarded(model: C1pvassModel, budget: int = pb.DEFAULT_BUDGET) -> bool:
    require_valid(model)
    if ZeroAnalysis(erase_guards(model)).bounded or not ZeroAnalysis(erase_guards(model)).cover_zero:
        return True
    return not bounded_query(model, budget).verdict
