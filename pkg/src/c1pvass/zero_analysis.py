"""Polynomial-time decisions for models whose guards are all zero.

Every procedure reduces to a question about a counter-free PDA built from two or
three copies of the model, answered on its grammar.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import grammar
from .model import C1pvassModel, ModelError, Pda, PdaEdge, prepare

@dataclass(frozen=True)
class RationalInterval:
    lo: Optional[Fraction] = Fraction(0)
    hi: Optional[Fraction] = Fraction(0)
    lo_closed: bool = True
    hi_closed: bool = True
    empty: bool = False

    def __post_init__(self):
        if self.empty:
            return
        if self.lo is None and self.lo_closed or self.hi is None and self.hi_closed:
            raise ValueError("infinite endpoints must be open")
        if self.lo is not None and self.hi is not None:
            if self.lo > self.hi:
                raise ValueError(f"lo {self.lo} > hi {self.hi}")
            if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
                raise ValueError("degenerate interval must be closed")

    @staticmethod
    def empty_set() -> "RationalInterval":
        return RationalInterval(None, None, False, False, True)

    def __contains__(self, x) -> bool:
        if self.empty:
            return False
        x = Fraction(x)
        if self.lo is not None and (x < self.lo or (x == self.lo and not self.lo_closed)):
            return False
        if self.hi is not None and (x > self.hi or (x == self.hi and not self.hi_closed)):
            return False
        return True

    def meets_at_least(self, k) -> bool:
        """Some member is >= k."""
        if self.empty:
            return False
        if self.hi is None:
            return True
        k = Fraction(k)
        return self.hi > k or (self.hi == k and self.hi_closed)

    def format(self) -> str:
        if self.empty:
            return "EMPTY"

        def num(x):
            if x is None:
                return "inf"
            return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        lo = "-inf" if self.lo is None else num(self.lo)
        return f"{left}{lo},{num(self.hi)}{right}"

    def __str__(self):
        return self.format()


@dataclass(frozen=True)
class BoundReport:
    bounded: bool
    b: Optional[int] = None
    right_closed: Optional[bool] = None


class ZeroAnalysisError(ValueError):
    pass


def _check_zero(model: C1pvassModel) -> C1pvassModel:
    m = prepare(model)
    if not m.is_zero_guarded():
        raise ZeroAnalysisError("model has nonzero lower-bound guards")
    return m


def _copy(state: str, tag: str) -> str:
    return f"{state}@{tag}"


def _pda(m: C1pvassModel, edges: list[PdaEdge], final_tags: list[str], alphabet=frozenset()) -> Pda:
    tags = sorted({e.src.rsplit("@", 1)[1] for e in edges} | {e.dst.rsplit("@", 1)[1] for e in edges}
                  | {"P0"} | set(final_tags))
    states = tuple(_copy(s, t) for t in tags for s in m.states)
    (f,) = m.finals
    finals = frozenset(_copy(f, t) for t in final_tags)
    return Pda(states, frozenset(alphabet), tuple(edges), _copy(m.initial, "P0"), finals, m.stack_alphabet)


def build_cover_zero_pda(model: C1pvassModel, unary: bool = False, drop_negative: bool = False) -> Pda:
    """P0 keeps the +0 transitions, P1 all of them; +1 transitions also cross P0 -> P1.

    With ``unary`` the former +1 transitions read ``a`` (the unary PDA), and
    ``drop_negative`` additionally removes the former -1 transitions.
    """
    m = _check_zero(model)
    edges = []
    for t in m.transitions:
        letter = "a" if unary and t.update == 1 else ""
        if t.update == 0:
            edges.append(PdaEdge(_copy(t.src, "P0"), _copy(t.dst, "P0"), "", t.stack))
        if t.update == 1:
            edges.append(PdaEdge(_copy(t.src, "P0"), _copy(t.dst, "P1"), letter, t.stack))
        if t.update == -1 and drop_negative:
            continue
        edges.append(PdaEdge(_copy(t.src, "P1"), _copy(t.dst, "P1"), letter, t.stack))
    return _pda(m, edges, ["P0", "P1"], {"a"} if unary else frozenset())


def build_reach_zero_pda(model: C1pvassModel) -> Pda:
    """Adds a copy P0' entered from P1 on -1 transitions; finals live in P0 and P0'."""
    m = _check_zero(model)
    edges = []
    for t in m.transitions:
        if t.update == 0:
            edges.append(PdaEdge(_copy(t.src, "P0"), _copy(t.dst, "P0"), "", t.stack))
            edges.append(PdaEdge(_copy(t.src, "P0'"), _copy(t.dst, "P0'"), "", t.stack))
        elif t.update == 1:
            edges.append(PdaEdge(_copy(t.src, "P0"), _copy(t.dst, "P1"), "", t.stack))
        else:
            edges.append(PdaEdge(_copy(t.src, "P1"), _copy(t.dst, "P0'"), "", t.stack))
        edges.append(PdaEdge(_copy(t.src, "P1"), _copy(t.dst, "P1"), "", t.stack))
    return _pda(m, edges, ["P0", "P0'"])


def build_unary_pda(model: C1pvassModel) -> Pda:
    return build_cover_zero_pda(model, unary=True)


def build_unary_nonnegative_pda(model: C1pvassModel) -> Pda:
    return build_cover_zero_pda(model, unary=True, drop_negative=True)


class ZeroAnalysis:
    """Memoizes the derived PDAs and grammars of one guard-free model."""

    def __init__(self, model: C1pvassModel):
        self.model = _check_zero(model)

    @property
    def cover_zero(self) -> bool:
        return self._cached("cover_zero", lambda: not grammar.emptiness(grammar.pda_to_cfg(
            build_cover_zero_pda(self.model))))

    @property
    def reach_zero(self) -> bool:
        return self._cached("reach_zero", lambda: not grammar.emptiness(grammar.pda_to_cfg(
            build_reach_zero_pda(self.model))))

    @property
    def unary_cnf(self) -> grammar.CnfGrammar:
        return self._cached("unary_cnf", lambda: grammar.to_cnf(grammar.pda_to_cfg(build_unary_pda(self.model))))

    @property
    def bounded(self) -> bool:
        return self._cached("bounded", lambda: grammar.finiteness(self.unary_cnf))

    def bound(self) -> BoundReport:
        def compute():
            if not self.cover_zero:
                raise ZeroAnalysisError("no accepting run: the tight bound is undefined")
            if not self.bounded:
                return BoundReport(False)
            cnf = self.unary_cnf
            b = grammar.longest_word_lengths(cnf)[cnf.start]
            # The nonnegative PDA's language is a subset of the unary one, so it
            # accepts a^b exactly when its own longest word has length b.
            sub = grammar.to_cnf(grammar.pda_to_cfg(build_unary_nonnegative_pda(self.model)))
            closed = (not grammar.emptiness(sub)) and grammar.longest_word_lengths(sub)[sub.start] == b
            return BoundReport(True, b, closed)
        return self._cached("bound", compute)

    def interval(self) -> RationalInterval:
        def compute():
            if not self.cover_zero:
                return RationalInterval.empty_set()
            rep = self.bound()
            lo_closed = self.reach_zero
            if not rep.bounded:
                return RationalInterval(Fraction(0), None, lo_closed, False)
            if rep.b == 0:
                return RationalInterval(Fraction(0), Fraction(0), True, True)
            return RationalInterval(Fraction(0), Fraction(rep.b), lo_closed, rep.right_closed)
        return self._cached("interval", compute)

    def cover(self, k) -> bool:
        k = _nonneg(k)
        if k == 0:
            return self.cover_zero
        return self.interval().meets_at_least(k)

    def reach(self, k) -> bool:
        k = _nonneg(k)
        if k == 0:
            return self.reach_zero
        return self.cover(k)

    def _cached(self, key, fn):
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            cache[key] = fn()
        return cache[key]


def _nonneg(k) -> Fraction:
    k = Fraction(k)
    if k < 0:
        raise ModelError(f"k must be nonnegative, got {k}")
    return k


def decide_cover_zero(model: C1pvassModel) -> bool:
    return ZeroAnalysis(model).cover_zero


def decide_reach_zero(model: C1pvassModel) -> bool:
    return ZeroAnalysis(model).reach_zero


def decide_bounded_zero(model: C1pvassModel) -> bool:
    return ZeroAnalysis(model).bounded


def tight_bound(model: C1pvassModel) -> BoundReport:
    za = ZeroAnalysis(model)
    rep = za.bound()
    if not rep.bounded:
        raise ZeroAnalysisError("model is unbounded")
    return rep


def reachable_interval(model: C1pvassModel) -> RationalInterval:
    return ZeroAnalysis(model).interval()


def decide_cover_k(model: C1pvassModel, k: Union[int, Fraction, str]) -> bool:
    return ZeroAnalysis(model).cover(k)


def decide_reach_k(model: C1pvassModel, k: Union[int, Fraction, str]) -> bool:
    return ZeroAnalysis(model).reach(k)
