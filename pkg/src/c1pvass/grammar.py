"""Context-free grammars: PDA conversion, CNF, emptiness, finiteness, word lengths."""

from __future__ import annotations

import itertools
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import Pda

Production = tuple[str, tuple[str, ...]]


@dataclass(frozen=True)
class Cfg:
    variables: tuple[str, ...]
    terminals: frozenset[str]
    productions: tuple[Production, ...]
    start: str

    def check(self) -> list[str]:
        problems = []
        known = set(self.variables) | self.terminals
        if self.start not in self.variables:
            problems.append(f"start variable {self.start} undeclared")
        if set(self.variables) & self.terminals:
            problems.append("variables and terminals overlap")
        for head, body in self.productions:
            if head not in self.variables:
                problems.append(f"production head {head} is not a variable")
            for sym in body:
                if sym not in known:
                    problems.append(f"undeclared symbol {sym} in body of {head}")
        return problems

    def by_head(self) -> dict[str, list[tuple[str, ...]]]:
        out: dict[str, list[tuple[str, ...]]] = defaultdict(list)
        for head, body in self.productions:
            out[head].append(body)
        return out

    def size(self) -> int:
        return sum(1 + len(body) for _, body in self.productions)


@dataclass(frozen=True)
class CnfGrammar(Cfg):
    """Grammar whose productions are ``A -> B C``, ``A -> a`` or ``S -> ()``."""

    pruned: bool = True

    def shape_ok(self) -> bool:
        vs = set(self.variables)
        for head, body in self.productions:
            if len(body) == 0:
                if head != self.start:
                    return False
            elif len(body) == 1:
                if body[0] not in self.terminals:
                    return False
            elif len(body) == 2:
                if not (body[0] in vs and body[1] in vs):
                    return False
                if self.start in body:
                    return False
            else:
                return False
        return True


@dataclass(frozen=True)
class WordLengthMap:
    lengths: dict[str, int]
    iterations: int

    def __getitem__(self, var: str) -> int:
        return self.lengths[var]


class GrammarError(ValueError):
    pass


# ---------------------------------------------------------------------------
# PDA -> CFG


def _x(p: str, q: str) -> str:
    return f"X[{p},{q}]"


def _y(p: str) -> str:
    return f"Y[{p}]"


def well_matched_pairs(pda: Pda) -> set[tuple[str, str]]:
    """Pairs (p, q) joined by a run whose net stack effect is zero and which never
    pops below its starting height."""
    internal_in = defaultdict(list)  # target -> sources
    push_into = defaultdict(list)  # target p of push o->p (A): (o, A)
    pop_from = defaultdict(list)  # source t of pop t->u (A): (u, A)
    pop_into = defaultdict(list)  # target u: (t, A)
    push_by_sym = defaultdict(list)  # A: (o, p)
    for e in pda.edges:
        if e.stack.kind == "none":
            internal_in[e.dst].append(e.src)
        elif e.stack.kind == "push":
            push_into[e.dst].append((e.src, e.stack.symbol))
            push_by_sym[e.stack.symbol].append((e.src, e.dst))
        else:
            pop_from[e.src].append((e.dst, e.stack.symbol))
            pop_into[e.dst].append((e.src, e.stack.symbol))

    wm: set[tuple[str, str]] = set()
    starting = defaultdict(set)  # p -> {q}
    ending = defaultdict(set)  # q -> {p}
    work = deque()

    def add(p, q):
        if (p, q) not in wm:
            wm.add((p, q))
            starting[p].add(q)
            ending[q].add(p)
            work.append((p, q))

    for s in pda.states:
        add(s, s)
    while work:
        p, q = work.popleft()
        # X[o,q] -> x X[p,q] for internal o -> p
        for o in internal_in[p]:
            add(o, q)
        # (p, q) as the inner part of push o->p (A) ... pop q->u (A), then X[u, r]
        for o, a in push_into[p]:
            for u, b in pop_from[q]:
                if a == b:
                    for r in list(starting[u]):
                        add(o, r)
        # (p, q) as the tail X[u, r] with u = p
        for t, a in pop_into[p]:
            for o, inner in push_by_sym[a]:
                if (inner, t) in wm:
                    add(o, q)
    return wm


def pda_to_cfg(pda: Pda) -> Cfg:
    """Grammar for the words read on runs from the initial configuration to a
    final state (any stack contents).

    ``X[p,q]`` derives the words of well-matched runs from p to q, ``Y[p]`` the
    words of runs from p to a final state that may leave pushes unmatched.
    Only pairs that admit a well-matched run get variables.
    """
    wm = well_matched_pairs(pda)
    starting = defaultdict(set)
    for p, q in wm:
        starting[p].add(q)
    prods: set[Production] = set()
    pops_by_sym = defaultdict(list)
    for e in pda.edges:
        if e.stack.kind == "pop":
            pops_by_sym[e.stack.symbol].append(e)

    def word(letter: str) -> tuple[str, ...]:
        return (letter,) if letter else ()

    for s in pda.states:
        prods.add((_x(s, s), ()))
    for e in pda.edges:
        if e.stack.kind == "none":
            for q in starting[e.dst]:
                prods.add((_x(e.src, q), word(e.letter) + (_x(e.dst, q),)))
        elif e.stack.kind == "push":
            for f in pops_by_sym[e.stack.symbol]:
                if (e.dst, f.src) not in wm:
                    continue
                for q in starting[f.dst]:
                    body = word(e.letter) + (_x(e.dst, f.src),) + word(f.letter) + (_x(f.dst, q),)
                    prods.add((_x(e.src, q), body))
            # unmatched push on the way to a final state
            for p in pda.states:
                if (p, e.src) in wm:
                    prods.add((_y(p), (_x(p, e.src),) + word(e.letter) + (_y(e.dst),)))
    for p in pda.states:
        for f in pda.finals:
            if (p, f) in wm:
                prods.add((_y(p), (_x(p, f),)))

    variables = sorted({h for h, _ in prods} | {s for _, b in prods for s in b if s.startswith(("X[", "Y["))}
                       | {_y(pda.initial)})
    letters = {e.letter for e in pda.edges if e.letter} | set(pda.alphabet)
    return Cfg(tuple(variables), frozenset(letters), tuple(sorted(prods)), _y(pda.initial))


# ---------------------------------------------------------------------------
# emptiness / pruning


def productive_variables(g: Cfg) -> set[str]:
    vs = set(g.variables)
    productive: set[str] = set()
    # worklist keyed on the count of not-yet-productive variables in each body
    missing = []
    watchers = defaultdict(list)
    work = deque()
    for i, (head, body) in enumerate(g.productions):
        need = {s for s in body if s in vs}
        missing.append(len(need))
        for s in need:
            watchers[s].append(i)
        if not need:
            work.append(head)
    while work:
        a = work.popleft()
        if a in productive:
            continue
        productive.add(a)
        for i in watchers[a]:
            missing[i] -= 1
            if missing[i] == 0:
                work.append(g.productions[i][0])
    return productive


def emptiness(g: Cfg) -> bool:
    """True iff the grammar generates no terminal word."""
    return g.start not in productive_variables(g)


def prune(g: Cfg) -> Cfg:
    """Drop non-productive symbols, then symbols unreachable from the start."""
    prod = productive_variables(g)
    vs = set(g.variables)
    keep = [(h, b) for h, b in g.productions if h in prod and all(s in prod for s in b if s in vs)]
    reach = {g.start} if g.start in prod else set()
    by_head = defaultdict(list)
    for h, b in keep:
        by_head[h].append(b)
    work = deque(reach)
    while work:
        a = work.popleft()
        for b in by_head[a]:
            for s in b:
                if s in vs and s not in reach:
                    reach.add(s)
                    work.append(s)
    keep = [(h, b) for h, b in keep if h in reach]
    variables = tuple(v for v in g.variables if v in reach) or (g.start,)
    if g.start not in variables:
        variables = (g.start,) + variables
    used_terms = {s for _, b in keep for s in b if s in g.terminals}
    return Cfg(variables, frozenset(used_terms), tuple(keep), g.start)


# ---------------------------------------------------------------------------
# CNF


def nullable_variables(g: Cfg) -> set[str]:
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for h, b in g.productions:
            if h not in nullable and all(s in nullable for s in b):
                nullable.add(h)
                changed = True
    return nullable


class _Names:
    def __init__(self, taken: Iterable[str]):
        self.taken = set(taken)

    def fresh(self, base: str) -> str:
        i = 0
        name = base
        while name in self.taken:
            i += 1
            name = f"{base}~{i}"
        self.taken.add(name)
        return name


def to_cnf(g: Cfg) -> CnfGrammar:
    """Equivalent grammar in Chomsky normal form with useless symbols removed."""
    g = prune(g)
    names = _Names(set(g.variables) | set(g.terminals))
    start = names.fresh("S0")
    if emptiness(g):
        return CnfGrammar((start,), frozenset(), (), start, True)
    vs = set(g.variables) | {start}
    nullable = nullable_variables(g)
    prods: set[Production] = {(start, (g.start,))}
    # epsilon elimination
    for h, b in g.productions:
        slots = [i for i, s in enumerate(b) if s in nullable]
        for drop in itertools.product((False, True), repeat=len(slots)):
            dropped = {i for i, d in zip(slots, drop) if d}
            nb = tuple(s for i, s in enumerate(b) if i not in dropped)
            if nb:
                prods.add((h, nb))
    # unit elimination
    unit = defaultdict(set)
    nonunit = defaultdict(set)
    for h, b in prods:
        if len(b) == 1 and b[0] in vs:
            unit[h].add(b[0])
        else:
            nonunit[h].add(b)
    closure = {}
    for a in vs:
        seen = {a}
        stack = [a]
        while stack:
            x = stack.pop()
            for y in unit[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        closure[a] = seen
    prods2: set[Production] = set()
    for a in vs:
        for b in closure[a]:
            for body in nonunit[b]:
                prods2.add((a, body))
    # terminals inside long bodies, then binarization
    term_var: dict[str, str] = {}
    pair_var: dict[tuple[str, ...], str] = {}
    out: set[Production] = set()

    def tvar(a: str) -> str:
        if a not in term_var:
            term_var[a] = names.fresh(f"T[{a}]")
            out.add((term_var[a], (a,)))
        return term_var[a]

    def tail(symbols: tuple[str, ...]) -> str:
        if symbols not in pair_var:
            v = names.fresh("C[" + ",".join(symbols) + "]")
            pair_var[symbols] = v
            if len(symbols) == 2:
                out.add((v, symbols))
            else:
                out.add((v, (symbols[0], tail(symbols[1:]))))
        return pair_var[symbols]

    for h, b in sorted(prods2):
        if len(b) == 1:
            out.add((h, b))
            continue
        syms = tuple(s if s in vs else tvar(s) for s in b)
        if len(syms) == 2:
            out.add((h, syms))
        else:
            out.add((h, (syms[0], tail(syms[1:]))))
    if g.start in nullable:
        out.add((start, ()))
    variables = sorted({h for h, _ in out} | vs)
    cnf = prune(Cfg(tuple(variables), g.terminals, tuple(sorted(out)), start))
    return CnfGrammar(cnf.variables, cnf.terminals, tuple(sorted(cnf.productions)), start, True)


# ---------------------------------------------------------------------------
# finiteness and lengths


def dependency_edges(g: Cfg) -> dict[str, set[str]]:
    vs = set(g.variables)
    edges = defaultdict(set)
    for h, b in g.productions:
        for s in b:
            if s in vs:
                edges[h].add(s)
    return edges


def has_cycle(nodes: Iterable[str], edges: dict[str, set[str]]) -> bool:
    color: dict[str, int] = {}
    for root in nodes:
        if root in color:
            continue
        color[root] = 1
        stack = [(root, iter(edges.get(root, ())))]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
            elif color.get(nxt) == 1:
                return True
            elif nxt not in color:
                color[nxt] = 1
                stack.append((nxt, iter(edges.get(nxt, ()))))
    return False


def finiteness(g: CnfGrammar) -> bool:
    """True iff the (pruned) grammar generates finitely many words."""
    if not getattr(g, "pruned", False):
        raise GrammarError("finiteness needs a grammar pruned of useless symbols")
    return not has_cycle(g.variables, dependency_edges(g))


def longest_word_lengths(g: CnfGrammar) -> WordLengthMap:
    """Longest derivable word length per variable, by synchronous max-plus sweeps."""
    if not finiteness(g):
        raise GrammarError("longest word lengths are undefined for an infinite language")
    w = {v: 0 for v in g.variables}
    iterations = 0
    while True:
        nw = dict(w)
        for h, b in g.productions:
            if len(b) == 1:
                nw[h] = max(nw[h], 1)
            elif len(b) == 2:
                nw[h] = max(nw[h], w[b[0]] + w[b[1]])
        if nw == w:
            break
        w = nw
        iterations += 1
    return WordLengthMap(w, iterations)


def length_sets(g: CnfGrammar, cap: int) -> dict[str, int]:
    """Per variable, a bitset of achievable word lengths truncated at ``cap``."""
    mask = (1 << (cap + 1)) - 1
    sets = {v: 0 for v in g.variables}
    changed = True
    while changed:
        changed = False
        for h, b in g.productions:
            if len(b) == 0:
                new = 1
            elif len(b) == 1:
                new = 2
            else:
                x, y = sets[b[0]], sets[b[1]]
                new = 0
                i = 0
                while x >> i:
                    if x >> i & 1:
                        new |= y << i
                    i += 1
                new &= mask
            merged = sets[h] | new
            if merged != sets[h]:
                sets[h] = merged
                changed = True
    return sets


# ---------------------------------------------------------------------------
# bounded enumeration (used as an independent check in tests and the oracle)


def bounded_language(g: Cfg, max_len: int) -> set[tuple[str, ...]]:
    """All words of length <= max_len derivable from the start symbol.

    Least fixpoint over the original productions, so it does not depend on CNF.
    """
    vs = set(g.variables)
    lang: dict[str, set[tuple[str, ...]]] = {v: set() for v in g.variables}
    changed = True
    while changed:
        changed = False
        for h, b in g.productions:
            partial = {()}
            for s in b:
                options = lang[s] if s in vs else {(s,)}
                partial = {p + o for p in partial for o in options if len(p) + len(o) <= max_len}
                if not partial:
                    break
            new = partial - lang[h]
            if new:
                lang[h] |= new
                changed = True
    return lang[g.start]


def format_cnf(g: CnfGrammar) -> str:
    lines = []
    for h, b in sorted(g.productions, key=lambda p: (p[0], p[1])):
        rhs = " ".join(b) if b else "@eps"
        lines.append(f"{h} -> {rhs}")
    return "\n".join(lines) + ("\n" if lines else "")


def inline_single_productions(g: Cfg, max_len: int = 4) -> Cfg:
    """Substitute away non-start variables that have exactly one production.

    The language (hence its Parikh image) is unchanged; the grammar usually
    shrinks a lot because PDA triples produce long chains of such variables.
    A variable is only inlined when its fully expanded body has at most
    ``max_len`` symbols.  After pruning, single-production variables cannot
    depend on each other cyclically (such a cycle derives no word).
    """
    g = prune(g)
    heads = defaultdict(list)
    for h, b in g.productions:
        heads[h].append(b)
    single = {v: bs[0] for v, bs in heads.items() if len(bs) == 1 and v != g.start}
    expanded: dict[str, Optional[tuple[str, ...]]] = {}

    def expand(v: str) -> Optional[tuple[str, ...]]:
        if v in expanded:
            return expanded[v]
        expanded[v] = None  # guards against cycles
        out: list[str] = []
        for s in single[v]:
            if s in single and expand(s) is not None:
                out.extend(expanded[s])
            else:
                out.append(s)
        expanded[v] = tuple(out) if len(out) <= max_len else None
        return expanded[v]

    for v in single:
        expand(v)
    prods = set()
    for h, b in g.productions:
        if expanded.get(h) is not None:
            continue
        nb: list[str] = []
        for s in b:
            e = expanded.get(s)
            nb.extend(e if e is not None else (s,))
        prods.add((h, tuple(nb)))
    vs = sorted({h for h, _ in prods} | {g.start})
    return prune(Cfg(tuple(vs), g.terminals, tuple(sorted(prods)), g.start))
