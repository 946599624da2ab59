"""Existential Presburger formulas over nonnegative integers.

Formulas are positive and/or trees of linear atoms.  ``solve`` splits
disjunctions lazily: it solves the conjunction collected so far, and only when
the integer solution falsifies some disjunction does it branch on that
disjunction's alternatives.  Conjunctions go to an exact rational simplex with
branch and bound on top.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, gcd
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .grammar import Cfg

OPS = ("=", "<=", "<", ">=", ">")


@dataclass(frozen=True)
class Atom:
    """``sum(coeff * var) op const``."""

    coeffs: tuple[tuple[str, int], ...]
    op: str
    const: int

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def lhs(self, asg: Mapping[str, int]) -> int:
        return sum(c * asg.get(v, 0) for v, c in self.coeffs)


@dataclass(frozen=True)
class And:
    args: tuple = ()


@dataclass(frozen=True)
class Or:
    args: tuple = ()


Formula = Union[Atom, And, Or]
TRUE = And(())
FALSE = Or(())


def atom(coeffs: Union[Mapping[str, int], Iterable[tuple[str, int]]], op: str, const: int) -> Atom:
    acc: dict[str, int] = defaultdict(int)
    for v, c in (coeffs.items() if isinstance(coeffs, Mapping) else coeffs):
        acc[v] += c
    return Atom(tuple(sorted((v, c) for v, c in acc.items() if c)), op, int(const))


def total(names: Iterable[str]) -> dict[str, int]:
    """Coefficient map of a plain sum of variables."""
    acc: dict[str, int] = defaultdict(int)
    for v in names:
        acc[v] += 1
    return dict(acc)


def conj(*fs: Formula) -> Formula:
    out = []
    for f in fs:
        if isinstance(f, And):
            out.extend(f.args)
        else:
            out.append(f)
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*fs: Formula) -> Formula:
    out = []
    for f in fs:
        if isinstance(f, Or):
            out.extend(f.args)
        else:
            out.append(f)
    return out[0] if len(out) == 1 else Or(tuple(out))


def evaluate(f: Formula, asg: Mapping[str, int]) -> bool:
    if isinstance(f, Atom):
        x = f.lhs(asg)
        return {"=": x == f.const, "<=": x <= f.const, "<": x < f.const,
                ">=": x >= f.const, ">": x > f.const}[f.op]
    if isinstance(f, And):
        return all(evaluate(g, asg) for g in f.args)
    return any(evaluate(g, asg) for g in f.args)


def variables(f: Formula) -> set[str]:
    out: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.update(v for v, _ in g.coeffs)
        else:
            stack.extend(g.args)
    return out


def size(f: Formula) -> int:
    if isinstance(f, Atom):
        return 1
    return 1 + sum(size(g) for g in f.args)


# ---------------------------------------------------------------------------
# Parikh images


@dataclass(frozen=True)
class ParikhFormula:
    formula: Formula
    letter_vars: dict  # terminal -> count variable
    production_vars: tuple[str, ...]
    level_vars: dict  # grammar variable -> connectivity level variable
    # used by the solver to recompute levels from a production assignment
    repair: Callable[[dict], dict] = field(compare=False, repr=False, default=None)


def letter_var(a: str) -> str:
    return f"#{a}"


def parikh_formula(g: Cfg, letter_name: Callable[[str], str] = letter_var, prefix: str = "",
                   alphabet: Iterable[str] = ()) -> ParikhFormula:
    """Formula whose models, projected on the letter counts, are the Parikh images of L(g).

    ``y`` variables count production uses.  Flow balance says every variable is
    expanded exactly as often as it is produced (the start once more).  Each used
    variable other than the start also needs a parent production that is used and
    whose head sits exactly one level lower, which rules out detached cycles.
    Letters of ``alphabet`` that the grammar never produces are pinned to 0.
    """
    if g.start not in {h for h, _ in g.productions}:
        raise ValueError("grammar has no production for its start symbol; prune it and check emptiness first")
    vs = set(g.variables)
    prods = list(g.productions)
    y = [f"{prefix}y{i}" for i in range(len(prods))]
    z = {v: f"{prefix}z[{v}]" for v in g.variables}
    lvar = {a: letter_name(a) for a in sorted(g.terminals | set(alphabet))}
    by_head = defaultdict(list)
    occurs_in = defaultdict(list)  # variable -> [(production index, occurrences)]
    letter_occ = defaultdict(list)
    for i, (h, body) in enumerate(prods):
        by_head[h].append(i)
        counts = defaultdict(int)
        for s in body:
            counts[s] += 1
        for s, c in counts.items():
            if s in vs:
                occurs_in[s].append((i, c))
            else:
                letter_occ[s].append((i, c))
    parts: list[Formula] = []
    for v in g.variables:
        coeffs = defaultdict(int)
        for i in by_head[v]:
            coeffs[y[i]] += 1
        for i, c in occurs_in[v]:
            coeffs[y[i]] -= c
        parts.append(atom(coeffs, "=", 1 if v == g.start else 0))
    for a, name in lvar.items():
        coeffs = {name: 1}
        for i, c in letter_occ[a]:
            coeffs[y[i]] = coeffs.get(y[i], 0) - c
        parts.append(atom(coeffs, "=", 0))
    parts.append(atom({z[g.start]: 1}, "=", 1))
    for v in g.variables:
        if v == g.start:
            continue
        unused = conj(atom(total(y[i] for i in by_head[v]), "=", 0), atom({z[v]: 1}, "=", 0))
        parents = [conj(atom({y[i]: 1}, ">=", 1), atom({z[v]: 1, z[prods[i][0]]: -1}, "=", 1))
                   for i, _ in occurs_in[v] if prods[i][0] != v]
        parts.append(disj(unused, *parents))

    def repair(asg: dict) -> dict:
        out = dict(asg)
        level = {g.start: 1}
        frontier = [g.start]
        while frontier:
            nxt = []
            for h in frontier:
                for i in by_head[h]:
                    if asg.get(y[i], 0) > 0:
                        for s in prods[i][1]:
                            if s in vs and s not in level:
                                level[s] = level[h] + 1
                                nxt.append(s)
            frontier = nxt
        for v in g.variables:
            out[z[v]] = level.get(v, 0)
        return out

    return ParikhFormula(conj(*parts), lvar, tuple(y), z, repair)


# ---------------------------------------------------------------------------
# exact simplex


def _normalize_row(row: dict[int, int], rhs: int) -> tuple[dict[int, int], int]:
    g = gcd(rhs, *row.values())
    if g > 1:
        row = {j: c // g for j, c in row.items()}
        rhs //= g
    return row, rhs


def _eliminate(row, rhs, pc, prow, prhs):
    """``row`` with column pc cleared by a positive multiple of itself minus a multiple of prow."""
    f = row.get(pc)
    if not f:
        return row, rhs
    p = prow[pc]
    if p < 0:
        p, f = -p, -f
        prow = {j: -c for j, c in prow.items()}
        prhs = -prhs
    out = {j: c * p for j, c in row.items()}
    for j, c in prow.items():
        v = out.get(j, 0) - f * c
        if v:
            out[j] = v
        else:
            out.pop(j, None)
    return _normalize_row(out, rhs * p - f * prhs)


class ResourceExceeded(RuntimeError):
    pass


class DualSimplex:
    """Exact LP  min sum(x)  s.t. rows, x >= 0, solved incrementally.

    Every constraint is an inequality  a.x <= b  with its own slack, so x = 0
    with all slacks basic is dual feasible (the costs are nonnegative) and new
    rows can be added at any time, restoring primal feasibility by dual simplex
    pivots.  Rows live over the integers: an equation may be scaled by any
    positive factor, so each is divided by its gcd, and the basic variable of row
    i has a positive coefficient there (its value is rhs[i] / rows[i][basis[i]]).
    The reduced-cost row ``obj`` is kept the same way.
    """

    def __init__(self, nvars: int):
        self.nvars = nvars
        self.ncols = nvars
        self.rows: list[dict[int, int]] = []
        self.rhs: list[int] = []
        self.basis: list[int] = []
        self.where: dict[int, int] = {}  # basic column -> row
        self.obj: dict[int, int] = {j: 1 for j in range(nvars)}
        self.obj_rhs = 0
        self.pivots = 0

    def copy(self) -> "DualSimplex":
        c = DualSimplex.__new__(DualSimplex)
        c.nvars, c.ncols = self.nvars, self.ncols
        c.rows = [dict(r) for r in self.rows]
        c.rhs = list(self.rhs)
        c.basis = list(self.basis)
        c.where = dict(self.where)
        c.obj = dict(self.obj)
        c.obj_rhs = self.obj_rhs
        c.pivots = 0
        return c

    def add_le(self, coeffs: dict[int, int], bound: int) -> None:
        row = {j: c for j, c in coeffs.items() if c}
        rhs = bound
        for j in [j for j in row if j in self.where]:
            i = self.where[j]
            row, rhs = _eliminate(row, rhs, j, self.rows[i], self.rhs[i])
        s = self.ncols
        self.ncols += 1
        row[s] = 1
        row, rhs = _normalize_row(row, rhs)
        self.where[s] = len(self.rows)
        self.rows.append(row)
        self.rhs.append(rhs)
        self.basis.append(s)

    def add(self, coeffs: dict[int, int], op: str, bound: int) -> None:
        if op in ("<=", "="):
            self.add_le(coeffs, bound)
        if op in (">=", "="):
            self.add_le({j: -c for j, c in coeffs.items()}, -bound)

    def _pivot(self, pr: int, pc: int) -> None:
        prow, prhs = self.rows[pr], self.rhs[pr]
        if prow[pc] < 0:
            prow, prhs = {j: -c for j, c in prow.items()}, -prhs
            self.rows[pr], self.rhs[pr] = prow, prhs
        for i, row in enumerate(self.rows):
            if i != pr and pc in row:
                self.rows[i], self.rhs[i] = _eliminate(row, self.rhs[i], pc, prow, prhs)
        self.obj, self.obj_rhs = _eliminate(self.obj, self.obj_rhs, pc, prow, prhs)
        del self.where[self.basis[pr]]
        self.basis[pr] = pc
        self.where[pc] = pr
        self.pivots += 1

    def solve(self, max_pivots: Optional[int] = None) -> bool:
        """Restore primal feasibility; False iff the rows are infeasible."""
        bland = False
        stall = 0
        while True:
            leaving = None
            for i, r in enumerate(self.rhs):
                if r < 0:
                    if bland:
                        if leaving is None or self.basis[i] < self.basis[leaving]:
                            leaving = i
                    else:
                        # most violated basic value
                        if leaving is None or Fraction(r, self.rows[i][self.basis[i]]) < \
                                Fraction(self.rhs[leaving], self.rows[leaving][self.basis[leaving]]):
                            leaving = i
            if leaving is None:
                return True
            row = self.rows[leaving]
            best = None
            for j, a in row.items():
                if a < 0 and j != self.basis[leaving]:
                    oj = self.obj.get(j, 0)
                    if best is None:
                        best = (j, oj, -a)
                        continue
                    bj, bo, ba = best
                    lhs, rhs_ = oj * ba, bo * (-a)
                    if lhs < rhs_ or (lhs == rhs_ and j < bj):
                        best = (j, oj, -a)
            if best is None:
                return False
            if best[1] == 0:
                stall += 1
                bland = bland or stall > 50
            else:
                stall = 0
            self._pivot(leaving, best[0])
            if max_pivots is not None and self.pivots > max_pivots:
                raise ResourceExceeded("pivot budget exhausted")

    def solution(self) -> list[Fraction]:
        x = [Fraction(0)] * self.nvars
        for i, b in enumerate(self.basis):
            if b < self.nvars:
                x[b] = Fraction(self.rhs[i], self.rows[i][b])
        return x


# ---------------------------------------------------------------------------
# integer feasibility


@dataclass
class SolverStats:
    lp_calls: int = 0
    bb_nodes: int = 0
    splits: int = 0


def _normalize(a: Atom) -> list[tuple[tuple[tuple[str, int], ...], str, int]]:
    """Non-strict rows; over the integers x < c is x <= c-1."""
    if a.op == "<":
        return [(a.coeffs, "<=", a.const - 1)]
    if a.op == ">":
        return [(a.coeffs, ">=", a.const + 1)]
    return [(a.coeffs, a.op, a.const)]


def small_solution_bound(rows, nvars: int) -> int:
    """Entry bound for some solution of a feasible integer system A x <= b, x >= 0.

    Uses the classical estimate n * (m * a)^(2m + 1), where m is the number of
    rows and a the largest absolute coefficient or constant.
    """
    m = max(1, len(rows))
    a = max([1] + [abs(c) for coeffs, _, _ in rows for _, c in coeffs] + [abs(r) for _, _, r in rows])
    return max(1, nvars) * (m * a) ** (2 * m + 1)


def lattice_feasible(atoms: Iterable[Atom]) -> bool:
    """Whether the equality atoms have a solution over all integers (signs ignored).

    Keeps the solution set as ``x0 + M t`` and intersects it with one equation
    at a time, reducing the equation's coefficients in ``t`` to their gcd by
    unimodular column operations.  Parity-type obstructions are found here
    without any branching.
    """
    eqs = [a for a in atoms if a.op == "="]
    names = sorted({v for a in eqs for v, _ in a.coeffs})
    idx = {v: i for i, v in enumerate(names)}
    n = len(names)
    x0 = [0] * n
    cols = [{i: 1} for i in range(n)]  # columns of M, sparse
    for a in eqs:
        row = {idx[v]: c for v, c in a.coeffs}
        rest = a.const - sum(c * x0[i] for i, c in row.items())
        c = [sum(row.get(i, 0) * v for i, v in col.items()) for col in cols]
        live = [j for j, cj in enumerate(c) if cj]
        if not live:
            if rest:
                return False
            continue
        # Euclid on the live coefficients, mirrored on the columns
        while len(live) > 1:
            live.sort(key=lambda j: abs(c[j]))
            p = live[0]
            for j in live[1:]:
                q = c[j] // c[p]
                if q:
                    c[j] -= q * c[p]
                    col = dict(cols[j])
                    for i, v in cols[p].items():
                        w = col.get(i, 0) - q * v
                        if w:
                            col[i] = w
                        else:
                            col.pop(i, None)
                    cols[j] = col
            live = [j for j in live if c[j]]
        (p,) = live
        if rest % c[p]:
            return False
        t = rest // c[p]
        for i, v in cols[p].items():
            x0[i] += t * v
        del cols[p]
    return True


def propagate_upper_bounds(rows: Sequence[tuple[dict[int, int], int]], nvars: int) -> dict[int, int]:
    """Upper bounds implied by rows  sum c_j x_j <= r  over x >= 0.

    A positive-coefficient variable is bounded once every negative-coefficient
    variable of its row is; the sweep repeats until nothing changes (or n + 1
    times, since bounds on a cycle can only shrink slowly).
    """
    upper: dict[int, int] = {}
    for _ in range(nvars + 1):
        changed = False
        for row, r in rows:
            slack = r
            for j, c in row.items():
                if c < 0:
                    if j not in upper:
                        break
                    slack -= c * upper[j]
            else:
                for j, c in row.items():
                    if c > 0:
                        b = slack // c
                        if b < upper.get(j, b + 1):
                            upper[j] = b
                            changed = True
        if not changed:
            break
    return upper


class _Problem:
    """Shared state of one ``solve`` call: variable numbering, budget, statistics."""

    def __init__(self, names: Sequence[str], stats: SolverStats, budget: int):
        self.names = list(names)
        self.index = {v: i for i, v in enumerate(self.names)}
        self.stats = stats
        self.budget = budget
        self.cap = 1
        self.le_rows: list[tuple[dict[int, int], int]] = []
        self.upper: dict[int, int] = {}  # propagated upper bounds

    def add_atoms(self, lp: DualSimplex, atoms: Iterable[Atom]) -> bool:
        rows = [r for a in atoms for r in _normalize(a)]
        self.cap = max(self.cap, small_solution_bound(rows, len(self.names)))
        for coeffs, op, r in rows:
            row = {self.index[v]: c for v, c in coeffs if c}
            lp.add(row, op, r)
            if op in ("<=", "="):
                self.le_rows.append((row, r))
            if op in (">=", "="):
                self.le_rows.append(({j: -c for j, c in row.items()}, -r))
        self.upper = propagate_upper_bounds(self.le_rows, len(self.names))
        self.stats.lp_calls += 1
        return lp.solve()

    def integer_point(self, root: DualSimplex) -> Optional[dict[str, int]]:
        """Depth-first branch and bound below a solved LP."""
        stack = [root]
        while stack:
            lp = stack.pop()
            self.stats.bb_nodes += 1
            if self.stats.bb_nodes > self.budget:
                raise ResourceExceeded(f"branch-and-bound node budget {self.budget} exhausted")
            x = lp.solution()
            # bounded variables first: branching on them cannot dive forever
            fracs = [j for j in range(len(x)) if x[j].denominator != 1]
            frac = min(fracs, key=lambda j: (j not in self.upper, self.upper.get(j, 0), j), default=None)
            if frac is None:
                return {self.names[j]: int(x[j]) for j in range(len(x))}
            v = x[frac]
            if floor(v) + 1 <= self.cap:
                up = lp.copy()
                up.add({frac: 1}, ">=", ceil(v))
                self.stats.lp_calls += 1
                if up.solve():
                    stack.append(up)
            # beyond the small-solution bound the up branch holds nothing new
            down = lp.copy()
            down.add({frac: 1}, "<=", floor(v))
            self.stats.lp_calls += 1
            if down.solve():
                stack.append(down)
        return None


# ---------------------------------------------------------------------------
# lazy disjunct splitting


@dataclass(frozen=True)
class SolveResult:
    status: str  # "SAT" | "UNSAT" | "RESOURCE-EXCEEDED"
    assignment: Optional[dict] = None
    stats: Optional[SolverStats] = field(default=None, compare=False)

    @property
    def sat(self) -> bool:
        return self.status == "SAT"


def _split(f: Formula) -> tuple[list[Atom], list[Or]]:
    atoms, ors = [], []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            atoms.append(g)
        elif isinstance(g, And):
            stack.extend(reversed(g.args))
        else:
            ors.append(g)
    return atoms, ors


DEFAULT_BUDGET = 10 ** 6


def solve(f: Formula, budget: int = DEFAULT_BUDGET,
          repairs: Sequence[Callable[[dict], dict]] = ()) -> SolveResult:
    """Satisfiability over the nonnegative integers.

    ``budget`` caps the number of branch-and-bound nodes.  ``repairs`` may
    rewrite auxiliary variables of a candidate assignment (the Parikh
    connectivity levels, for instance); a repaired candidate is accepted only if
    it satisfies the whole formula, so they never affect soundness.
    """
    stats = SolverStats()
    names = sorted(variables(f))
    core, ors = _split(f)
    problem = _Problem(names, stats, budget)
    try:
        lp = DualSimplex(len(names))
        asg = _search(problem, lp, core, ors, repairs) if problem.add_atoms(lp, core) else None
    except ResourceExceeded:
        return SolveResult("RESOURCE-EXCEEDED", None, stats)
    if asg is None:
        return SolveResult("UNSAT", None, stats)
    full = {v: asg.get(v, 0) for v in names}
    if not evaluate(f, full):
        raise AssertionError("solver produced an assignment that does not satisfy the formula")
    return SolveResult("SAT", full, stats)


def _search(problem: _Problem, lp: DualSimplex, core: list[Atom], pending: list[Or], repairs) -> Optional[dict]:
    if not lattice_feasible(core):
        return None
    x = problem.integer_point(lp)
    if x is None:
        return None
    candidates = [x]
    y = x
    for r in repairs:
        y = r(y)
        candidates.insert(0, y)
    for cand in candidates:
        if all(evaluate(o, cand) for o in pending) and all(evaluate(a, cand) for a in core):
            return cand
    target, ref = None, x
    for cand in candidates:
        target = next((o for o in pending if not evaluate(o, cand)), None)
        if target is not None:
            ref = cand
            break
    if target is None:
        return x
    problem.stats.splits += 1
    rest = [o for o in pending if o is not target]

    def distance(d: Formula) -> int:
        atoms, _ = _split(d)
        return sum(not evaluate(a, ref) for a in atoms)

    for d in sorted(target.args, key=distance):
        atoms, ors = _split(d)
        child = lp.copy()
        if not problem.add_atoms(child, atoms):
            continue
        res = _search(problem, child, core + atoms, rest + ors, repairs)
        if res is not None:
            return res
    return None


# ---------------------------------------------------------------------------
# SMT-LIB output


def _smt_name(v: str) -> str:
    return "|" + v.replace("|", "_").replace("\\", "_") + "|"


def _smt_term(coeffs) -> str:
    terms = []
    for v, c in coeffs:
        name = _smt_name(v)
        terms.append(name if c == 1 else f"(* {c} {name})" if c > 0 else f"(* (- {-c}) {name})")
    if not terms:
        return "0"
    return terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"


def _smt_int(c: int) -> str:
    return str(c) if c >= 0 else f"(- {-c})"


def _smt(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"({f.op} {_smt_term(f.coeffs)} {_smt_int(f.const)})"
    if isinstance(f, And):
        return "true" if not f.args else "(and " + " ".join(_smt(g) for g in f.args) + ")"
    return "false" if not f.args else "(or " + " ".join(_smt(g) for g in f.args) + ")"


def to_smtlib(f: Formula) -> str:
    lines = ["(set-logic QF_LIA)"]
    for v in sorted(variables(f)):
        lines.append(f"(declare-const {_smt_name(v)} Int)")
    for v in sorted(variables(f)):
        lines.append(f"(assert (>= {_smt_name(v)} 0))")
    lines.append(f"(assert {_smt(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# recession directions


def homogenize(f: Formula, rename: Callable[[str], str]) -> Formula:
    """Same shape over renamed variables with every constant set to zero.

    A polyhedron's recession cone is cut out by the homogenized constraints
    (strict ones become non-strict).
    """
    if isinstance(f, Atom):
        op = {"<": "<=", ">": ">="}.get(f.op, f.op)
        return Atom(tuple((rename(v), c) for v, c in f.coeffs), op, 0)
    args = tuple(homogenize(g, rename) for g in f.args)
    return And(args) if isinstance(f, And) else Or(args)


def paired(f: Formula, rename: Callable[[str], str]) -> Formula:
    """Every atom ``A`` becomes ``A and hom(A)``, so that each disjunction picks
    the same alternative for a point and for a direction."""
    if isinstance(f, Atom):
        return And((f, homogenize(f, rename)))
    args = tuple(paired(g, rename) for g in f.args)
    return And(args) if isinstance(f, And) else Or(args)
