"""Exact ground truth by enumerating runs.

Every path of the underlying PDA determines a set of attainable counter values
(one per choice of scaling factors).  That set is always an interval, so it can
be pushed through the path exactly with rational endpoints.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from typing import Iterable, Optional, Sequence

from .model import BOTTOM, C1pvassModel, ModelError, Transition
from .zero_analysis import RationalInterval

POINT_ZERO = RationalInterval(Fraction(0), Fraction(0), True, True)


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# interval propagation


def step_interval(iv: RationalInterval, update: int) -> RationalInterval:
    """Values c + g*update for c in iv and g in (0,1]."""
    if iv.empty or update == 0:
        return iv
    if update > 0:
        hi = None if iv.hi is None else iv.hi + update
        return RationalInterval(iv.lo, hi, False, iv.hi_closed and iv.hi is not None)
    lo = None if iv.lo is None else iv.lo + update
    return RationalInterval(lo, iv.hi, iv.lo_closed and iv.lo is not None, False)


def clip_below(iv: RationalInterval, guard) -> RationalInterval:
    """Intersection with [guard, inf)."""
    if iv.empty:
        return iv
    g = Fraction(guard)
    if iv.hi is not None and (iv.hi < g or (iv.hi == g and not iv.hi_closed)):
        return RationalInterval.empty_set()
    if iv.lo is None or iv.lo < g:
        return RationalInterval(g, iv.hi, True, iv.hi_closed)
    return iv


def propagate(model: C1pvassModel, path: Sequence[Transition]) -> RationalInterval:
    """Exact set of counter values after following ``path`` from the initial configuration."""
    stack = [BOTTOM]
    state = model.initial
    iv = clip_below(POINT_ZERO, model.guard(state))
    for t in path:
        if t.src != state:
            raise OracleError(f"path breaks at {t.src}: current state is {state}")
        stack = _apply_stack(stack, t, None)
        if stack is None:
            raise OracleError(f"stack operation {t.stack} invalid on {t.src}->{t.dst}")
        iv = clip_below(step_interval(iv, t.update), model.guard(t.dst))
        state = t.dst
        if iv.empty:
            break
    return iv


def _apply_stack(stack, t: Transition, max_depth: Optional[int]):
    kind = t.stack.kind
    if kind == "none":
        return stack
    if kind == "push":
        if max_depth is not None and len(stack) - 1 >= max_depth:
            return None
        return stack + [t.stack.symbol] if isinstance(stack, list) else stack + (t.stack.symbol,)
    if stack[-1] != t.stack.symbol:
        return None
    return stack[:-1]


# ---------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class OracleRun:
    path: tuple[Transition, ...]
    steps: tuple[tuple[str, tuple[str, ...], RationalInterval], ...]

    @property
    def final_interval(self) -> RationalInterval:
        return self.steps[-1][2]

    def to_json(self) -> dict:
        def end(x):
            return None if x is None else str(x)

        return {
            "path": [[t.src, t.dst] for t in self.path],
            "steps": [
                {"state": s, "stack": list(st), "interval": iv.format(),
                 "lo": end(iv.lo), "hi": end(iv.hi), "lo_closed": iv.lo_closed, "hi_closed": iv.hi_closed}
                for s, st, iv in self.steps
            ],
        }


@dataclass(frozen=True)
class Budget:
    max_steps: int = 14
    max_stack: int = 7

    def __post_init__(self):
        if self.max_steps < 0 or self.max_stack < 0:
            raise ValueError("budgets must be nonnegative")


def _subsumed(iv: RationalInterval, others: list[RationalInterval]) -> bool:
    return any(_contains(o, iv) for o in others)


def _contains(big: RationalInterval, small: RationalInterval) -> bool:
    if small.empty:
        return True
    if big.empty:
        return False
    if big.lo is not None:
        if small.lo is None or small.lo < big.lo or (small.lo == big.lo and small.lo_closed and not big.lo_closed):
            return False
    if big.hi is not None:
        if small.hi is None or small.hi > big.hi or (small.hi == big.hi and small.hi_closed and not big.hi_closed):
            return False
    return True


def explore(model: C1pvassModel, budget: Budget = Budget()) -> Iterable[OracleRun]:
    """Breadth-first enumeration of runs ending in a final state.

    Propagation is monotone under interval inclusion, so a configuration whose
    interval is covered by one already seen at the same state and stack (with at
    least as many steps left) cannot contribute anything new and is dropped.
    """
    start = clip_below(POINT_ZERO, model.guard(model.initial))
    if start.empty:
        return
    succ: dict[str, list[Transition]] = {}
    for t in model.transitions:
        succ.setdefault(t.src, []).append(t)
    seen: dict[tuple[str, tuple[str, ...]], list[RationalInterval]] = {}
    root = (model.initial, (), start, None)
    queue = deque([(root, 0)])
    seen[(model.initial, ())] = [start]
    finals = set(model.finals)
    while queue:
        node, depth = queue.popleft()
        state, stack, iv, _ = node
        if state in finals:
            yield _unwind(node)
        if depth == budget.max_steps:
            continue
        for t in succ.get(state, ()):
            st = _apply_stack((BOTTOM,) + stack, t, budget.max_stack)
            if st is None:
                continue
            st = st[1:]
            nv = clip_below(step_interval(iv, t.update), model.guard(t.dst))
            if nv.empty:
                continue
            key = (t.dst, st)
            bucket = seen.setdefault(key, [])
            if _subsumed(nv, bucket):
                continue
            bucket.append(nv)
            queue.append(((t.dst, st, nv, (node, t)), depth + 1))


def _unwind(node) -> OracleRun:
    steps = []
    path = []
    while node is not None:
        state, stack, iv, back = node
        steps.append((state, stack, iv))
        if back is None:
            break
        node, t = back
        path.append(t)
    return OracleRun(tuple(reversed(path)), tuple(reversed(steps)))


def search(model: C1pvassModel, mode: str, k=0, budget: Budget = Budget()) -> Optional[OracleRun]:
    """First run (fewest steps) witnessing the query, or None if none exists within budget.

    ``mode`` is ``reach`` (k in the final interval), ``cover`` (some value >= k)
    or ``any`` (any accepting run).  None never means the answer is no.
    """
    k = Fraction(k)
    if k < 0:
        raise ModelError("k must be nonnegative")
    if mode not in ("reach", "cover", "any"):
        raise ValueError(f"unknown mode {mode!r}")
    for run in explore(model, budget):
        iv = run.final_interval
        if mode == "any" or (mode == "reach" and k in iv) or (mode == "cover" and iv.meets_at_least(k)):
            return run
    return None


def final_intervals(model: C1pvassModel, budget: Budget = Budget()) -> list[RationalInterval]:
    """All final intervals found within budget (answers many k-queries with one search)."""
    return [run.final_interval for run in explore(model, budget)]


# ---------------------------------------------------------------------------
# dense normal form

FULL, EPS, DELTA, ZERO = "full", "eps", "delta", "zero"


class NormalFormError(ValueError):
    pass


@dataclass(frozen=True)
class DnfScaledRun:
    updates: tuple[int, ...]
    tags: tuple[str, ...]
    scalings: tuple[Fraction, ...]
    kind: Optional[int]  # 1 or 2 for the shape of the eps/delta subsequence, None if it is empty
    decomposition: dict = field(default_factory=dict, compare=False)

    def signed(self) -> list[str]:
        """Compact rendering such as ``+1, -d, +e``."""
        out = []
        for u, tag in zip(self.updates, self.tags):
            if tag == ZERO:
                out.append("+0")
            elif tag == FULL:
                out.append("+1" if u > 0 else "-1")
            else:
                out.append("+e" if tag == EPS else "-d")
        return out

    def counters(self) -> list[Fraction]:
        c = Fraction(0)
        out = []
        for u, g in zip(self.updates, self.scalings):
            c += u * g
            out.append(c)
        return out


def _pattern_ok(prev_classes: set[str], cls: str) -> bool:
    # (+1 | -D)* (-D | +E)* (-1 | +E)*
    if cls == "+1":
        return not prev_classes & {"+E", "-1"}
    if cls == "-D":
        return "-1" not in prev_classes
    return True


def _ed_shape(seq: list[str]) -> Optional[int]:
    """Which shape the eps/delta subsequence has (1 or 2), or None if neither."""
    if not seq:
        return 0
    if "+E" not in seq or "-D" not in seq:
        return None
    first_e = seq.index("+E")
    if seq[-1] == "-D" and all(s == "-D" for s in seq[:first_e]):
        return 1
    last_d = len(seq) - 1 - seq[::-1].index("-D")
    if last_d < len(seq) - 1:
        return 2
    return None


def _prefix_signs(seq: list[str], shape: int) -> list[int]:
    """Sign of the eps/delta sum after each prefix of ``seq``, as forced by the shape."""
    signs = []
    last_d = len(seq) - 1 - seq[::-1].index("-D") if "-D" in seq else -1
    seen_e = False
    for i, s in enumerate(seq):
        seen_e = seen_e or s == "+E"
        if i == len(seq) - 1:
            signs.append(0)
        elif shape == 2 and i >= last_d:
            signs.append(-1)
        elif seen_e:
            signs.append(1)
        else:
            signs.append(-1)
    return signs


def _concrete(seq: list[str], shape: int) -> list[Fraction]:
    """Tiny positive magnitudes realizing the prefix signs of ``shape`` with total sum 0."""
    n = len(seq)
    if n == 0:
        return []
    e = Fraction(1, 4 * (n + 1))
    t = e / (n + 1)
    vals = [e if s == "+E" else t for s in seq]
    last_d = n - 1 - seq[::-1].index("-D")
    before = sum(v if s == "+E" else -v for s, v in zip(seq[:last_d], vals[:last_d]))
    if shape == 1:
        vals[last_d] = before
    else:
        trail = n - 1 - last_d
        vals[last_d] = before + e
        for i in range(last_d + 1, n):
            vals[i] = e / trail
    return vals


def normalize_run(updates: Sequence[int], scalings: Sequence, guards: Optional[Sequence[int]] = None) -> DnfScaledRun:
    """Rescale a run ending at an integer into dense normal form.

    ``updates`` are the flattened updates (-1, 0, +1) along the run and
    ``scalings`` their factors in (0,1].  ``guards`` (one per step, the guard of
    the state entered) are checked on the input when given.  The tags are found
    by depth-first search, trying full before eps for positive updates and delta
    before full for negative ones.
    """
    if len(updates) != len(scalings):
        raise NormalFormError("updates and scalings differ in length")
    gammas = [Fraction(g) for g in scalings]
    if any(u not in (-1, 0, 1) for u in updates):
        raise NormalFormError("updates must be flattened to -1, 0, +1")
    if any(not (0 < g <= 1) for g in gammas):
        raise NormalFormError("scalings must lie in (0,1]")
    c = Fraction(0)
    counters = []
    for i, (u, g) in enumerate(zip(updates, gammas)):
        c += u * g
        if c < 0 or (guards is not None and c < guards[i]):
            raise NormalFormError(f"input run violates a guard at step {i}")
        counters.append(c)
    if c.denominator != 1:
        raise NormalFormError(f"run ends at {c}, which is not an integer")
    k = int(c)
    floors = [floor(x) for x in counters]
    pos = sum(g for u, g in zip(updates, gammas) if u > 0)
    neg = -sum(g for u, g in zip(updates, gammas) if u < 0)
    decomposition = {"P": pos, "N": neg, "I_P": floor(pos), "F_P": pos - floor(pos),
                     "I_N": ceil(neg), "F_N": ceil(neg) - neg}

    n = len(updates)
    remaining_pos = [0] * (n + 1)
    remaining_neg = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        remaining_pos[i] = remaining_pos[i + 1] + (updates[i] > 0)
        remaining_neg[i] = remaining_neg[i + 1] + (updates[i] < 0)

    tags: list[str] = []
    classes: list[str] = []

    def finish() -> Optional[int]:
        seq = [x for x in classes if x in ("+E", "-D")]
        shape = _ed_shape(seq)
        if shape is None:
            return None
        signs = _prefix_signs(seq, shape) if seq else []
        # floor domination, from the integer part of full updates and the sign of the eps/delta part
        full = 0
        j = -1
        sign = 0
        for i, cls in enumerate(classes):
            if cls == "+1":
                full += 1
            elif cls == "-1":
                full -= 1
            elif cls in ("+E", "-D"):
                j += 1
                sign = signs[j]
            if full < floors[i] or (full == floors[i] and sign < 0):
                return None
        return shape

    def dfs(i: int, full: int) -> Optional[int]:
        if full - remaining_neg[i] > k or full + remaining_pos[i] < k:
            return None
        if i == n:
            return finish() if full == k else None
        u = updates[i]
        if u == 0:
            options = [(ZERO, "0", 0)]
        elif u > 0:
            options = [(FULL, "+1", 1), (EPS, "+E", 0)]
        else:
            options = [(DELTA, "-D", 0), (FULL, "-1", -1)]
        prev = set(classes)
        for tag, cls, d in options:
            if cls != "0" and not _pattern_ok(prev, cls):
                continue
            # integer part can only be checked early when no eps/delta is pending
            tags.append(tag)
            classes.append(cls)
            res = dfs(i + 1, full + d)
            if res is not None:
                return res
            tags.pop()
            classes.pop()
        return None

    shape = dfs(0, 0)
    if shape is None:
        raise NormalFormError("no dense normal form exists for this run")
    seq = [x for x in classes if x in ("+E", "-D")]
    small = iter(_concrete(seq, shape))
    out = []
    for tag in tags:
        if tag in (EPS, DELTA):
            out.append(next(small))
        else:
            out.append(Fraction(1))
    return DnfScaledRun(tuple(updates), tuple(tags), tuple(out), shape or None, decomposition)


def check_normal_form(run: DnfScaledRun, original_counters: Sequence[Fraction], k: int) -> list[str]:
    """Violations of the normal-form conditions: scaling set, update pattern, eps/delta
    shape and floor domination (empty list when the run conforms)."""
    problems = []
    classes = []
    for u, tag in zip(run.updates, run.tags):
        if tag == ZERO:
            if u != 0:
                problems.append("zero tag on a nonzero update")
            continue
        if tag == FULL:
            classes.append("+1" if u > 0 else "-1")
        elif tag == EPS:
            if u <= 0:
                problems.append("eps tag on a non-positive update")
            classes.append("+E")
        else:
            if u >= 0:
                problems.append("delta tag on a non-negative update")
            classes.append("-D")
    for i, cls in enumerate(classes):
        if not _pattern_ok(set(classes[:i]), cls):
            problems.append(f"pattern: {cls} at nonzero position {i} breaks the pattern")
            break
    seq = [x for x in classes if x in ("+E", "-D")]
    shape = _ed_shape(seq)
    if shape is None:
        problems.append("shape: eps/delta sequence has neither shape")
    elif seq:
        vals = [g for g, tag in zip(run.scalings, run.tags) if tag in (EPS, DELTA)]
        total = Fraction(0)
        for j, (s, v, want) in enumerate(zip(seq, vals, _prefix_signs(seq, shape))):
            total += v if s == "+E" else -v
            got = (total > 0) - (total < 0)
            if got != want:
                problems.append(f"shape: prefix {j} has sign {got}, expected {want}")
                break
    counters = run.counters()
    if counters and counters[-1] != k:
        problems.append(f"final value {counters[-1]} differs from {k}")
    for i, (new, old) in enumerate(zip(counters, original_counters)):
        if new < floor(old):
            problems.append(f"floor: position {i} has {new} < floor({old})")
            break
    return problems
