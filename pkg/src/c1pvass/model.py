"""C1PVASS and PDA data types, the model file format, and model normalizations.

A C1PVASS is a pushdown automaton with one continuous nonnegative counter.
Taking a transition with update ``n`` adds ``gamma * n`` to the counter for some
``gamma`` in ``(0, 1]``; every state carries an integer lower-bound guard.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Optional

# Reserved names: the file format only allows [A-Za-z0-9_]+, so anything
# containing "$" can never collide with user names.
BOTTOM = "$bot"
FRESH_PREFIX = "$"

NAME_RE = re.compile(r"^[A-Za-z0-9_]+$")


class ModelError(ValueError):
    """Raised for malformed model files or models that fail validation."""

    def __init__(self, message: str, diagnostics: Optional[list[str]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or [message]


@dataclass(frozen=True)
class StackOp:
    kind: str = "none"  # "none" | "push" | "pop"
    symbol: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("none", "push", "pop"):
            raise ValueError(f"unknown stack operation {self.kind!r}")
        if (self.kind == "none") != (self.symbol is None):
            raise ValueError("push/pop need a symbol, none takes no symbol")

    def __str__(self):
        return "none" if self.kind == "none" else f"{self.kind}:{self.symbol}"


NOOP = StackOp()


def push(symbol: str) -> StackOp:
    return StackOp("push", symbol)


def pop(symbol: str) -> StackOp:
    return StackOp("pop", symbol)


@dataclass(frozen=True)
class Transition:
    src: str
    dst: str
    update: int = 0
    stack: StackOp = NOOP


@dataclass(frozen=True)
class C1pvassModel:
    states: tuple[str, ...]
    initial: str
    finals: frozenset[str]
    lower_bound: tuple[tuple[str, int], ...]
    stack_alphabet: frozenset[str]
    transitions: tuple[Transition, ...]

    @staticmethod
    def build(states: Iterable[str], initial: str, finals: Iterable[str],
              transitions: Iterable[Transition], lower_bound: Optional[dict[str, int]] = None,
              stack_alphabet: Optional[Iterable[str]] = None) -> "C1pvassModel":
        states = tuple(states)
        transitions = tuple(transitions)
        lb = dict(lower_bound or {})
        if stack_alphabet is None:
            stack_alphabet = {t.stack.symbol for t in transitions if t.stack.symbol is not None}
        return C1pvassModel(
            states=states,
            initial=initial,
            finals=frozenset(finals),
            lower_bound=tuple((s, int(lb.get(s, 0))) for s in states),
            stack_alphabet=frozenset(stack_alphabet),
            transitions=transitions,
        )

    def guard(self, state: str) -> int:
        return self.guards[state]

    @property
    def guards(self) -> dict[str, int]:
        return dict(self.lower_bound)

    def is_zero_guarded(self) -> bool:
        return all(g == 0 for _, g in self.lower_bound)

    def is_flat(self) -> bool:
        return all(t.update in (-1, 0, 1) for t in self.transitions)

    def size(self) -> int:
        """Encoding size: states, stack symbols, and transitions with binary updates."""
        n = len(self.states) + len(self.stack_alphabet)
        for t in self.transitions:
            n += 3 + max(1, abs(t.update).bit_length())
        for _, g in self.lower_bound:
            n += max(1, g.bit_length())
        return n


@dataclass(frozen=True)
class PdaEdge:
    src: str
    dst: str
    letter: str = ""  # "" reads the empty word
    stack: StackOp = NOOP


@dataclass(frozen=True)
class Pda:
    """Counter-free pushdown automaton with state-reachability acceptance.

    Unlike ``C1pvassModel`` several edges may join the same pair of states.
    """

    states: tuple[str, ...]
    alphabet: frozenset[str]
    edges: tuple[PdaEdge, ...]
    initial: str
    finals: frozenset[str]
    stack_alphabet: frozenset[str] = frozenset()

    def well_formed(self) -> list[str]:
        problems = []
        known = set(self.states)
        if self.initial not in known:
            problems.append(f"initial state {self.initial} undeclared")
        for f in self.finals - known:
            problems.append(f"final state {f} undeclared")
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                problems.append(f"edge {e.src}->{e.dst} has undeclared endpoint")
            if e.letter and e.letter not in self.alphabet:
                problems.append(f"edge {e.src}->{e.dst} reads unknown letter {e.letter}")
            if e.stack.symbol == BOTTOM:
                problems.append(f"edge {e.src}->{e.dst} touches the bottom symbol")
            elif e.stack.symbol is not None and e.stack.symbol not in self.stack_alphabet:
                problems.append(f"edge {e.src}->{e.dst} uses unknown stack symbol {e.stack.symbol}")
        return problems


@dataclass(frozen=True)
class ParikhVector:
    counts: tuple[tuple[str, int], ...]

    @staticmethod
    def of_word(word: Iterable[str], alphabet: Iterable[str]) -> "ParikhVector":
        c = Counter(word)
        return ParikhVector(tuple((a, c.get(a, 0)) for a in sorted(alphabet)))

    def __getitem__(self, letter: str) -> int:
        return dict(self.counts)[letter]


# ---------------------------------------------------------------------------
# validation


def validate(model: C1pvassModel) -> list[str]:
    diags: list[str] = []
    states = set(model.states)
    if len(states) != len(model.states):
        dup = [s for s, c in Counter(model.states).items() if c > 1]
        diags.append(f"duplicate states: {', '.join(sorted(dup))}")
    guards = model.guards
    if model.initial not in states:
        diags.append(f"initial state {model.initial} undeclared")
    elif guards.get(model.initial, 0) != 0:
        diags.append(f"initial guard nonzero: state {model.initial} has lb={guards[model.initial]}")
    if not model.finals:
        diags.append("no final state")
    for f in sorted(model.finals - states):
        diags.append(f"final state {f} undeclared")
    for s, g in model.lower_bound:
        if g < 0:
            diags.append(f"negative guard on state {s}")
    if BOTTOM in model.stack_alphabet:
        diags.append("bottom symbol listed in stack alphabet")
    seen_pairs = set()
    for t in model.transitions:
        label = f"transition {t.src}->{t.dst}"
        if t.src not in states or t.dst not in states:
            diags.append(f"{label}: undeclared endpoint")
        if (t.src, t.dst) in seen_pairs:
            diags.append(f"{label}: duplicate transition for state pair")
        seen_pairs.add((t.src, t.dst))
        sym = t.stack.symbol
        if sym == BOTTOM:
            diags.append(f"{label}: bottom symbol {'pushed' if t.stack.kind == 'push' else 'popped'}")
        elif sym is not None and sym not in model.stack_alphabet:
            diags.append(f"{label}: stack symbol {sym} not in stack alphabet")
    return diags


def require_valid(model: C1pvassModel) -> None:
    diags = validate(model)
    if diags:
        raise ModelError("invalid model: " + "; ".join(diags), diags)


# ---------------------------------------------------------------------------
# normalizations


def _fresh(base: str, taken: set[str]) -> str:
    name = FRESH_PREFIX + base
    i = 0
    while name in taken:
        i += 1
        name = f"{FRESH_PREFIX}{base}{i}"
    taken.add(name)
    return name


def binary_symbols(n: int) -> list[int]:
    """Indices i with bit i-1 of n set, most significant first (13 -> [4, 3, 1])."""
    return [i + 1 for i in reversed(range(n.bit_length())) if n >> i & 1]


def flatten_updates(model: C1pvassModel) -> C1pvassModel:
    """Replace every update of magnitude >= 2 by a binary-counting stack gadget.

    For ``u --(+n, op)--> v`` the new path performs ``op``, pushes a marker for
    ``v``, pushes the binary digits of ``n`` as symbols ``a_i`` (``a_i`` worth
    ``2**(i-1)``), and enters the shared gadget state. The gadget pops ``a_1``
    with a unit update and replaces each popped ``a_i`` (``i > 1``) by two
    ``a_{i-1}``; popping the marker leaves towards ``v``.
    """
    require_valid(model)
    if model.is_flat():
        return model
    taken = set(model.states)
    width = max(abs(t.update) for t in model.transitions).bit_length()
    digit = {i: _fresh(f"a{i}", taken) for i in range(1, width + 1)}
    states = list(model.states)
    guards = model.guards
    new_symbols = set(model.stack_alphabet) | set(digit.values())
    out: list[Transition] = []
    markers: dict[str, str] = {}
    gadget: dict[int, str] = {}
    gadget_exits: dict[int, set[str]] = {1: set(), -1: set()}

    def add_state(base: str) -> str:
        s = _fresh(base, taken)
        states.append(s)
        guards[s] = 0
        return s

    def gadget_state(sign: int) -> str:
        if sign not in gadget:
            q = add_state("gplus" if sign > 0 else "gminus")
            gadget[sign] = q
            out.append(Transition(q, q, sign, pop(digit[1])))
            for i in range(2, width + 1):
                qi = add_state(f"{'gp' if sign > 0 else 'gm'}{i}")
                qi2 = add_state(f"{'gp' if sign > 0 else 'gm'}{i}b")
                out.append(Transition(q, qi, 0, pop(digit[i])))
                out.append(Transition(qi, qi2, 0, push(digit[i - 1])))
                out.append(Transition(qi2, q, 0, push(digit[i - 1])))
        return gadget[sign]

    for t in model.transitions:
        if t.update in (-1, 0, 1):
            out.append(t)
            continue
        sign = 1 if t.update > 0 else -1
        q = gadget_state(sign)
        if t.dst not in markers:
            markers[t.dst] = _fresh(f"m_{t.dst}", taken)
            new_symbols.add(markers[t.dst])
        chain = [t.src]
        ops = [t.stack, push(markers[t.dst])] + [push(digit[i]) for i in binary_symbols(abs(t.update))]
        for _ in ops[:-1]:
            chain.append(add_state(f"e_{t.src}_{t.dst}"))
        chain.append(q)
        for a, b, op in zip(chain, chain[1:], ops):
            out.append(Transition(a, b, 0, op))
        if t.dst not in gadget_exits[sign]:
            gadget_exits[sign].add(t.dst)
            out.append(Transition(q, t.dst, 0, pop(markers[t.dst])))

    return C1pvassModel.build(states, model.initial, model.finals, out, guards, new_symbols)


def single_final(model: C1pvassModel, guard: int = 0) -> C1pvassModel:
    """Funnel all final states into one fresh final state through +0 edges.

    With ``guard == 0`` a model that already has one final state is returned
    unchanged.
    """
    if len(model.finals) == 1 and guard == 0:
        return model
    taken = set(model.states)
    f = _fresh("final", taken)
    guards = model.guards
    guards[f] = guard
    extra = [Transition(old, f, 0, NOOP) for old in sorted(model.finals)]
    return C1pvassModel.build(list(model.states) + [f], model.initial, [f],
                              list(model.transitions) + extra, guards, model.stack_alphabet)


def with_cover_target(model: C1pvassModel, k: int) -> C1pvassModel:
    """Single final state followed by a fresh final sink guarded by ``k``."""
    m = single_final(model)
    (f,) = m.finals
    taken = set(m.states)
    target = _fresh("target", taken)
    guards = m.guards
    guards[target] = k
    return C1pvassModel.build(list(m.states) + [target], m.initial, [target],
                              list(m.transitions) + [Transition(f, target, 0, NOOP)],
                              guards, m.stack_alphabet)


def erase_guards(model: C1pvassModel) -> C1pvassModel:
    if model.is_zero_guarded():
        return model
    return replace(model, lower_bound=tuple((s, 0) for s, _ in model.lower_bound))


def prepare(model: C1pvassModel) -> C1pvassModel:
    """Validated, flattened, single-final form used by all decision procedures."""
    require_valid(model)
    return single_final(flatten_updates(model))


def underlying_pda(model: C1pvassModel) -> Pda:
    return Pda(model.states, frozenset(), tuple(PdaEdge(t.src, t.dst, "", t.stack) for t in model.transitions),
               model.initial, model.finals, model.stack_alphabet)


# ---------------------------------------------------------------------------
# file format


def parse_model(text: str) -> C1pvassModel:
    diags: list[str] = []
    lines = text.splitlines()
    header_seen = False
    states: list[str] = []
    guards: dict[str, int] = {}
    initial: list[str] = []
    finals: list[str] = []
    transitions: list[Transition] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if not header_seen:
            if words != ["c1pvass", "v1"]:
                diags.append(f"line {lineno}: expected header 'c1pvass v1'")
            header_seen = True
            continue
        if words[0] == "state":
            if len(words) < 2 or not NAME_RE.match(words[1]):
                diags.append(f"line {lineno}: bad state name")
                continue
            name = words[1]
            if name in guards:
                diags.append(f"line {lineno}: state {name} declared twice")
                continue
            states.append(name)
            guards[name] = 0
            for w in words[2:]:
                if w == "initial":
                    initial.append(name)
                elif w == "final":
                    finals.append(name)
                elif w.startswith("lb=") and re.fullmatch(r"\d+", w[3:]):
                    guards[name] = int(w[3:])
                else:
                    diags.append(f"line {lineno}: unknown state attribute {w!r}")
        elif words[0] == "trans":
            if len(words) != 5 or not (NAME_RE.match(words[1]) and NAME_RE.match(words[2])):
                diags.append(f"line {lineno}: expected 'trans <src> <dst> add=<int> stack=<op>'")
                continue
            add, stk = words[3], words[4]
            if not re.fullmatch(r"add=[+-]?\d+", add):
                diags.append(f"line {lineno}: bad counter update {add!r}")
                continue
            m = re.fullmatch(r"stack=(?:(none)|(push|pop):([A-Za-z0-9_]+))", stk)
            if not m:
                diags.append(f"line {lineno}: bad stack operation {stk!r}")
                continue
            op = NOOP if m.group(1) else StackOp(m.group(2), m.group(3))
            transitions.append(Transition(words[1], words[2], int(add[4:]), op))
        else:
            diags.append(f"line {lineno}: unknown directive {words[0]!r}")
    if not header_seen:
        diags.append("line 1: expected header 'c1pvass v1'")
    if len(initial) != 1:
        diags.append(f"expected exactly one initial state, found {len(initial)}")
    if not finals:
        diags.append("expected at least one final state")
    if diags:
        raise ModelError("; ".join(diags), diags)
    model = C1pvassModel.build(states, initial[0], finals, transitions, guards)
    require_valid(model)
    return model


def serialize_model(model: C1pvassModel) -> str:
    out = ["c1pvass v1"]
    guards = model.guards
    for s in model.states:
        parts = ["state", s]
        if guards[s]:
            parts.append(f"lb={guards[s]}")
        if s == model.initial:
            parts.append("initial")
        if s in model.finals:
            parts.append("final")
        out.append(" ".join(parts))
    for t in model.transitions:
        out.append(f"trans {t.src} {t.dst} add={t.update} stack={t.stack}")
    return "\n".join(out) + "\n"


def parse_rational(text: str) -> Fraction:
    """Parse a nonnegative ``p`` or ``p/q``."""
    if not re.fullmatch(r"\d+(/0*[1-9]\d*)?", text.strip()):
        raise ModelError(f"expected nonnegative rational p or p/q with q > 0, got {text!r}")
    return Fraction(text.strip())


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def with_transitions(model: C1pvassModel, transitions: Iterable[Transition]) -> C1pvassModel:
    return replace(model, transitions=tuple(transitions))


__all__ = [
    "BOTTOM", "C1pvassModel", "ModelError", "NOOP", "Pda", "PdaEdge", "ParikhVector", "StackOp",
    "Transition", "erase_guards", "flatten_updates", "format_rational", "parse_model",
    "parse_rational", "pop", "prepare", "push", "require_valid", "serialize_model",
    "single_final", "underlying_pda", "validate", "with_cover_target",
]
