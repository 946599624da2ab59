"""Random small models for property tests and sweeps."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .grammar import Cfg
from .model import NOOP, C1pvassModel, Transition, pop, push


@dataclass(frozen=True)
class ModelShape:
    max_states: int = 5
    stack_symbols: int = 2
    max_update: int = 1
    guard_values: tuple[int, ...] = (0,)
    edge_prob: float = 0.35
    stack_prob: float = 0.4


def random_model(rng: random.Random, shape: ModelShape = ModelShape()) -> C1pvassModel:
    n = rng.randint(1, shape.max_states)
    states = [f"s{i}" for i in range(n)]
    symbols = [chr(ord("a") + i) for i in range(shape.stack_symbols)]
    finals = [s for s in states if rng.random() < 0.3] or [states[-1]]
    guards = {s: (0 if s == states[0] else rng.choice(shape.guard_values)) for s in states}
    transitions = []
    for u in states:
        for v in states:
            if rng.random() >= shape.edge_prob:
                continue
            op = NOOP
            if symbols and rng.random() < shape.stack_prob:
                sym = rng.choice(symbols)
                op = push(sym) if rng.random() < 0.5 else pop(sym)
            upd = rng.randint(-shape.max_update, shape.max_update)
            transitions.append(Transition(u, v, upd, op))
    return C1pvassModel.build(states, states[0], finals, transitions, guards, symbols)


def random_cfg(rng: random.Random, n_vars: int = 4, letters: str = "ab", max_prods: int = 3,
               max_body: int = 3) -> Cfg:
    """Random grammar over ``letters``; variables are V0.. with V0 the start."""
    vs = [f"V{i}" for i in range(rng.randint(1, n_vars))]
    symbols = vs + list(letters)
    prods = set()
    for v in vs:
        for _ in range(rng.randint(1, max_prods)):
            body = tuple(rng.choice(symbols) for _ in range(rng.randint(0, max_body)))
            prods.add((v, body))
    return Cfg(tuple(vs), frozenset(letters), tuple(sorted(prods)), vs[0])
