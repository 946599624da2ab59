"""Random cross-checks between the decision procedures and the oracle.

    python scripts/sweep.py zero  --models 200   # polynomial pipeline vs oracle
    python scripts/sweep.py degen --models 50    # guarded pipeline vs polynomial one
    python scripts/sweep.py guard --models 100   # guarded pipeline vs oracle

Prints one line per disagreement and a summary with the slowest queries.
"""

import argparse
import random
import sys
import time
from fractions import Fraction

from c1pvass import guarded_analysis as ga
from c1pvass.generate import ModelShape, random_model
from c1pvass.model import serialize_model
from c1pvass.oracle import Budget, final_intervals
from c1pvass.zero_analysis import ZeroAnalysis


def oracle_answers(ivs, k):
    return any(iv.meets_at_least(k) for iv in ivs), any(k in iv for iv in ivs)


def sweep(mode: str, n: int, seed: int, budget: Budget, verbose: bool) -> int:
    rng = random.Random(seed)
    bad = beyond = 0
    timings = []
    for i in range(n):
        if mode == "guard":
            m = random_model(rng, ModelShape(max_states=5, guard_values=(0, 1, 2)))
        else:
            m = random_model(rng, ModelShape(max_states=6 if mode == "zero" else 5))
        ivs = final_intervals(m, budget) if mode != "degen" else None
        za = ZeroAnalysis(m) if mode != "guard" else None
        ks = [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)] if mode == "zero" else range(4 if mode == "degen" else 3)
        for k in ks:
            t = time.perf_counter()
            if mode == "zero":
                cover, reach = za.cover(k), za.reach(k)
            else:
                cover, reach = ga.decide_cover_guarded(m, k), ga.decide_reach_guarded(m, k)
            timings.append((time.perf_counter() - t, i, str(k)))
            if mode == "degen":
                want = (za.cover(k), za.reach(k))
                if (cover, reach) != want:
                    bad += 1
                    print(f"DISAGREE model {i} k={k}: guarded {cover, reach} polynomial {want}")
                continue
            oc, orr = oracle_answers(ivs, k)
            if (oc and not cover) or (orr and not reach):
                bad += 1
                print(f"DISAGREE model {i} k={k}: procedure {cover, reach} oracle {oc, orr}")
            elif (cover and not oc) or (reach and not orr):
                beyond += 1
        if bad and verbose:
            print(serialize_model(m))
    slow = ", ".join(f"model {i} k={k} {s:.2f}s" for s, i, k in sorted(timings)[-3:])
    print(f"{mode}: models={n} disagreements={bad} yes-beyond-oracle-budget={beyond} slowest: {slow}")
    return 1 if bad else 0


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("mode", choices=["zero", "degen", "guard"])
    p.add_argument("--models", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=14)
    p.add_argument("--max-stack", type=int, default=7)
    p.add_argument("--verbose", action="store_true", help="print offending models")
    a = p.parse_args()
    return sweep(a.mode, a.models, a.seed, Budget(a.max_steps, a.max_stack), a.verbose)


if __name__ == "__main__":
    sys.exit(main())
