"""Random checks of the game-value results: alternating against upfront
policies on small AMDPs, value iteration against the alternating recursion,
and the min/max exchange identities on random tables."""
import argparse

import numpy as np

from ltlsynth.errors import SizeLimitError
from ltlsynth.oracle import (alternating_game_value, check_duality_instance,
                             count_upfront_policies, game_value_plateau,
                             incomplete_counterexample, parity_counterexample, random_amdp,
                             random_duality_instance, random_goals, upfront_policies_value)
from ltlsynth.solver import minimax_vi


def games(count, max_policies):
    agree = compared = skipped = 0
    worst_vi = 0.0
    for seed in range(count):
        n = 2 + seed % 3
        amdp = random_amdp(seed, n, 2, 2, support=2)
        goals = random_goals(seed, n)
        for k in range(5):
            if max(count_upfront_policies(amdp, goals, k, s) for s in range(n)) > max_policies:
                skipped += 1
                continue
            try:
                up = upfront_policies_value(amdp, goals, k, max_policies=max_policies)
            except SizeLimitError:
                skipped += 1
                continue
            compared += 1
            agree += alternating_game_value(amdp, goals, k).values == up.values
        plateau, _ = game_value_plateau(amdp, goals)
        vi = minimax_vi(amdp, goals, epsilon=1e-10)
        worst_vi = max(worst_vi, float(np.max(np.abs(vi.values - np.array(plateau)))))
    print(f"games: {agree}/{compared} horizon comparisons agree exactly "
          f"({skipped} skipped by the policy limit)")
    print(f"games: largest |VI - alternating plateau| = {worst_vi:.2e}")


def duality(count):
    held = complete = 0
    for seed in range(count):
        F, G, gset = random_duality_instance(seed, 1 + seed % 3, 1 + (seed // 3) % 3,
                                             1 + (seed // 9) % 3)
        rep = check_duality_instance(F, G, gset)
        complete += rep.complete
        held += rep.all_hold
    print(f"exchange: identities hold on {held}/{count} instances ({complete} complete families)")
    for name, inst in (("two-function family", incomplete_counterexample()),
                       ("even-parity family", parity_counterexample())):
        rep = check_duality_instance(*inst)
        print(f"exchange: {name}: complete={rep.complete} "
              f"min-sum-max={rep.min_sum_max} min-max-sum={rep.min_max_sum} "
              f"max-min-sum={rep.max_min_sum}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--games", type=int, default=200)
    parser.add_argument("--tables", type=int, default=500)
    parser.add_argument("--max-policies", type=int, default=3000)
    args = parser.parse_args()
    games(args.games, args.max_policies)
    duality(args.tables)


if __name__ == "__main__":
    main()
