from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ltlsynth.errors import SizeLimitError
from ltlsynth.models import Amdp
from ltlsynth.oracle import (all_functions, alternating_game_value, brute_force_max_reach,
                             check_duality_instance, count_upfront_policies,
                             game_value_plateau, incomplete_counterexample, is_complete,
                             parity_counterexample, random_amdp, random_duality_instance,
                             random_goals, random_mdp, to_fraction, upfront_policies_value)

seeds = st.integers(min_value=0, max_value=100_000)


def test_to_fraction():
    assert to_fraction(0.3) == Fraction(3, 10)
    assert to_fraction(1.0) == 1
    assert to_fraction(1 / 3) == Fraction(1, 3)


@given(seeds, st.integers(min_value=1, max_value=5))
def test_alternating_value_is_monotone_and_bounded(seed, n):
    amdp = random_amdp(seed, n, 2, 2)
    goals = random_goals(seed, n)
    hv = alternating_game_value(amdp, goals, 6)
    assert hv.by_horizon[0] == tuple(Fraction(int(s in goals)) for s in range(n))
    for prev, cur in zip(hv.by_horizon, hv.by_horizon[1:]):
        assert all(0 <= a <= b <= 1 for a, b in zip(prev, cur))
    assert hv.values == hv.by_horizon[-1]


@settings(max_examples=30)
@given(seeds, st.integers(min_value=1, max_value=3))
def test_single_adversary_game_is_mdp(seed, n):
    mdp = random_mdp(seed, n, 2)
    trans = {(mdp.states[s], mdp.actions[a], "b"): {mdp.states[t]: p for t, p in row}
             for (s, a), row in mdp.transitions.items()}
    amdp = Amdp.build(mdp.states, mdp.actions, ["b"], trans, mdp.states[0])
    goals = random_goals(seed, n)
    for k in range(4):
        assert alternating_game_value(amdp, goals, k).values == \
            upfront_policies_value(amdp, goals, k).values
    plateau, _ = game_value_plateau(amdp, goals)
    assert max(abs(a - b) for a, b in zip(plateau, brute_force_max_reach(mdp, goals))) <= 1e-6


def test_identical_adversary_rows_collapse():
    # every adversary action behaves the same, so the game is an MDP
    amdp = Amdp.build(["s", "g", "x"], ["a1", "a2"], ["b1", "b2"],
                      {(s, a, b): row for b in ("b1", "b2")
                       for (s, a), row in {("s", "a1"): {"g": 0.5, "x": 0.5},
                                           ("s", "a2"): {"s": 0.5, "g": 0.5},
                                           ("g", "a1"): {"g": 1.0}, ("g", "a2"): {"g": 1.0},
                                           ("x", "a1"): {"x": 1.0},
                                           ("x", "a2"): {"x": 1.0}}.items()}, "s")
    hv = alternating_game_value(amdp, [1], 3)
    assert hv.values[0] == Fraction(7, 8)
    assert upfront_policies_value(amdp, [1], 3).values[0] == Fraction(7, 8)


def test_guards():
    big = random_amdp(0, 7, 2, 2)
    with pytest.raises(SizeLimitError):
        alternating_game_value(big, [0], 2)
    with pytest.raises(SizeLimitError):
        alternating_game_value(random_amdp(0, 3), [0], 20)
    with pytest.raises(SizeLimitError):
        upfront_policies_value(random_amdp(0, 5), [0], 2)
    with pytest.raises(SizeLimitError):
        upfront_policies_value(random_amdp(0, 3), [0], 5)
    with pytest.raises(SizeLimitError):
        upfront_policies_value(random_amdp(0, 3), [0], 4, max_policies=1)


def test_policy_count():
    amdp = Amdp.build(["s", "g"], ["a1", "a2"], ["b"],
                      {("s", "a1", "b"): {"s": 1.0}, ("s", "a2", "b"): {"g": 1.0},
                       ("g", "a1", "b"): {"g": 1.0}, ("g", "a2", "b"): {"g": 1.0}}, "s")
    # one policy per prefix a1^k a2, plus always a1
    assert [count_upfront_policies(amdp, [1], k, 0) for k in range(4)] == [1, 2, 3, 4]


def test_completeness():
    assert is_complete(all_functions(range(3), range(2)), 3)
    assert not is_complete([(0, 0), (1, 1)], 2)
    assert is_complete([(0, 1)], 2)


@settings(max_examples=100)
@given(seeds)
def test_full_families_satisfy_every_identity(seed):
    F, G, gset = random_duality_instance(seed, 2, 3, 2)
    rep = check_duality_instance(F, G, gset)
    assert rep.complete and rep.all_hold
    u, g = rep.witness_u, rep.witness_g
    assert sum(F[u][t] * G[g[t]][t] for t in range(3)) == rep.min_max_sum


def test_incomplete_family_breaks_the_first_identity():
    rep = check_duality_instance(*incomplete_counterexample())
    assert not rep.complete
    assert (rep.min_sum_max, rep.min_max_sum) == (2, 1)
    assert not rep.first_equality


def test_parity_family_is_complete_but_breaks_the_first_identity():
    F, G, gset = parity_counterexample()
    rep = check_duality_instance(F, G, gset)
    assert rep.complete
    assert (rep.min_sum_max, rep.min_max_sum) == (3, 2)
    assert rep.second_equality and rep.min_equality


def test_float_tables_work():
    F, G, gset = random_duality_instance(3, 2, 2, 2)
    rep = check_duality_instance([[float(x) for x in r] for r in F],
                                 [[float(x) for x in r] for r in G], gset)
    assert rep.min_max_sum == pytest.approx(float(check_duality_instance(F, G, gset).min_max_sum))
