import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ltlsynth.errors import NonConvergenceError
from ltlsynth.models import BeliefTable, LabeledMdp
from ltlsynth.oracle import (alternating_game_value, brute_force_max_reach, random_amdp,
                             random_goals, random_mdp)
from ltlsynth.solver import (bellman_residual, max_reach_vi, minimax_vi,
                             synth_expected, synth_worstcase)

seeds = st.integers(min_value=0, max_value=100_000)


@given(seeds, st.integers(min_value=1, max_value=6))
def test_mdp_iterates_monotone_and_bounded(seed, n):
    mdp = random_mdp(seed, n, 2)
    goals = random_goals(seed, n, 2)
    vi = max_reach_vi(mdp, goals, record=True)
    hist = np.array(vi.history)
    assert np.all(np.diff(hist, axis=0) >= -1e-15)
    assert hist.min() >= 0 and hist.max() <= 1
    assert all(vi[s] == 1.0 for s in goals)
    assert bellman_residual(mdp, goals, vi.values) <= 10 * vi.epsilon


@settings(max_examples=40)
@given(seeds, st.integers(min_value=1, max_value=5))
def test_mdp_values_match_brute_force(seed, n):
    mdp = random_mdp(seed, n, 2)
    goals = random_goals(seed, n, 2)
    vi = max_reach_vi(mdp, goals, epsilon=1e-12)
    assert np.max(np.abs(vi.values - brute_force_max_reach(mdp, goals))) <= 1e-6


def jacobi_iterate(amdp, goals, k):
    """The k-th sweep of minimax_vi (or its fixed point if it settles earlier)."""
    try:
        return minimax_vi(amdp, goals, epsilon=1e-300, max_iters=k).values
    except NonConvergenceError as exc:
        return exc.values


@given(seeds, st.integers(min_value=2, max_value=5))
def test_game_iterates_equal_alternating_oracle(seed, n):
    amdp = random_amdp(seed, n, 2, 2)
    goals = random_goals(seed, n)
    oracle = alternating_game_value(amdp, goals, 8, exact=True)
    for k in range(1, 9):
        exact = np.array([float(v) for v in oracle.by_horizon[k]])
        assert np.max(np.abs(jacobi_iterate(amdp, goals, k) - exact)) <= 1e-12


@given(seeds)
def test_game_iterates_monotone_and_bounded(seed):
    amdp = random_amdp(seed, 5, 2, 3)
    goals = random_goals(seed, 5, 2)
    vi = minimax_vi(amdp, goals, record=True)
    hist = np.array(vi.history)
    assert np.all(np.diff(hist, axis=0) >= -1e-15)
    assert hist.min() >= 0 and hist.max() <= 1
    assert bellman_residual(amdp, goals, vi.values) <= 10 * vi.epsilon


@given(seeds)
def test_gauss_seidel_reaches_the_same_values(seed):
    mdp = random_mdp(seed, 5, 2)
    goals = random_goals(seed, 5, 2)
    a = max_reach_vi(mdp, goals, epsilon=1e-12)
    b = max_reach_vi(mdp, goals, epsilon=1e-12, gauss_seidel=True)
    assert np.max(np.abs(a.values - b.values)) <= 1e-8


def test_all_goal_states():
    mdp = random_mdp(1, 4, 2)
    vi = max_reach_vi(mdp, range(4))
    assert np.all(vi.values == 1.0) and vi.iterations == 1 and vi.residual == 0.0


def test_unreachable_goal_has_value_zero():
    mdp = LabeledMdp.build(["s", "t", "g"], ["a"],
                           {("s", "a"): {"t": 1.0}, ("t", "a"): {"t": 1.0},
                            ("g", "a"): {"g": 1.0}}, "s")
    vi = max_reach_vi(mdp, [2])
    assert vi[0] == 0.0 and vi[1] == 0.0 and vi[2] == 1.0


def test_iteration_cap():
    mdp = LabeledMdp.build(["s", "g"], ["a"], {("s", "a"): {"s": 0.99, "g": 0.01},
                                             ("g", "a"): {"g": 1.0}}, "s")
    with pytest.raises(NonConvergenceError):
        max_reach_vi(mdp, [1], max_iters=5)
    with pytest.raises(ValueError):
        max_reach_vi(mdp, [1], epsilon=0.0)


def test_wrong_model_kind():
    with pytest.raises(TypeError):
        minimax_vi(random_mdp(0), [0])
    with pytest.raises(TypeError):
        max_reach_vi(random_amdp(0), [0])


def synth_both(project, spec, beliefs=None, env_models=None):
    args = (project.plant, env_models or project.env_models, beliefs or project.beliefs, spec,
            project.defines)
    return synth_expected(*args), synth_worstcase(*args)


def test_true_spec_is_certain(project):
    for result in synth_both(project, "true"):
        assert result.probability == 1.0


def test_impossible_goal_is_zero(project):
    for result in synth_both(project, "F (goal & col)"):
        assert result.probability == 0.0


def test_single_mode_worst_case_equals_expected(project):
    env = project.env_models[1]
    beliefs = BeliefTable.from_rules(["only"], [[1.0]], "only", env.states, [], default="stay")
    exp, worst = synth_both(project, project.spec, beliefs, [env])
    assert worst.probability == pytest.approx(exp.probability, abs=1e-6)


def induced_reach(product, policy):
    """Reach probability of the goal set under the memoryless part of ``policy``."""
    model = product.model
    goals = product.goal_states
    n = model.num_states
    x = np.array([1.0 if s in goals else 0.0 for s in range(n)])
    for _ in range(20_000):
        new = x.copy()
        for s in range(n):
            if s in goals:
                continue
            a = policy.action_at(s)
            if product.is_adversarial:
                new[s] = min(sum(p * x[t] for t, p in model.transitions[s, a, b])
                             for b in model.enabled_adversarial(s))
            else:
                new[s] = sum(p * x[t] for t, p in model.transitions[s, a])
        if np.max(np.abs(new - x)) < 1e-13:
            return new
        x = new
    return x


def test_extracted_policies_attain_their_values(expected_result, worstcase_result):
    for result in (expected_result, worstcase_result):
        x = induced_reach(result.product, result.policy)
        assert np.max(np.abs(x - result.values.values)) <= 1e-5


def test_policy_schedules_only_use_component_actions(worstcase_result):
    policy = worstcase_result.policy
    for comp in worstcase_result.product.components:
        for s in comp.states:
            assert set(policy.amec_schedule[s]) <= set(comp.actions[s])
            if s not in comp.repeat:
                assert policy.amec_schedule[s] == (comp.progress[s],)


def test_crossed_pedestrian_means_accelerate(expected_result, worstcase_result):
    for result in (expected_result, worstcase_result):
        product = result.product
        for s in product.find(belief="B0", dra="q0"):
            if product.decode(s).plant != "c8" and result.policy.values[s] > 0:
                assert result.policy.action_name(s) == "a2", product.decode(s).key()


def test_report_fields(expected_result, worstcase_result):
    stages = dict(expected_result.report["stages"])
    assert stages == {"belief chain": 13, "MDP": 65, "MDP reachable": 49, "DRA": 3,
                      "product": 53, "goal states": 1,
                      "almost-sure states": stages["almost-sure states"]}
    stages = dict(worstcase_result.report["stages"])
    assert stages == {"AMDP": 49, "DRA": 3, "product": 53, "goal states": 20,
                      "almost-sure states": stages["almost-sure states"]}
    assert expected_result.report["iterations"] > 0
    assert worstcase_result.report["residual"] < 1e-6
