import random

import pytest
from hypothesis import given, strategies as st

from ltlsynth.automata import dra_run, ltl_to_dra
from ltlsynth.composition import (CompositeState, add_derived_props, build_belief_mc,
                                  build_system_amdp, compose, induced_chain, product_with_dra)
from ltlsynth.errors import (ModelMismatchError, PropositionCollisionError,
                             PropositionMismatchError)
from ltlsynth.ltl import holds, parse_ltl
from ltlsynth.models import BeliefTable, LabeledMarkovChain, LabeledMdp, validate_model
from ltlsynth.oracle import random_mdp


@pytest.fixture(scope="module")
def belief_mc(project):
    return build_belief_mc(project.env_models, project.beliefs)


@pytest.fixture(scope="module")
def system(project, belief_mc):
    return add_derived_props(compose(project.plant, belief_mc), project.defines)


def test_belief_chain_mixes_modes(project):
    beliefs = project.beliefs.with_initial("B6")
    mc = build_belief_mc(project.env_models, beliefs)
    s = mc.index_of("c1|B6")
    t = mc.index_of("c2|B0")
    assert mc.prob(s, t) == pytest.approx(0.6 * 0.0 + 0.4 * 0.6)


def test_belief_chain_counts(belief_mc, project):
    assert belief_mc.num_states == 13
    assert validate_model(belief_mc) == []
    full = build_belief_mc(project.env_models, project.beliefs, prune=False)
    assert full.num_states == 7 * 9


def test_single_mode_chain_is_the_environment(project):
    env = project.env_models[1]
    beliefs = BeliefTable.from_rules(["only"], [[1.0]], "only", env.states, [], default="stay")
    mc = build_belief_mc([env], beliefs)
    reach = {env.initial}
    frontier = [env.initial]
    while frontier:
        for t, _ in env.successors(frontier.pop()):
            if t not in reach:
                reach.add(t)
                frontier.append(t)
    assert mc.num_states == len(reach)
    for i in range(mc.num_states):
        e = env.index_of(mc.state_parts(i)[0])
        assert {mc.states[t].split("|")[0]: p for t, p in mc.successors(i)} == \
            {env.states[t]: p for t, p in env.successors(e)}


def test_system_counts(project, belief_mc, system):
    assert system.num_states == 65
    assert compose(project.plant, belief_mc, prune=True).num_states == 49
    assert validate_model(compose(project.plant, belief_mc, prune=True)) == []
    amdp = build_system_amdp(project.plant, project.env_models, project.beliefs)
    assert amdp.num_states == 49
    assert validate_model(amdp) == []


def test_product_count(system):
    dra = ltl_to_dra(parse_ltl("!col U goal"))
    assert product_with_dra(system, dra).num_states == 53


def test_composition_matches_mode_mixture(project, belief_mc, system):
    # every composed step is plant step times the belief-weighted environment step
    plant, beliefs, modes = project.plant, project.beliefs, project.env_models
    checked = 0
    for (i, a), row in system.transitions.items():
        pl, env, b = system.state_parts(i)
        s_pl, s_env, bi = plant.index_of(pl), modes[0].index_of(env), beliefs.index_of(b)
        for j, p in row:
            pl2, env2, b2 = system.state_parts(j)
            t_pl, t_env = plant.index_of(pl2), modes[0].index_of(env2)
            assert beliefs.names[beliefs.next_belief(bi, s_env, t_env)] == b2
            mix = sum(w * m.prob(s_env, t_env) for w, m in zip(beliefs.vectors[bi], modes))
            assert p == pytest.approx(dict(plant.row(s_pl, a)).get(t_pl, 0.0) * mix, abs=1e-12)
            checked += 1
    assert checked > 200


def test_trivial_plant_adds_only_its_label(project):
    env = project.env_models[0]
    plant = LabeledMdp.build(["here"], ["wait"], {("here", "wait"): {"here": 1.0}}, "here",
                             labels={"here": ["parked"]})
    system = compose(plant, env)
    assert system.num_states == env.num_states
    for i in range(system.num_states):
        e = env.index_of(system.state_parts(i)[1])
        assert system.labels[i] == env.labels[e] | {"parked"}
        assert [p for _, p in system.transitions[i, 0]] == [p for _, p in env.successors(e)]


def test_true_automaton_product_is_the_model(system):
    product = product_with_dra(system, ltl_to_dra(parse_ltl("True")))
    assert product.num_states <= system.num_states
    for i in range(product.num_states):
        s = product.base_index[i]
        for a in product.model.enabled(i):
            mapped = {product.base_index[j]: p for j, p in product.model.transitions[i, a]}
            assert mapped == dict(system.transitions[s, a])


def test_product_initial_reads_first_label():
    mdp = LabeledMdp.build(["s"], ["a"], {("s", "a"): {"s": 1.0}}, "s", labels={"s": ["q"]},
                           propositions=["p", "q"])
    product = product_with_dra(mdp, ltl_to_dra(parse_ltl("p U q")))
    assert product.decode(product.model.initial).dra == "q1"
    assert product.model.labels[0] == {"q1"}


def test_projection_keeps_probabilities(system):
    product = product_with_dra(system, ltl_to_dra(parse_ltl("!col U goal")))
    for (i, a), row in product.model.transitions.items():
        base = dict(system.transitions[product.base_index[i], a])
        projected = {}
        for j, p in row:
            projected[product.base_index[j]] = projected.get(product.base_index[j], 0.0) + p
        assert projected == pytest.approx(base)
        assert len(projected) == len(row)


@given(st.integers(min_value=0, max_value=5000), st.sampled_from(["p U q", "F q", "G p",
                                                                  "G F p", "F G q"]))
def test_product_lasso_acceptance_matches_semantics(seed, text):
    rng = random.Random(seed)
    mdp = random_mdp(seed, 4, 2)
    labels = {name: [x for x in ("p", "q") if rng.random() < 0.5] for name in mdp.states}
    mdp = LabeledMdp.build(mdp.states, mdp.actions,
                           {(mdp.states[s], mdp.actions[a]): {mdp.states[t]: p for t, p in row}
                            for (s, a), row in mdp.transitions.items()},
                           mdp.states[0], labels=labels, propositions=["p", "q"])
    f = parse_ltl(text)
    dra = ltl_to_dra(f)
    product = product_with_dra(mdp, dra)
    model = product.model
    path = [model.initial]
    while path.count(path[-1]) < 2:
        s = path[-1]
        a = rng.choice(model.enabled(s))
        path.append(rng.choice(model.transitions[s, a])[0])
    j = path.index(path[-1])
    loop = path[j:-1]
    word = [mdp.labels[product.base_index[s]] for s in path]
    assert [product.dra_index[s] for s in path] == dra_run(dra, word)[1:]
    inf = {product.dra_index[s] for s in loop}
    accepted = any(not (inf & pair.avoid) and inf & pair.repeat for pair in dra.acceptance)
    assert accepted == holds(f, word[:j], word[j:-1])


def test_composite_state_key(system):
    product = product_with_dra(system, ltl_to_dra(parse_ltl("!col U goal")))
    c = product.decode(product.model.initial)
    assert c == CompositeState("c0", "c1", "B5", "q0")
    assert c.key() == "plant=c0 env=c1 belief=B5 dra=q0"
    assert product.find(plant="c8", env="c7", belief="B0", dra="q1")


def test_shared_propositions_rejected():
    plant = LabeledMdp.build(["x"], ["a"], {("x", "a"): {"x": 1.0}}, "x", labels={"x": ["p"]})
    env = LabeledMarkovChain.build(["y"], {"y": {"y": 1.0}}, "y", labels={"y": ["p"]})
    with pytest.raises(PropositionCollisionError, match="p"):
        compose(plant, env)


def test_mode_count_mismatch(project):
    with pytest.raises(ModelMismatchError):
        build_belief_mc(project.env_models[:1], project.beliefs)


def test_automaton_atoms_must_exist(project):
    with pytest.raises(PropositionMismatchError, match="goal"):
        product_with_dra(project.plant, ltl_to_dra(parse_ltl("!col U goal")))


def test_derived_props(project, system):
    goal = [i for i in range(system.num_states) if "goal" in system.labels[i]]
    assert goal and all(system.state_parts(i)[0] == "c8" for i in goal)
    col = [i for i in range(system.num_states) if "col" in system.labels[i]]
    assert col and all(system.state_parts(i)[0] == system.state_parts(i)[1] for i in col)
    with pytest.raises(PropositionCollisionError):
        add_derived_props(system, {"goal": parse_ltl("c8_pl")})


def test_induced_chain_keeps_rows():
    mdp = random_mdp(3, 4, 2)
    policy = {s: mdp.enabled(s)[-1] for s in range(4)}
    chain = induced_chain(mdp, policy)
    assert all(chain.successors(s) == mdp.transitions[s, policy[s]] for s in range(4))
