"""Model constructions: belief chain, parallel composition, system AMDP, DRA product.

Composite states keep their component names in ``parts`` so that reports and
policy files can print ``plant=c0 env=c1 belief=B5 dra=q0`` instead of an
opaque index. All state orders are lexicographic over component indices.
"""
from __future__ import annotations

import itertools
from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

from .automata import Dra
from .errors import ModelError, ModelMismatchError, PropositionCollisionError, PropositionMismatchError
from .ltl import Formula, atoms, eval_prop
from .models import Amdp, BeliefTable, LabeledMarkovChain, LabeledMdp

SEP = "|"


@dataclass(frozen=True)
class CompositeState:
    plant: str | None = None
    env: str | None = None
    belief: str | None = None
    dra: str | None = None

    def key(self) -> str:
        fields = (("plant", self.plant), ("env", self.env),
                  ("belief", self.belief), ("dra", self.dra))
        return " ".join(f"{k}={v}" for k, v in fields if v is not None)

    @classmethod
    def from_parts(cls, parts: Sequence[str], dra: str | None = None) -> CompositeState:
        if len(parts) == 3:
            return cls(parts[0], parts[1], parts[2], dra)
        if len(parts) == 2:
            return cls(parts[0], parts[1], None, dra)
        return cls(SEP.join(parts), None, None, dra)


@dataclass
class ProductModel:
    """A model composed with a DRA, plus analysis results attached later.

    ``base_index[i]`` and ``dra_index[i]`` give the base-model state and the
    automaton state of product state ``i``.
    """

    model: LabeledMdp | Amdp
    base: LabeledMdp | Amdp
    dra: Dra
    base_index: tuple[int, ...]
    dra_index: tuple[int, ...]
    goal_states: frozenset[int] | None = None
    components: list = field(default_factory=list)
    beliefs: BeliefTable | None = None

    @property
    def is_adversarial(self) -> bool:
        return isinstance(self.model, Amdp)

    @property
    def num_states(self) -> int:
        return self.model.num_states

    def decode(self, i: int) -> CompositeState:
        return CompositeState.from_parts(self.base.state_parts(self.base_index[i]),
                                         self.dra.states[self.dra_index[i]])

    @property
    def state_decode(self) -> list[CompositeState]:
        return [self.decode(i) for i in range(self.num_states)]

    def find(self, **components) -> list[int]:
        """Product states whose decoded components match all given values."""
        out = []
        for i in range(self.num_states):
            c = self.decode(i)
            if all(getattr(c, k) == v for k, v in components.items()):
                out.append(i)
        return out


def _check_env_models(env_models: Sequence[LabeledMarkovChain], beliefs: BeliefTable):
    if not env_models:
        raise ModelMismatchError("at least one environment mode is required")
    first = env_models[0]
    for i, m in enumerate(env_models[1:], start=2):
        if m.states != first.states:
            raise ModelMismatchError(f"environment mode {i} has a different state set")
        if m.initial != first.initial:
            raise ModelMismatchError(f"environment mode {i} has a different initial state")
        if m.labels != first.labels or m.propositions != first.propositions:
            raise ModelMismatchError(f"environment mode {i} has a different labeling")
    if tuple(beliefs.env_states) != tuple(first.states):
        raise ModelMismatchError("belief update table is over different environment states")
    if beliefs.num_modes != len(env_models):
        raise ModelMismatchError(
            f"beliefs have {beliefs.num_modes} modes but {len(env_models)} environment models given")


def _env_successors(env_models, beliefs: BeliefTable, s: int, b: int) -> dict[tuple[int, int], float]:
    out: dict[tuple[int, int], float] = {}
    for weight, m in zip(beliefs.vectors[b], env_models):
        if weight <= 0:
            continue
        row = m.transitions.get(s)
        if row is None:
            raise ModelError(f"environment state {m.states[s]} has no transitions")
        for t, p in row:
            key = (t, beliefs.next_belief(b, s, t))
            out[key] = out.get(key, 0.0) + weight * p
    return out


def _explore(initial, successors):
    """Breadth-first reachability; returns the sorted list of reached keys."""
    seen = {initial}
    queue = deque([initial])
    while queue:
        for t in successors(queue.popleft()):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return sorted(seen)


def build_belief_mc(env_models: Sequence[LabeledMarkovChain], beliefs: BeliefTable,
                    prune: bool = True) -> LabeledMarkovChain:
    """Markov chain over (environment state, belief) pairs.

    The step probability mixes the modes by the current belief and moves the
    belief along the update table.
    """
    _check_env_models(env_models, beliefs)
    env = env_models[0]
    init = (env.initial, beliefs.initial)
    if prune:
        keys = _explore(init, lambda k: _env_successors(env_models, beliefs, *k).keys())
    else:
        keys = list(itertools.product(range(env.num_states), range(len(beliefs.names))))
    index = {k: i for i, k in enumerate(keys)}
    trans = {}
    for k in keys:
        row = {index[t]: p for t, p in _env_successors(env_models, beliefs, *k).items() if p > 0}
        trans[index[k]] = tuple(sorted(row.items()))
    parts = tuple((env.states[s], beliefs.names[b]) for s, b in keys)
    return LabeledMarkovChain(
        states=tuple(SEP.join(p) for p in parts),
        transitions=trans,
        initial=index[init],
        propositions=env.propositions,
        labels=tuple(env.labels[s] for s, _ in keys),
        parts=parts,
    )


def compose(plant: LabeledMdp, env: LabeledMarkovChain, prune: bool = False) -> LabeledMdp:
    """Synchronous product of a plant MDP and an environment chain.

    By default every pair of states is kept; pass ``prune=True`` to keep only
    the part reachable from the joint initial state.
    """
    clash = plant.propositions & env.propositions
    if clash:
        raise PropositionCollisionError(
            f"propositions emitted by both plant and environment: {', '.join(sorted(clash))}")

    def succ(key):
        s1, s2 = key
        for a in plant.enabled(s1):
            for t1, _ in plant.transitions[s1, a]:
                for t2, _ in env.successors(s2):
                    yield (t1, t2)

    init = (plant.initial, env.initial)
    if prune:
        keys = _explore(init, succ)
    else:
        keys = list(itertools.product(range(plant.num_states), range(env.num_states)))
    index = {k: i for i, k in enumerate(keys)}
    trans = {}
    for i, (s1, s2) in enumerate(keys):
        env_row = env.successors(s2)
        for a in plant.enabled(s1):
            row = {}
            for t1, p1 in plant.transitions[s1, a]:
                for t2, p2 in env_row:
                    j = index.get((t1, t2))
                    if j is not None:
                        row[j] = row.get(j, 0.0) + p1 * p2
            if row:
                trans[i, a] = tuple(sorted(row.items()))
    parts = tuple(plant.state_parts(s1) + env.state_parts(s2) for s1, s2 in keys)
    return LabeledMdp(
        states=tuple(SEP.join(p) for p in parts),
        actions=plant.actions,
        transitions=trans,
        initial=index[init],
        propositions=plant.propositions | env.propositions,
        labels=tuple(plant.labels[s1] | env.labels[s2] for s1, s2 in keys),
        parts=parts,
    )


def induced_chain(mdp: LabeledMdp, policy: Mapping[int, int]) -> LabeledMarkovChain:
    """Markov chain obtained by fixing a memoryless ``state -> action`` policy."""
    trans = {}
    for s in range(mdp.num_states):
        trans[s] = mdp.row(s, policy[s])
    return LabeledMarkovChain(mdp.states, trans, mdp.initial, mdp.propositions,
                              mdp.labels, mdp.parts)


def build_system_amdp(plant: LabeledMdp, env_models: Sequence[LabeledMarkovChain],
                      beliefs: BeliefTable, mode_names: Sequence[str] | None = None) -> Amdp:
    """Complete system in which an adversary picks the environment mode each step.

    Mode ``i`` is available at belief ``B`` iff ``B`` gives it positive weight.
    Only the part reachable from the initial state is kept.
    """
    _check_env_models(env_models, beliefs)
    env = env_models[0]
    clash = plant.propositions & env.propositions
    if clash:
        raise PropositionCollisionError(
            f"propositions emitted by both plant and environment: {', '.join(sorted(clash))}")
    if mode_names is None:
        mode_names = beliefs.mode_names or tuple(f"beta{i + 1}" for i in range(len(env_models)))
    mode_names = tuple(mode_names)

    def rows(key):
        s_pl, s_env, b = key
        for i, (weight, m) in enumerate(zip(beliefs.vectors[b], env_models)):
            if weight <= 0:
                continue
            env_row = m.transitions.get(s_env)
            if env_row is None:
                raise ModelError(f"environment state {m.states[s_env]} has no transitions in mode {i + 1}")
            for a in plant.enabled(s_pl):
                row = {}
                for t1, p1 in plant.transitions[s_pl, a]:
                    for t2, p2 in env_row:
                        k = (t1, t2, beliefs.next_belief(b, s_env, t2))
                        row[k] = row.get(k, 0.0) + p1 * p2
                yield a, i, row

    init = (plant.initial, env.initial, beliefs.initial)
    keys = _explore(init, lambda k: (t for _, _, row in rows(k) for t in row))
    index = {k: i for i, k in enumerate(keys)}
    trans = {}
    for idx, key in enumerate(keys):
        for a, i, row in rows(key):
            trans[idx, a, i] = tuple(sorted((index[t], p) for t, p in row.items() if p > 0))
    parts = tuple(plant.state_parts(s) + (env.states[e], beliefs.names[b]) for s, e, b in keys)
    return Amdp(
        states=tuple(SEP.join(p) for p in parts),
        control_actions=plant.actions,
        adversarial_actions=mode_names,
        transitions=trans,
        initial=index[init],
        propositions=plant.propositions | env.propositions,
        labels=tuple(plant.labels[s] | env.labels[e] for s, e, _ in keys),
        parts=parts,
    )


def add_derived_props(model, defines: Mapping[str, Formula]):
    """Add propositions defined as boolean formulas over existing ones."""
    clash = set(defines) & model.propositions
    if clash:
        raise PropositionCollisionError(
            f"derived proposition(s) already exist: {', '.join(sorted(clash))}")
    for name, f in defines.items():
        unknown = atoms(f) - model.propositions
        if unknown:
            raise PropositionMismatchError(
                f"definition of {name} uses unknown proposition(s) {', '.join(sorted(unknown))}")
    labels = tuple(
        lab | frozenset(name for name, f in defines.items() if eval_prop(f, lab))
        for lab in model.labels)
    return replace(model, labels=labels, propositions=model.propositions | frozenset(defines))


def product_with_dra(model: LabeledMdp | Amdp, dra: Dra) -> ProductModel:
    """Product of a model with a DRA, restricted to reachable states.

    The automaton reads the label of every state entered, including the
    initial one, so the product starts in ``(s_init, step(q_init, L(s_init)))``.
    Product labels are the automaton states.
    """
    missing = dra.propositions - model.propositions
    if missing:
        raise PropositionMismatchError(
            f"automaton uses proposition(s) the model does not define: {', '.join(sorted(missing))}")
    adversarial = isinstance(model, Amdp)
    labels = model.labels

    if adversarial:
        by_state: dict[int, list] = {}
        for (s, a, b), row in model.transitions.items():
            if a in model.enabled_control(s) and b in model.enabled_adversarial(s):
                by_state.setdefault(s, []).append(((a, b), row))
    else:
        by_state = {}
        for (s, a), row in model.transitions.items():
            if a in model.enabled(s):
                by_state.setdefault(s, []).append((a, row))

    def succ(key):
        s, q = key
        for _, row in by_state.get(s, ()):
            for t, _ in row:
                yield (t, dra.step(q, labels[t]))

    init = (model.initial, dra.step(dra.initial, labels[model.initial]))
    keys = _explore(init, succ)
    index = {k: i for i, k in enumerate(keys)}
    trans = {}
    for i, (s, q) in enumerate(keys):
        for act, row in sorted(by_state.get(s, ()), key=lambda x: x[0]):
            new = {}
            for t, p in row:
                j = index[t, dra.step(q, labels[t])]
                new[j] = new.get(j, 0.0) + p
            key = (i,) + (act if adversarial else (act,))
            trans[key] = tuple(sorted(new.items()))
    names = tuple(f"{model.states[s]}{SEP}{dra.states[q]}" for s, q in keys)
    parts = tuple(model.state_parts(s) + (dra.states[q],) for s, q in keys)
    common = dict(
        states=names,
        transitions=trans,
        initial=index[init],
        propositions=frozenset(dra.states),
        labels=tuple(frozenset([dra.states[q]]) for _, q in keys),
        parts=parts,
    )
    if adversarial:
        pmodel = Amdp(control_actions=model.control_actions,
                      adversarial_actions=model.adversarial_actions, **common)
    else:
        pmodel = LabeledMdp(actions=model.actions, **common)
    return ProductModel(pmodel, model, dra,
                        tuple(s for s, _ in keys), tuple(q for _, q in keys))
