"""End-component analysis of products.

``mec_decomposition`` is the usual SCC refinement loop. For adversarial
products the goal region of a Rabin pair ``(H, K)`` is the largest set of
non-H states that the controller can keep the play in against every
adversarial action while visiting ``K`` infinitely often with probability 1.
It is computed as a greatest fixpoint that alternates a closure step with a
positive attractor to ``K``.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .automata import RabinPair
from .composition import ProductModel
from .models import Amdp, LabeledMdp


@dataclass(frozen=True)
class EndComponent:
    """State set with the actions allowed in each state.

    ``progress`` is only set for adversarial goal regions: it maps states
    outside the pair's repeat set to the action that moves toward it.
    """

    states: frozenset[int]
    actions: dict[int, tuple[int, ...]]
    progress: dict[int, int] = field(default_factory=dict)
    repeat: frozenset[int] = frozenset()

    def __contains__(self, s: int) -> bool:
        return s in self.states


def mec_decomposition(mdp: LabeledMdp, allowed: Iterable[int] | None = None) -> list[EndComponent]:
    """Maximal end components of ``mdp`` restricted to the ``allowed`` states.

    Returned in ascending order of their smallest state.
    """
    alive = set(range(mdp.num_states)) if allowed is None else set(allowed)
    acts = {s: set(mdp.enabled(s)) for s in alive}
    scc = np.zeros(mdp.num_states, dtype=np.int64)
    while True:
        # drop actions that can leave the current state set, then empty states
        _trim(mdp, alive, acts, lambda s, a, t: t in alive)
        if not alive:
            return []
        scc = _scc_labels(mdp, alive, acts)
        changed = _trim(mdp, alive, acts, lambda s, a, t: scc[t] == scc[s])
        if not changed:
            break
    groups: dict[int, set[int]] = {}
    for s in alive:
        groups.setdefault(int(scc[s]), set()).add(s)
    comps = [EndComponent(frozenset(g), {s: tuple(sorted(acts[s])) for s in g})
             for g in groups.values()]
    return sorted(comps, key=lambda c: min(c.states))


def _trim(mdp, alive, acts, keep) -> bool:
    changed = False
    again = True
    while again:
        again = False
        for s in sorted(alive):
            for a in list(acts[s]):
                if not all(t in alive and keep(s, a, t) for t, _ in mdp.transitions[s, a]):
                    acts[s].discard(a)
                    changed = True
            if not acts[s]:
                alive.discard(s)
                del acts[s]
                changed = again = True
    return changed


def _scc_labels(mdp, alive, acts) -> np.ndarray:
    rows, cols = [], []
    for s in alive:
        for a in acts[s]:
            for t, _ in mdp.transitions[s, a]:
                rows.append(s)
                cols.append(t)
    n = mdp.num_states
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=True, connection="strong")
    return labels


def _pairs(product: ProductModel, acc: Sequence[RabinPair] | None) -> Sequence[RabinPair]:
    return product.dra.acceptance if acc is None else acc


def accepting_mecs(product: ProductModel, acc: Sequence[RabinPair] | None = None) -> frozenset[int]:
    """Union of MECs that satisfy some Rabin pair; stored on ``product``.

    For each pair the decomposition runs on the sub-MDP without avoid states.
    """
    model = product.model
    if isinstance(model, Amdp):
        raise TypeError("accepting_mecs expects an MDP product; use adversarial_amecs")
    goal: set[int] = set()
    comps = []
    for pair in _pairs(product, acc):
        allowed = [s for s in range(model.num_states) if product.dra_index[s] not in pair.avoid]
        for c in mec_decomposition(model, allowed):
            repeat = frozenset(s for s in c.states if product.dra_index[s] in pair.repeat)
            if repeat:
                comps.append(EndComponent(c.states, c.actions, repeat=repeat))
                goal |= c.states
    product.goal_states = frozenset(goal)
    product.components = comps
    return product.goal_states


def winning_region(amdp: Amdp, allowed: Iterable[int], target: Iterable[int]) -> EndComponent:
    """Largest closed sub-game from which ``target`` is visited infinitely often a.s.

    A control action survives only if every adversarial action keeps the play
    inside the region. Every surviving state must have a positive-probability
    path to ``target`` that the adversary cannot block.
    """
    alive = set(allowed)
    target = set(target)
    acts = {s: set(amdp.enabled_control(s)) for s in alive}
    while True:
        _close(amdp, alive, acts)
        goal = target & alive
        attr, progress = _positive_attractor(amdp, alive, acts, goal)
        if attr == alive:
            break
        for s in alive - attr:
            del acts[s]
        alive = attr
    return EndComponent(frozenset(alive), {s: tuple(sorted(acts[s])) for s in alive},
                        progress, frozenset(target & alive))


def _close(amdp: Amdp, alive: set[int], acts: dict[int, set[int]]):
    changed = True
    while changed:
        changed = False
        for s in sorted(alive):
            advs = amdp.enabled_adversarial(s)
            for a in list(acts[s]):
                if not all(t in alive for b in advs for t, _ in amdp.transitions[s, a, b]):
                    acts[s].discard(a)
            if not acts[s]:
                alive.discard(s)
                del acts[s]
                changed = True


def _positive_attractor(amdp: Amdp, alive, acts, goal) -> tuple[set[int], dict[int, int]]:
    # built in layers; a state joining a layer records the action with the
    # largest worst-case probability of entering the previous layers
    attr = set(goal)
    progress: dict[int, int] = {}
    while True:
        layer = {}
        for s in sorted(alive - attr):
            advs = amdp.enabled_adversarial(s)
            best, best_mass = None, 0.0
            for a in sorted(acts[s]):
                mass = min(sum(p for t, p in amdp.transitions[s, a, b] if t in attr) for b in advs)
                if mass > best_mass:
                    best, best_mass = a, mass
            if best is not None:
                layer[s] = best
        if not layer:
            return attr, progress
        progress.update(layer)
        attr |= layer.keys()


def almost_sure_reach(model: LabeledMdp | Amdp, goals: Iterable[int]) -> frozenset[int]:
    """States from which the controller reaches ``goals`` with probability 1
    (against every adversarial choice, for an AMDP)."""
    amdp = model if isinstance(model, Amdp) else as_amdp(model)
    goals = frozenset(goals)
    alive = set(range(amdp.num_states))
    while True:
        # keep only actions that cannot leave the candidate set, then require
        # positive progress toward the goals
        reach = set(goals)
        changed = True
        while changed:
            changed = False
            for s in sorted(alive - reach):
                advs = amdp.enabled_adversarial(s)
                for a in amdp.enabled_control(s):
                    rows = [amdp.transitions[s, a, b] for b in advs]
                    if all(t in alive for row in rows for t, _ in row) and \
                            all(any(t in reach for t, _ in row) for row in rows):
                        reach.add(s)
                        changed = True
                        break
        if reach == alive:
            return frozenset(alive)
        alive = reach


def adversarial_amecs(product: ProductModel, acc: Sequence[RabinPair] | None = None) -> frozenset[int]:
    """Union over Rabin pairs of the adversarial goal regions; stored on ``product``."""
    model = product.model
    if not isinstance(model, Amdp):
        raise TypeError("adversarial_amecs expects an AMDP product")
    goal: set[int] = set()
    comps = []
    for pair in _pairs(product, acc):
        allowed = [s for s in range(model.num_states) if product.dra_index[s] not in pair.avoid]
        target = [s for s in allowed if product.dra_index[s] in pair.repeat]
        region = winning_region(model, allowed, target)
        if region.states:
            comps.append(region)
            goal |= region.states
    product.goal_states = frozenset(goal)
    product.components = comps
    return product.goal_states


def as_amdp(mdp: LabeledMdp, adversary: str = "beta1") -> Amdp:
    """View an MDP as an AMDP with a single adversarial action."""
    return Amdp(mdp.states, mdp.actions, (adversary,),
                {(s, a, 0): row for (s, a), row in mdp.transitions.items()},
                mdp.initial, mdp.propositions, mdp.labels, mdp.parts)
