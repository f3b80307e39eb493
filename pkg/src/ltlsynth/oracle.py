"""Brute-force reference implementations for cross-checking the solvers.

Everything here is deliberately naive: exhaustive enumeration over policies,
subsets and game trees, with exact rational arithmetic where the inputs allow
it. Size guards keep the enumerations at desk scale.
"""
from __future__ import annotations

import itertools
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import SizeLimitError
from .models import Amdp, LabeledMdp

GRID = tuple(range(1, 11))   # weights 0.1 .. 1.0 before normalizing
MAX_UPFRONT_POLICIES = 20_000


def to_fraction(p: float, max_denominator: int = 1000) -> Fraction:
    """Recover the small-denominator rational a float was computed from."""
    return Fraction(p).limit_denominator(max_denominator)


def _random_row(rng: random.Random, n: int, support: int = 3) -> dict[int, Fraction]:
    k = rng.randint(1, min(support, n))
    targets = rng.sample(range(n), k)
    weights = [rng.choice(GRID) for _ in targets]
    total = sum(weights)
    return {t: Fraction(w, total) for t, w in zip(targets, weights)}


def _nonempty_subset(rng: random.Random, m: int) -> list[int]:
    while True:
        chosen = [i for i in range(m) if rng.random() < 0.7]
        if chosen:
            return chosen


def random_mdp(seed: int, num_states: int = 4, num_actions: int = 2,
               support: int = 3) -> LabeledMdp:
    """Seeded random MDP; every state has at least one enabled action."""
    rng = random.Random(seed)
    names = [f"s{i}" for i in range(num_states)]
    acts = [f"a{i}" for i in range(num_actions)]
    trans = {}
    for s in range(num_states):
        for a in _nonempty_subset(rng, num_actions):
            row = _random_row(rng, num_states, support)
            trans[names[s], acts[a]] = {names[t]: float(p) for t, p in row.items()}
    return LabeledMdp.build(names, acts, trans, names[0])


def random_amdp(seed: int, num_states: int = 4, num_control: int = 2,
                num_adversarial: int = 2, support: int = 3) -> Amdp:
    """Seeded random AMDP satisfying rectangularity."""
    rng = random.Random(seed)
    names = [f"s{i}" for i in range(num_states)]
    ctrl = [f"a{i}" for i in range(num_control)]
    adv = [f"b{i}" for i in range(num_adversarial)]
    trans = {}
    for s in range(num_states):
        advs = _nonempty_subset(rng, num_adversarial)
        for a in _nonempty_subset(rng, num_control):
            for b in advs:
                row = _random_row(rng, num_states, support)
                trans[names[s], ctrl[a], adv[b]] = {names[t]: float(p) for t, p in row.items()}
    return Amdp.build(names, ctrl, adv, trans, names[0])


def random_goals(seed: int, num_states: int, max_goals: int = 1) -> frozenset[int]:
    rng = random.Random(seed * 7919 + 17)
    k = rng.randint(1, min(max_goals, num_states))
    return frozenset(rng.sample(range(num_states), k))


def _exact_rows(amdp: Amdp, exact: bool):
    conv = to_fraction if exact else float
    return {key: tuple((t, conv(p)) for t, p in row) for key, row in amdp.transitions.items()}


@dataclass(frozen=True)
class HorizonValue:
    horizon: int
    values: tuple
    by_horizon: tuple = ()

    def as_floats(self) -> list[float]:
        return [float(v) for v in self.values]


def alternating_game_value(amdp: Amdp, goals: Iterable[int], horizon: int,
                           exact: bool = True, max_states: int = 6,
                           max_horizon: int = 12) -> HorizonValue:
    """Value of reaching ``goals`` within ``horizon`` steps when the players
    alternate: at each step the controller commits to an action, then the
    adversary answers with the worst action for the controller.

    Computed by recursion on the remaining horizon.
    """
    n = amdp.num_states
    if n > max_states or horizon > max_horizon:
        raise SizeLimitError(f"alternating oracle limited to {max_states} states and "
                             f"horizon {max_horizon} (got {n}, {horizon})")
    goals = frozenset(goals)
    rows = _exact_rows(amdp, exact)
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    v = tuple(one if s in goals else zero for s in range(n))
    history = [v]
    for _ in range(horizon):
        v = tuple(one if s in goals else _max_min(amdp, rows, s, v) for s in range(n))
        history.append(v)
    return HorizonValue(horizon, v, tuple(history))


def _max_min(amdp, rows, s, v):
    best = None
    for a in amdp.enabled_control(s):
        worst = None
        for b in amdp.enabled_adversarial(s):
            total = sum(p * v[t] for t, p in rows[s, a, b])
            worst = total if worst is None or total < worst else worst
        best = worst if best is None or worst > best else best
    return best


def game_value_plateau(amdp: Amdp, goals: Iterable[int], tol: float = 1e-12,
                       max_horizon: int = 1_000_000) -> tuple[list[float], int]:
    """Extend the alternating recursion in floats until it stops changing."""
    goals = frozenset(goals)
    n = amdp.num_states
    rows = _exact_rows(amdp, exact=False)
    v = [1.0 if s in goals else 0.0 for s in range(n)]
    for k in range(1, max_horizon + 1):
        new = [1.0 if s in goals else _max_min(amdp, rows, s, v) for s in range(n)]
        delta = max(abs(a - b) for a, b in zip(new, v))
        v = new
        if delta < tol:
            return v, k
    return v, max_horizon


def count_upfront_policies(amdp: Amdp, goals: Iterable[int], horizon: int,
                           start: int) -> int:
    """Number of control policies (restricted to relevant histories)."""
    goals = frozenset(goals)

    def count(s, r):
        if s in goals or r == 0:
            return 1
        total = 0
        for a in amdp.enabled_control(s):
            prod = 1
            for t in _children(amdp, s, a):
                prod *= count(t, r - 1)
            total += prod
        return total
    return count(start, horizon)


def _children(amdp: Amdp, s: int, a: int) -> list[int]:
    return sorted({t for b in amdp.enabled_adversarial(s) for t, _ in amdp.transitions[s, a, b]})


def upfront_policies_value(amdp: Amdp, goals: Iterable[int], horizon: int,
                           max_states: int = 4, max_horizon: int = 4, max_actions: int = 2,
                           max_policies: int = MAX_UPFRONT_POLICIES) -> HorizonValue:
    """Value of reaching ``goals`` within ``horizon`` steps when both players
    fix their whole (history-dependent) policy before the run starts.

    Every control policy is enumerated explicitly. Against a fixed control
    policy the adversary's best history-dependent answer is found on the
    history tree. The result is the best control policy's guaranteed value.
    """
    n = amdp.num_states
    if n > max_states or horizon > max_horizon or \
            len(amdp.control_actions) > max_actions or len(amdp.adversarial_actions) > max_actions:
        raise SizeLimitError(f"upfront oracle limited to {max_states} states, horizon "
                             f"{max_horizon} and {max_actions} actions per player")
    goals = frozenset(goals)
    rows = _exact_rows(amdp, exact=True)
    values = []
    for s in range(n):
        if count_upfront_policies(amdp, goals, horizon, s) > max_policies:
            raise SizeLimitError(f"more than {max_policies} control policies from state {s}")
        if s in goals:
            values.append(Fraction(1))
            continue
        best = None
        for policy in _policies(amdp, goals, (s,), horizon):
            v = _adversary_best_response(amdp, rows, goals, policy, (s,), horizon)
            best = v if best is None or v > best else best
        values.append(best)
    return HorizonValue(horizon, tuple(values))


def _policies(amdp, goals, history, r):
    """Yield every map history -> control action over the relevant histories."""
    s = history[-1]
    if s in goals or r == 0:
        yield {}
        return
    for a in amdp.enabled_control(s):
        subtrees = [list(_policies(amdp, goals, history + (t,), r - 1))
                    for t in _children(amdp, s, a)]
        for combo in itertools.product(*subtrees):
            policy = {history: a}
            for sub in combo:
                policy.update(sub)
            yield policy


def _adversary_best_response(amdp, rows, goals, policy, history, r) -> Fraction:
    s = history[-1]
    if s in goals:
        return Fraction(1)
    if r == 0:
        return Fraction(0)
    a = policy[history]
    worst = None
    for b in amdp.enabled_adversarial(s):
        total = sum((p * _adversary_best_response(amdp, rows, goals, policy, history + (t,), r - 1)
                     for t, p in rows[s, a, b]), Fraction(0))
        worst = total if worst is None or total < worst else worst
    return worst


# ---------------------------------------------------------------- duality

def all_functions(domain: Sequence, codomain: Sequence) -> list[tuple]:
    """Every function domain -> codomain, as tuples indexed like ``domain``."""
    return list(itertools.product(codomain, repeat=len(domain)))


def is_complete(gset: Sequence[Sequence[int]], num_t: int) -> bool:
    """Whether any two functions can be combined pointwise at any two distinct
    arguments."""
    gset = [tuple(g) for g in gset]
    present = set(gset)
    for t1, t2 in itertools.permutations(range(num_t), 2):
        for g1, g2 in itertools.product(gset, repeat=2):
            if not any(g[t1] == g1[t1] and g[t2] == g2[t2] for g in present):
                return False
    return True


@dataclass(frozen=True)
class DualityReport:
    min_sum_max: object       # min_u sum_t F(u,t) max_g G(g(t),t)
    min_max_sum: object       # min_u max_g sum_t F(u,t) G(g(t),t)
    max_min_sum: object       # max_g min_u sum_t F(u,t) G(g(t),t)
    min_sum_min: object       # min_u sum_t F(u,t) min_g G(g(t),t)
    min_min_sum: object       # min_u min_g sum_t F(u,t) G(g(t),t)
    complete: bool
    witness_u: int
    witness_g: tuple

    @property
    def first_equality(self) -> bool:
        return self.min_sum_max == self.min_max_sum

    @property
    def second_equality(self) -> bool:
        return self.min_max_sum == self.max_min_sum

    @property
    def min_equality(self) -> bool:
        return self.min_sum_min == self.min_min_sum

    @property
    def all_hold(self) -> bool:
        return self.first_equality and self.second_equality and self.min_equality


def check_duality_instance(F: Sequence[Sequence], G: Sequence[Sequence],
                           gset: Sequence[Sequence[int]]) -> DualityReport:
    """Evaluate the min/max exchange identities by brute force.

    ``F[u][t]`` and ``G[v][t]`` are nonnegative tables and ``gset`` lists
    functions ``t -> v`` as tuples. Works on Fractions (exact) or floats.
    """
    gset = [tuple(g) for g in gset]
    us = range(len(F))
    ts = range(len(F[0]))

    def inner(u, g):
        return sum((F[u][t] * G[g[t]][t] for t in ts), 0 * F[0][0])

    best_g = [max(G[g[t]][t] for g in gset) for t in ts]
    worst_g = [min(G[g[t]][t] for g in gset) for t in ts]
    e1 = min(sum((F[u][t] * best_g[t] for t in ts), 0 * F[0][0]) for u in us)
    per_u_max = [max(inner(u, g) for g in gset) for u in us]
    e2 = min(per_u_max)
    per_g_min = [min(inner(u, g) for u in us) for g in gset]
    e3 = max(per_g_min)
    e4 = min(sum((F[u][t] * worst_g[t] for t in ts), 0 * F[0][0]) for u in us)
    e5 = min(inner(u, g) for u in us for g in gset)
    witness_u = min(us, key=lambda u: per_u_max[u])
    witness_g = gset[max(range(len(gset)), key=lambda i: per_g_min[i])]
    return DualityReport(e1, e2, e3, e4, e5, is_complete(gset, len(ts)), witness_u, witness_g)


def random_duality_instance(seed: int, num_u: int = 2, num_t: int = 2, num_v: int = 2,
                            denominator: int = 10):
    """Random rational tables with all functions t -> v as the family."""
    rng = random.Random(seed)
    F = [[Fraction(rng.randint(0, denominator), denominator) for _ in range(num_t)]
         for _ in range(num_u)]
    G = [[Fraction(rng.randint(0, denominator), denominator) for _ in range(num_t)]
         for _ in range(num_v)]
    return F, G, all_functions(range(num_t), range(num_v))


def incomplete_counterexample():
    """Family of two functions that cannot be mixed pointwise; the first
    identity fails (2 versus 1)."""
    F = [[Fraction(1), Fraction(1)]]
    G = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]   # G[v][t] = [v == t]
    gset = [(0, 0), (1, 1)]
    return F, G, gset


def parity_counterexample():
    """Even-parity functions on three arguments: pairwise complete, yet no
    member is 1 everywhere, so the first identity fails (3 versus 2)."""
    F = [[Fraction(1)] * 3]
    G = [[Fraction(0)] * 3, [Fraction(1)] * 3]
    gset = [g for g in itertools.product((0, 1), repeat=3) if sum(g) % 2 == 0]
    return F, G, gset


# ---------------------------------------------------------------- MDP brute force

def _chain_reach(P: np.ndarray, goals: frozenset[int]) -> np.ndarray:
    """Reachability probabilities in a Markov chain via a linear solve."""
    n = P.shape[0]
    can = set(goals)
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if s not in can and any(P[s, t] > 0 for t in can):
                can.add(s)
                changed = True
    unknown = [s for s in range(n) if s in can and s not in goals]
    x = np.zeros(n)
    x[list(goals)] = 1.0
    if unknown:
        A = np.eye(len(unknown)) - P[np.ix_(unknown, unknown)]
        b = P[np.ix_(unknown, sorted(goals))].sum(axis=1) if goals else np.zeros(len(unknown))
        x[unknown] = np.linalg.solve(A, b)
    return x


def brute_force_max_reach(mdp: LabeledMdp, goals: Iterable[int]) -> np.ndarray:
    """Max reachability by enumerating every memoryless deterministic policy."""
    goals = frozenset(goals)
    n = mdp.num_states
    choices = [mdp.enabled(s) for s in range(n)]
    best = np.zeros(n)
    for policy in itertools.product(*choices):
        P = np.zeros((n, n))
        for s, a in enumerate(policy):
            for t, p in mdp.transitions[s, a]:
                P[s, t] += p
        best = np.maximum(best, _chain_reach(P, goals))
    return best


def enumerate_mecs(mdp: LabeledMdp) -> list[tuple[frozenset[int], dict[int, frozenset[int]]]]:
    """Maximal end components by checking every (state set, action map) pair."""
    n = mdp.num_states
    ecs = []
    for size in range(1, n + 1):
        for T in itertools.combinations(range(n), size):
            Tset = frozenset(T)
            options = []
            for s in T:
                closed = [a for a in mdp.enabled(s)
                          if all(t in Tset for t, _ in mdp.transitions[s, a])]
                options.append([frozenset(c) for k in range(1, len(closed) + 1)
                                for c in itertools.combinations(closed, k)])
            for combo in itertools.product(*options):
                amap = dict(zip(T, combo))
                if _strongly_connected(mdp, Tset, amap):
                    ecs.append((Tset, amap))

    def contained(e, f):
        return e[0] <= f[0] and all(e[1][s] <= f[1][s] for s in e[0])

    return [e for e in ecs if not any(e != f and contained(e, f) for f in ecs)]


def _strongly_connected(mdp, T, amap) -> bool:
    adj = {s: {t for a in amap[s] for t, _ in mdp.transitions[s, a]} for s in T}
    for s in T:
        seen = {s}
        stack = [s]
        while stack:
            for t in adj[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        if seen != T:
            return False
    return True


def brute_force_winning_region(amdp: Amdp, allowed: Iterable[int],
                               target: Iterable[int]) -> frozenset[int]:
    """States from which some memoryless controller keeps the play inside
    ``allowed`` and visits ``target`` infinitely often with probability 1,
    whatever memoryless answer ``(state, action) -> adversarial action``
    the adversary uses."""
    allowed = frozenset(allowed)
    target = frozenset(target)
    n = amdp.num_states
    ctrl_opts = [amdp.enabled_control(s) for s in range(n)]
    pairs = [(s, a) for s in range(n) for a in amdp.enabled_control(s)]
    adv_opts = [amdp.enabled_adversarial(s) for s, _ in pairs]
    adversaries = list(itertools.product(*adv_opts))
    if len(adversaries) * np.prod([len(c) for c in ctrl_opts]) > 200_000:
        raise SizeLimitError("instance too large for the brute-force winning region")
    winners = set()
    for sigma in itertools.product(*ctrl_opts):
        good = set(range(n))
        for pi in adversaries:
            beta = dict(zip(pairs, pi))
            succ = {s: {t for t, _ in amdp.transitions[s, sigma[s], beta[s, sigma[s]]]}
                    for s in range(n)}
            good &= _buchi_sure_states(succ, allowed, target)
            if not good:
                break
        winners |= good
    return frozenset(winners)


def _buchi_sure_states(succ: dict[int, set[int]], allowed, target) -> set[int]:
    """States of a finite chain from which every reachable state is allowed and
    every reachable bottom SCC meets ``target``."""
    n = len(succ)
    reach = []
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            for t in succ[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        reach.append(seen)
    bottom_ok = {}
    for s in range(n):
        is_bottom = all(s in reach[t] for t in reach[s])
        if is_bottom:
            bottom_ok[s] = bool(reach[s] & target)
    out = set()
    for s in range(n):
        if not reach[s] <= allowed:
            continue
        if all(bottom_ok[t] for t in reach[s] if t in bottom_ok):
            out.add(s)
    return out
