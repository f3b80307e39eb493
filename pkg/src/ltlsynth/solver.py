"""Reachability value iteration, minimax value iteration and policy extraction.

Both solvers start from the indicator of the goal set (optionally enlarged by
states known to reach it almost surely) and apply the Bellman operator until the largest per-state change drops below ``epsilon``. The
default is the Jacobi form (all states updated from the previous sweep);
``gauss_seidel=True`` updates in place.
"""
from __future__ import annotations

import logging
import time
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix

from .analysis import EndComponent, accepting_mecs, adversarial_amecs, almost_sure_reach
from .automata import Dra, ltl_to_dra
from .composition import (ProductModel, add_derived_props, build_belief_mc, build_system_amdp,
                          compose, product_with_dra)
from .errors import NonConvergenceError, PolicyGapError, PolicyInconsistencyError
from .ltl import Formula, parse_ltl
from .models import Amdp, BeliefTable, LabeledMarkovChain, LabeledMdp

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6
DEFAULT_MAX_ITERS = 100_000
ACT_MAX_TOL = 1e-6


@dataclass
class ValueVector:
    values: np.ndarray
    iterations: int
    residual: float
    epsilon: float
    history: list[np.ndarray] | None = None

    def __getitem__(self, s: int) -> float:
        return float(self.values[s])

    def __len__(self):
        return len(self.values)


class _Operator:
    """Sparse Bellman operator for an MDP or an AMDP.

    Rows of the transition matrix are the enabled (s, a) or (s, a, b) choices,
    sorted so that each state's (and each control action's) rows are
    contiguous; reductions then use ``ufunc.reduceat``.
    """

    def __init__(self, model: LabeledMdp | Amdp):
        self.adversarial = isinstance(model, Amdp)
        n = model.num_states
        keys = []
        if self.adversarial:
            for s in range(n):
                for a in model.enabled_control(s):
                    for b in model.enabled_adversarial(s):
                        keys.append((s, a, b))
        else:
            for s in range(n):
                for a in model.enabled(s):
                    keys.append((s, a))
        rows, cols, data = [], [], []
        for r, key in enumerate(keys):
            for t, p in model.transitions[key]:
                rows.append(r)
                cols.append(t)
                data.append(p)
        self.keys = keys
        self.matrix = csr_matrix((data, (rows, cols)), shape=(len(keys), n))
        states = np.array([k[0] for k in keys], dtype=np.int64)
        missing = np.setdiff1d(np.arange(n), states)
        if missing.size:
            raise NonConvergenceError(
                f"state {model.states[missing[0]]} has no enabled action; validate the model first")
        self.state_starts = np.flatnonzero(np.r_[True, states[1:] != states[:-1]])
        if self.adversarial:
            pairs = np.array([k[0] * (len(model.control_actions) + 1) + k[1] for k in keys])
            self.pair_starts = np.flatnonzero(np.r_[True, pairs[1:] != pairs[:-1]])
            pair_states = states[self.pair_starts]
            self.pair_state_starts = np.flatnonzero(
                np.r_[True, pair_states[1:] != pair_states[:-1]])

    def apply(self, x: np.ndarray) -> np.ndarray:
        q = self.matrix @ x
        if self.adversarial:
            inner = np.minimum.reduceat(q, self.pair_starts)
            return np.maximum.reduceat(inner, self.pair_state_starts)
        return np.maximum.reduceat(q, self.state_starts)


def _solve(model, goals, epsilon, max_iters, gauss_seidel, record, certain) -> ValueVector:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = model.num_states
    goal_mask = np.zeros(n, dtype=bool)
    goal_mask[list(goals)] = True
    if certain is not None:
        goal_mask[list(certain)] = True
    x = goal_mask.astype(float)
    history = [x.copy()] if record else None
    if gauss_seidel:
        return _solve_in_place(model, goal_mask, x, epsilon, max_iters, history)
    op = _Operator(model)
    for k in range(1, max_iters + 1):
        new = np.clip(op.apply(x), 0.0, 1.0)
        new[goal_mask] = 1.0
        residual = float(np.max(np.abs(new - x))) if n else 0.0
        x = new
        if record:
            history.append(x.copy())
        if residual < epsilon:
            return ValueVector(x, k, residual, epsilon, history)
    raise NonConvergenceError(f"value iteration did not converge within {max_iters} sweeps "
                              f"(last change {residual:.3g})", x)


def _solve_in_place(model, goal_mask, x, epsilon, max_iters, history) -> ValueVector:
    n = model.num_states
    for k in range(1, max_iters + 1):
        residual = 0.0
        for s in range(n):
            if goal_mask[s]:
                continue
            v = min(1.0, max(0.0, max(q_values(model, x, s).values())))
            residual = max(residual, abs(v - x[s]))
            x[s] = v
        if history is not None:
            history.append(x.copy())
        if residual < epsilon:
            return ValueVector(x, k, residual, epsilon, history)
    raise NonConvergenceError(f"value iteration did not converge within {max_iters} sweeps", x)


def max_reach_vi(mdp: LabeledMdp, goals: Iterable[int], epsilon: float = DEFAULT_EPSILON,
                 max_iters: int = DEFAULT_MAX_ITERS, gauss_seidel: bool = False,
                 record: bool = False, certain: Iterable[int] | None = None) -> ValueVector:
    """Maximal probability of reaching ``goals`` from every state.

    States in ``certain`` are known to reach the goals almost surely and are
    held at 1 from the start, like the goals themselves.
    """
    if isinstance(mdp, Amdp):
        raise TypeError("max_reach_vi expects an MDP; use minimax_vi for an AMDP")
    return _solve(mdp, goals, epsilon, max_iters, gauss_seidel, record, certain)


def minimax_vi(amdp: Amdp, goals: Iterable[int], epsilon: float = DEFAULT_EPSILON,
               max_iters: int = DEFAULT_MAX_ITERS, gauss_seidel: bool = False,
               record: bool = False, certain: Iterable[int] | None = None) -> ValueVector:
    """Max-min probability of reaching ``goals`` against an adversary.

    ``certain`` has the same meaning as for ``max_reach_vi``.
    """
    if not isinstance(amdp, Amdp):
        raise TypeError("minimax_vi expects an AMDP")
    return _solve(amdp, goals, epsilon, max_iters, gauss_seidel, record, certain)


def q_values(model: LabeledMdp | Amdp, x: np.ndarray, s: int) -> dict[int, float]:
    """One-step value of each enabled control action at ``s``.

    For an AMDP this is the minimum over the adversary's enabled actions.
    """
    if isinstance(model, Amdp):
        return {a: min(sum(p * x[t] for t, p in model.transitions[s, a, b])
                       for b in model.enabled_adversarial(s))
                for a in model.enabled_control(s)}
    return {a: sum(p * x[t] for t, p in model.transitions[s, a]) for a in model.enabled(s)}


def bellman_residual(model: LabeledMdp | Amdp, goals: Iterable[int], x: np.ndarray) -> float:
    """Largest |T(x)_s - x_s| over non-goal states."""
    goals = set(goals)
    worst = 0.0
    for s in range(model.num_states):
        if s in goals:
            continue
        worst = max(worst, abs(max(q_values(model, x, s).values()) - x[s]))
    return worst


@dataclass
class SynthPolicy:
    """Finite-memory controller over the states of one product.

    Outside the goal region the choice is memoryless. Inside it each state
    has a schedule that is cycled through on successive visits.
    """

    keys: tuple[str, ...]
    transient_choice: dict[int, int]
    amec_schedule: dict[int, tuple[int, ...]]
    distance: dict[int, int | None]
    values: np.ndarray
    objective: str
    action_names: tuple[str, ...]

    def action_at(self, s: int, visits: int = 0) -> int:
        """Action at state ``s`` when it has been visited ``visits`` times before."""
        sched = self.amec_schedule.get(s)
        if sched is not None:
            return sched[visits % len(sched)]
        try:
            return self.transient_choice[s]
        except KeyError:
            raise PolicyGapError(f"policy has no entry for state {s}") from None

    def choose(self, prefix: Sequence[int]) -> int:
        s = prefix[-1]
        visits = sum(1 for t in prefix[:-1] if t == s) if s in self.amec_schedule else 0
        return self.action_at(s, visits)

    __call__ = choose

    def action_name(self, s: int) -> str:
        if s in self.amec_schedule:
            return ",".join(self.action_names[a] for a in self.amec_schedule[s])
        return self.action_names[self.transient_choice[s]]


def _progress_mass(model, s, a, closer) -> float:
    """Worst-case probability that action ``a`` moves into ``closer``."""
    if isinstance(model, Amdp):
        return min(sum(p for t, p in model.transitions[s, a, b] if t in closer)
                   for b in model.enabled_adversarial(s))
    return sum(p for t, p in model.transitions[s, a] if t in closer)


def _enabled_control(model, s):
    return model.enabled_control(s) if isinstance(model, Amdp) else model.enabled(s)


def extract_policy(product: ProductModel, values: ValueVector,
                   components: Sequence[EndComponent] | None = None,
                   tol: float = ACT_MAX_TOL) -> SynthPolicy:
    """Controller that attains ``values`` on ``product``.

    Goal states follow the schedule of their end component. Every other state
    with positive value takes a value-preserving action that moves one step
    closer to the goal set; among several such actions the one with the
    largest (worst-case) probability of doing so wins, then the lowest index.
    """
    model = product.model
    goals = product.goal_states or frozenset()
    components = product.components if components is None else components
    x = values.values
    n = model.num_states
    adversarial = isinstance(model, Amdp)

    act_max: dict[int, list[int]] = {}
    for s in range(n):
        if s in goals:
            continue
        qs = q_values(model, x, s)
        act_max[s] = [a for a in sorted(qs) if abs(qs[a] - x[s]) <= tol]

    # layered distances: a state joins layer k+1 once some Act^max action
    # reaches layer <= k with positive probability under every adversary move
    distance: dict[int, int | None] = {s: (0 if s in goals else None) for s in range(n)}
    reached = set(goals)
    layer = 0
    frontier = True
    while frontier:
        frontier = [s for s, acts in act_max.items()
                    if distance[s] is None and x[s] > 0
                    and any(_progress_mass(model, s, a, reached) > 0 for a in acts)]
        layer += 1
        for s in frontier:
            distance[s] = layer
        reached.update(frontier)

    transient: dict[int, int] = {}
    for s, acts in act_max.items():
        if x[s] <= 0:
            transient[s] = _enabled_control(model, s)[0]
            continue
        if distance[s] is None:
            raise PolicyInconsistencyError(
                f"state {model.states[s]} has value {x[s]:.6g} but no value-preserving action "
                "makes progress; loosen the tolerance or tighten epsilon")
        closer = {t for t in range(n) if distance[t] is not None and distance[t] < distance[s]}
        best = max(acts, key=lambda a: (_progress_mass(model, s, a, closer), -a))
        transient[s] = best

    schedule: dict[int, tuple[int, ...]] = {}
    for comp in components:
        for s in sorted(comp.states):
            if s in schedule:
                continue
            if adversarial and s not in comp.repeat and s in comp.progress:
                schedule[s] = (comp.progress[s],)
            else:
                schedule[s] = comp.actions[s]
    for s in goals:
        if s not in schedule:
            raise PolicyInconsistencyError(f"goal state {model.states[s]} is in no component")

    names = model.control_actions if adversarial else model.actions
    return SynthPolicy(model.states, transient, schedule, distance, x.copy(),
                       "worstcase" if adversarial else "expected", names)


@dataclass
class SynthResult:
    policy: SynthPolicy
    probability: float
    report: dict
    product: ProductModel
    values: ValueVector


def _resolve_spec(spec: Formula | Dra | str, propositions) -> Dra:
    if isinstance(spec, Dra):
        return spec
    if isinstance(spec, str):
        spec = parse_ltl(spec, propositions)
    return ltl_to_dra(spec)


@dataclass
class _Timer:
    marks: dict[str, float] = field(default_factory=dict)
    start: float = field(default_factory=time.perf_counter)
    last: float = 0.0

    def __post_init__(self):
        self.last = self.start

    def lap(self, name: str):
        now = time.perf_counter()
        self.marks[name] = now - self.last
        self.last = now

    def finish(self) -> dict[str, float]:
        self.marks["total"] = time.perf_counter() - self.start
        return self.marks


def synth_expected(plant: LabeledMdp, env_models: Sequence[LabeledMarkovChain],
                   beliefs: BeliefTable, spec: Formula | Dra | str,
                   defines: Mapping[str, Formula] | None = None,
                   epsilon: float = DEFAULT_EPSILON,
                   max_iters: int = DEFAULT_MAX_ITERS) -> SynthResult:
    """Controller maximizing the belief-weighted probability of satisfying ``spec``."""
    timer = _Timer()
    belief_mc = build_belief_mc(env_models, beliefs)
    system = compose(plant, belief_mc)
    reachable = compose(plant, belief_mc, prune=True).num_states
    if defines:
        system = add_derived_props(system, defines)
    timer.lap("model")
    dra = _resolve_spec(spec, system.propositions)
    product = product_with_dra(system, dra)
    product.beliefs = beliefs
    accepting_mecs(product)
    timer.lap("product")
    certain = almost_sure_reach(product.model, product.goal_states)
    values = max_reach_vi(product.model, product.goal_states, epsilon, max_iters,
                          certain=certain)
    timer.lap("vector")
    policy = extract_policy(product, values)
    timer.lap("policy")
    prob = values[product.model.initial]
    report = {
        "mode": "expected",
        "stages": [("belief chain", belief_mc.num_states), ("MDP", system.num_states),
                   ("MDP reachable", reachable), ("DRA", len(dra.states)),
                   ("product", product.num_states), ("goal states", len(product.goal_states)),
                   ("almost-sure states", len(certain))],
        "iterations": values.iterations,
        "residual": values.residual,
        "probability": prob,
        "timings": timer.finish(),
    }
    log.info("expected-case synthesis: %.6f after %d sweeps", prob, values.iterations)
    return SynthResult(policy, prob, report, product, values)


def synth_worstcase(plant: LabeledMdp, env_models: Sequence[LabeledMarkovChain],
                    beliefs: BeliefTable, spec: Formula | Dra | str,
                    defines: Mapping[str, Formula] | None = None,
                    epsilon: float = DEFAULT_EPSILON,
                    max_iters: int = DEFAULT_MAX_ITERS) -> SynthResult:
    """Controller maximizing the probability of satisfying ``spec`` against the
    least favourable admissible choice of environment mode at every step."""
    timer = _Timer()
    system = build_system_amdp(plant, env_models, beliefs)
    if defines:
        system = add_derived_props(system, defines)
    timer.lap("model")
    dra = _resolve_spec(spec, system.propositions)
    product = product_with_dra(system, dra)
    product.beliefs = beliefs
    adversarial_amecs(product)
    timer.lap("product")
    certain = almost_sure_reach(product.model, product.goal_states)
    values = minimax_vi(product.model, product.goal_states, epsilon, max_iters,
                        certain=certain)
    timer.lap("vector")
    policy = extract_policy(product, values)
    timer.lap("policy")
    prob = values[product.model.initial]
    report = {
        "mode": "worstcase",
        "stages": [("AMDP", system.num_states), ("DRA", len(dra.states)),
                   ("product", product.num_states), ("goal states", len(product.goal_states)),
                   ("almost-sure states", len(certain))],
        "iterations": values.iterations,
        "residual": values.residual,
        "probability": prob,
        "timings": timer.finish(),
    }
    log.info("worst-case synthesis: %.6f after %d sweeps", prob, values.iterations)
    return SynthResult(policy, prob, report, product, values)


TIMING_COLUMNS = (("model", "model build"), ("product", "product + components"),
                  ("vector", "probability vector"), ("policy", "policy"), ("total", "total"))


def format_report(report: dict, timings: bool = True) -> str:
    lines = [f"mode: {report['mode']}"]
    for name, count in report["stages"]:
        lines.append(f"  {name + ':':<20}{count:>5} states")
    lines.append(f"iterations: {report['iterations']}")
    lines.append(f"probability: {report['probability']:.4f}")
    if timings:
        for key, label in TIMING_COLUMNS:
            lines.append(f"time {label}: {report['timings'][key]:.3f} s")
    return "\n".join(lines)
