"""Monte-Carlo rollouts of synthesized policies.

A run ends as soon as its verdict is decided: entering an accepting sink of
the automaton means the formula is satisfied and entering a rejecting sink
means it is violated. When the environment is played the same way the policy
was optimized against (belief-sampled for expected-case policies, worst
response for worst-case ones), entering a state of value 0 is also counted
as a violation, since no continuation can succeed. Runs still open after
``max_steps`` are undetermined.

Each run draws from its own PCG64 stream, spawned from
``numpy.random.SeedSequence(seed)`` by run index, so results do not depend on
how runs are split across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .composition import ProductModel
from .errors import PolicyGapError
from .models import Amdp, BeliefTable
from .solver import SynthPolicy

SATISFIED = "satisfied"
VIOLATED = "violated"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Step:
    t: int
    state: int
    key: str
    action: str
    adversary: str
    dra: str

    def line(self) -> str:
        return f"t={self.t} {self.key} act={self.action} adv={self.adversary}"


@dataclass(frozen=True)
class Trace:
    steps: tuple[Step, ...]
    final_state: int
    final_key: str
    verdict: str
    seed: int | None

    def lines(self) -> list[str]:
        out = [s.line() for s in self.steps]
        out.append(f"t={len(self.steps)} {self.final_key} verdict={self.verdict}")
        return out

    @property
    def actions(self) -> list[str]:
        return [s.action for s in self.steps]

    @property
    def states(self) -> list[int]:
        return [s.state for s in self.steps] + [self.final_state]


def parse_adversary(text: str) -> str | tuple[str, int]:
    """``sampled``, ``worst`` or ``mode:<i>`` (1-based mode number)."""
    if text in ("sampled", "worst"):
        return text
    if text.startswith("mode:"):
        try:
            i = int(text[5:])
        except ValueError:
            raise ValueError(f"bad adversary {text!r}") from None
        if i < 1:
            raise ValueError("mode numbers start at 1")
        return ("mode", i - 1)
    raise ValueError(f"unknown adversary {text!r}; use sampled, worst or mode:<i>")


class _Compiled:
    """Product transitions flattened for fast sampling."""

    def __init__(self, product: ProductModel, policy: SynthPolicy, adversary,
                 beliefs: BeliefTable | None):
        model = product.model
        self.model = model
        self.adversarial = isinstance(model, Amdp)
        if not self.adversarial and adversary != "sampled":
            raise ValueError("an MDP product has no adversary; only 'sampled' applies")
        if self.adversarial and adversary == "sampled" and beliefs is None:
            raise ValueError("belief-sampled play on an AMDP product needs the belief table")
        if len(policy.keys) != model.num_states or tuple(policy.keys) != tuple(model.states):
            raise PolicyGapError("policy was synthesized for a different product")
        self.policy = policy
        self.adversary = adversary
        self.rows = {}
        for key, row in model.transitions.items():
            targets = np.array([t for t, _ in row], dtype=np.int64)
            cum = np.cumsum([p for _, p in row])
            cum[-1] = 1.0
            self.rows[key] = (targets, cum)
        dra = product.dra
        accept = dra.accepting_sinks()
        reject = dra.rejecting_sinks()
        self.accepting = frozenset(i for i, q in enumerate(product.dra_index) if q in accept)
        self.rejecting = frozenset(i for i, q in enumerate(product.dra_index) if q in reject)
        matched = (policy.objective == "expected" and adversary == "sampled") or \
                  (policy.objective == "worstcase" and adversary == "worst")
        self.dead = frozenset(i for i in range(model.num_states)
                              if matched and policy.values[i] <= 0) - self.accepting
        self.keys = [product.decode(i).key() for i in range(model.num_states)]
        self.dra_names = [dra.states[q] for q in product.dra_index]
        self.mode_weights = None
        if self.adversarial and adversary == "sampled":
            self.mode_weights = []
            for i in range(model.num_states):
                parts = product.base.state_parts(product.base_index[i])
                vec = np.array(beliefs.vectors[beliefs.index_of(parts[-1])])
                self.mode_weights.append(np.cumsum(vec))

    def verdict(self, s: int) -> str | None:
        if s in self.accepting:
            return SATISFIED
        if s in self.rejecting or s in self.dead:
            return VIOLATED
        return None

    def pick_adversary(self, s: int, a: int, rng) -> int:
        model = self.model
        advs = model.enabled_adversarial(s)
        kind = self.adversary
        if kind == "worst":
            x = self.policy.values
            return min(advs, key=lambda b: (sum(p * x[t] for t, p in model.transitions[s, a, b]), b))
        if kind == "sampled":
            cum = self.mode_weights[s]
            b = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            return min(b, len(cum) - 1)
        b = kind[1]
        return b if b in advs else advs[0]


def _run(comp: _Compiled, max_steps: int, seed_seq: np.random.SeedSequence,
         record: bool, seed=None) -> Trace:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    model = comp.model
    policy = comp.policy
    s = model.initial
    visits: dict[int, int] = {}
    steps = []
    verdict = comp.verdict(s)
    t = 0
    while verdict is None and t < max_steps:
        n_seen = visits.get(s, 0)
        visits[s] = n_seen + 1
        a = policy.action_at(s, n_seen)
        if comp.adversarial:
            b = comp.pick_adversary(s, a, rng)
            key = (s, a, b)
            adv_name = model.adversarial_actions[b]
        else:
            key = (s, a)
            adv_name = "mixture"
        row = comp.rows.get(key)
        if row is None:
            raise PolicyGapError(f"policy picks a disabled action at {comp.keys[s]}")
        targets, cum = row
        nxt = int(targets[min(int(np.searchsorted(cum, rng.random(), side="right")),
                              len(targets) - 1)])
        if record:
            steps.append(Step(t, s, comp.keys[s], policy.action_names[a], adv_name,
                              comp.dra_names[s]))
        s = nxt
        t += 1
        verdict = comp.verdict(s)
    return Trace(tuple(steps), s, comp.keys[s], verdict or UNDETERMINED, seed)


def rollout(product: ProductModel, policy: SynthPolicy, adversary="sampled",
            max_steps: int = 1000, seed: int = 0,
            beliefs: BeliefTable | None = None) -> Trace:
    """Simulate one run of ``policy`` on ``product``.

    Uses the same stream as run 0 of ``estimate_probability`` with this seed.
    """
    if isinstance(adversary, str) and adversary not in ("sampled", "worst"):
        adversary = parse_adversary(adversary)
    comp = _Compiled(product, policy, adversary, beliefs or getattr(product, "beliefs", None))
    return _run(comp, max_steps, np.random.SeedSequence(seed).spawn(1)[0], True, seed)


@dataclass(frozen=True)
class Estimate:
    estimate: float
    stderr: float
    satisfied: int
    violated: int
    undetermined: int

    @property
    def runs(self) -> int:
        return self.satisfied + self.violated + self.undetermined

    @property
    def lower(self) -> float:
        """Satisfaction rate counting every undetermined run as a failure."""
        return self.satisfied / self.runs

    @property
    def upper(self) -> float:
        return (self.satisfied + self.undetermined) / self.runs


def _count(args) -> tuple[int, int, int]:
    product, policy, adversary, beliefs, max_steps, seed, start, stop, total = args
    comp = _Compiled(product, policy, adversary, beliefs)
    children = np.random.SeedSequence(seed).spawn(total)[start:stop]
    counts = {SATISFIED: 0, VIOLATED: 0, UNDETERMINED: 0}
    for child in children:
        counts[_run(comp, max_steps, child, False).verdict] += 1
    return counts[SATISFIED], counts[VIOLATED], counts[UNDETERMINED]


def estimate_probability(product: ProductModel, policy: SynthPolicy, adversary="sampled",
                         num_runs: int = 10_000, max_steps: int = 1000, seed: int = 0,
                         workers: int = 1, beliefs: BeliefTable | None = None) -> Estimate:
    """Fraction of decided runs that satisfy the formula, with its binomial
    standard error. Undetermined runs are excluded and reported separately."""
    if num_runs < 1:
        raise ValueError("num_runs must be at least 1")
    if isinstance(adversary, str) and adversary not in ("sampled", "worst"):
        adversary = parse_adversary(adversary)
    beliefs = beliefs or getattr(product, "beliefs", None)
    workers = max(1, min(workers, num_runs))
    bounds = np.linspace(0, num_runs, workers + 1).astype(int)
    jobs = [(product, policy, adversary, beliefs, max_steps, seed, int(lo), int(hi), num_runs)
            for lo, hi in zip(bounds[:-1], bounds[1:])]
    if workers == 1:
        results = [_count(jobs[0])]
    else:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_count, jobs))
    sat, vio, und = (sum(r[i] for r in results) for i in range(3))
    decided = sat + vio
    p = sat / decided if decided else float("nan")
    se = math.sqrt(p * (1 - p) / decided) if decided else float("nan")
    return Estimate(p, se, sat, vio, und)


def format_trace(trace: Trace) -> str:
    return "\n".join(trace.lines()) + "\n"
