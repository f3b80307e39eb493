"""Labeled Markov chains, MDPs and adversarial MDPs.

All models share one representation: states and actions carry stable string
names, while transitions are stored sparsely over dense integer indices.
A row is a tuple of ``(successor index, probability)`` pairs sorted by
successor. Disabled choices are absent from the transition map, so an empty
(sum-0) row is never stored.

Models are frozen dataclasses; treat the transition dicts as read-only.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property

from .errors import BeliefUpdateError, UndefinedTransitionError, UnknownStateError

STOCH_TOL = 1e-9

Row = tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    magnitude: float = 0.0

    def __str__(self):
        if self.magnitude:
            return f"{self.kind} at {self.where} (off by {self.magnitude:.3g})"
        return f"{self.kind} at {self.where}"


def _row_sum(row: Row) -> float:
    return math.fsum(p for _, p in row)


def _make_row(succ: Mapping[int, float]) -> Row:
    merged: dict[int, float] = {}
    for t, p in succ.items():
        if p != 0:
            merged[t] = merged.get(t, 0.0) + float(p)
    return tuple(sorted(merged.items()))


class _Labeled:
    """Naming and labeling helpers shared by every model kind."""

    states: tuple[str, ...]
    initial: int
    propositions: frozenset[str]
    labels: tuple[frozenset[str], ...]
    parts: tuple[tuple[str, ...], ...] | None

    @property
    def num_states(self) -> int:
        return len(self.states)

    @cached_property
    def _state_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.states)}

    def index_of(self, state: str | int) -> int:
        if isinstance(state, int):
            if 0 <= state < len(self.states):
                return state
            raise UnknownStateError(f"state index {state} out of range")
        try:
            return self._state_index[state]
        except KeyError:
            raise UnknownStateError(f"unknown state {state!r}") from None

    def state_parts(self, s: int) -> tuple[str, ...]:
        if self.parts is None:
            return (self.states[s],)
        return self.parts[s]

    def _label_violations(self) -> list[Violation]:
        out = []
        if not 0 <= self.initial < len(self.states):
            out.append(Violation("initial-state", str(self.initial)))
        if len(self.labels) != len(self.states):
            out.append(Violation("label-count", f"{len(self.labels)} labels"))
        for s, lab in enumerate(self.labels):
            extra = lab - self.propositions
            if extra:
                out.append(Violation("undeclared-proposition",
                                     f"{self.states[s]}: {sorted(extra)}"))
        return out


def _label_tuple(states, labels, propositions):
    labels = labels or {}
    lab = tuple(frozenset(labels.get(s, ())) for s in states)
    if propositions is None:
        propositions = frozenset().union(*lab) if lab else frozenset()
    return lab, frozenset(propositions)


@dataclass(frozen=True)
class LabeledMarkovChain(_Labeled):
    states: tuple[str, ...]
    transitions: dict[int, Row]
    initial: int
    propositions: frozenset[str]
    labels: tuple[frozenset[str], ...]
    parts: tuple[tuple[str, ...], ...] | None = None

    @classmethod
    def build(cls, states: Iterable[str], transitions: Mapping[str, Mapping[str, float]],
              initial: str, labels: Mapping[str, Iterable[str]] | None = None,
              propositions: Iterable[str] | None = None) -> LabeledMarkovChain:
        states = tuple(states)
        idx = {s: i for i, s in enumerate(states)}
        trans = {}
        for s, succ in transitions.items():
            row = _make_row({_lookup(idx, t): p for t, p in succ.items()})
            if row:
                trans[_lookup(idx, s)] = row
        lab, props = _label_tuple(states, labels, propositions)
        return cls(states, trans, _lookup(idx, initial), props, lab)

    def successors(self, s: int) -> Row:
        return self.transitions.get(s, ())

    def prob(self, s: int, t: int) -> float:
        return dict(self.successors(s)).get(t, 0.0)


@dataclass(frozen=True)
class LabeledMdp(_Labeled):
    states: tuple[str, ...]
    actions: tuple[str, ...]
    transitions: dict[tuple[int, int], Row]
    initial: int
    propositions: frozenset[str]
    labels: tuple[frozenset[str], ...]
    parts: tuple[tuple[str, ...], ...] | None = None

    @classmethod
    def build(cls, states: Iterable[str], actions: Iterable[str],
              transitions: Mapping[tuple[str, str], Mapping[str, float]],
              initial: str, labels: Mapping[str, Iterable[str]] | None = None,
              propositions: Iterable[str] | None = None) -> LabeledMdp:
        states, actions = tuple(states), tuple(actions)
        idx = {s: i for i, s in enumerate(states)}
        aidx = {a: i for i, a in enumerate(actions)}
        trans = {}
        for (s, a), succ in transitions.items():
            row = _make_row({_lookup(idx, t): p for t, p in succ.items()})
            if row:
                trans[_lookup(idx, s), _lookup(aidx, a, "action")] = row
        lab, props = _label_tuple(states, labels, propositions)
        return cls(states, actions, trans, _lookup(idx, initial), props, lab)

    @cached_property
    def _enabled(self) -> tuple[tuple[int, ...], ...]:
        acc: list[list[int]] = [[] for _ in self.states]
        for (s, a), row in self.transitions.items():
            if abs(_row_sum(row) - 1.0) <= STOCH_TOL:
                acc[s].append(a)
        return tuple(tuple(sorted(a)) for a in acc)

    def enabled(self, s: int) -> tuple[int, ...]:
        return self._enabled[s]

    def row(self, s: int, a: int) -> Row:
        try:
            return self.transitions[s, a]
        except KeyError:
            raise UndefinedTransitionError(
                f"action {self.actions[a]!r} is not enabled in state {self.states[s]!r}"
            ) from None

    def choices(self, s: int) -> list[tuple[int, Row]]:
        return [(a, self.transitions[s, a]) for a in self._enabled[s]]


@dataclass(frozen=True)
class Amdp(_Labeled):
    """MDP whose transitions also depend on an adversarial action."""

    states: tuple[str, ...]
    control_actions: tuple[str, ...]
    adversarial_actions: tuple[str, ...]
    transitions: dict[tuple[int, int, int], Row]
    initial: int
    propositions: frozenset[str]
    labels: tuple[frozenset[str], ...]
    parts: tuple[tuple[str, ...], ...] | None = None

    @classmethod
    def build(cls, states: Iterable[str], control_actions: Iterable[str],
              adversarial_actions: Iterable[str],
              transitions: Mapping[tuple[str, str, str], Mapping[str, float]],
              initial: str, labels: Mapping[str, Iterable[str]] | None = None,
              propositions: Iterable[str] | None = None) -> Amdp:
        states = tuple(states)
        ctrl, adv = tuple(control_actions), tuple(adversarial_actions)
        idx = {s: i for i, s in enumerate(states)}
        cidx = {a: i for i, a in enumerate(ctrl)}
        bidx = {b: i for i, b in enumerate(adv)}
        trans = {}
        for (s, a, b), succ in transitions.items():
            row = _make_row({_lookup(idx, t): p for t, p in succ.items()})
            if row:
                key = (_lookup(idx, s), _lookup(cidx, a, "action"), _lookup(bidx, b, "action"))
                trans[key] = row
        lab, props = _label_tuple(states, labels, propositions)
        return cls(states, ctrl, adv, trans, _lookup(idx, initial), props, lab)

    @cached_property
    def _enabled_pairs(self) -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
        ctrl: list[set[int]] = [set() for _ in self.states]
        adv: list[set[int]] = [set() for _ in self.states]
        for (s, a, b), row in self.transitions.items():
            if abs(_row_sum(row) - 1.0) <= STOCH_TOL:
                ctrl[s].add(a)
                adv[s].add(b)
        return tuple((tuple(sorted(c)), tuple(sorted(d))) for c, d in zip(ctrl, adv))

    def enabled_control(self, s: int) -> tuple[int, ...]:
        return self._enabled_pairs[s][0]

    def enabled_adversarial(self, s: int) -> tuple[int, ...]:
        return self._enabled_pairs[s][1]

    def row(self, s: int, a: int, b: int) -> Row:
        try:
            return self.transitions[s, a, b]
        except KeyError:
            raise UndefinedTransitionError(
                f"({self.control_actions[a]!r}, {self.adversarial_actions[b]!r}) "
                f"is not enabled in state {self.states[s]!r}"
            ) from None


def _lookup(index: Mapping[str, int], name, what="state") -> int:
    try:
        return index[name]
    except KeyError:
        raise UnknownStateError(f"unknown {what} {name!r}") from None


@dataclass(frozen=True)
class BeliefTable:
    """Finite belief space over ``num_modes`` environment modes.

    ``update`` maps ``(belief, env state, next env state)`` (all indices; env
    states index into ``env_states``) to the next belief index.
    """

    names: tuple[str, ...]
    vectors: tuple[tuple[float, ...], ...]
    initial: int
    env_states: tuple[str, ...]
    update: dict[tuple[int, int, int], int]
    mode_names: tuple[str, ...] | None = None

    @property
    def num_modes(self) -> int:
        return len(self.vectors[0]) if self.vectors else 0

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownStateError(f"unknown belief {name!r}") from None

    def next_belief(self, b: int, s: int, t: int) -> int:
        try:
            return self.update[b, s, t]
        except KeyError:
            raise BeliefUpdateError(
                f"belief update undefined for ({self.names[b]}, "
                f"{self.env_states[s]}, {self.env_states[t]})"
            ) from None

    def with_initial(self, name: str) -> BeliefTable:
        return BeliefTable(self.names, self.vectors, self.index_of(name),
                           self.env_states, self.update, self.mode_names)

    @classmethod
    def from_rules(cls, names: Iterable[str], vectors: Iterable[Iterable[float]],
                   initial: str, env_states: Iterable[str], rules: Iterable[tuple],
                   default: str | None = None,
                   mode_names: Iterable[str] | None = None) -> BeliefTable:
        """Expand ordered update rules into an explicit table.

        Each rule is ``(beliefs, sources, targets, result)``; the first three
        are collections of names or ``None`` for "any". ``result`` is a belief
        name or ``"stay"``. The first matching rule wins; ``default`` covers the
        remaining triples, and with ``default=None`` they stay undefined.
        """
        names = tuple(names)
        env_states = tuple(env_states)
        bidx = {n: i for i, n in enumerate(names)}
        compiled = []
        for beliefs, srcs, dsts, result in rules:
            compiled.append((
                None if beliefs is None else {bidx[_check(bidx, x)] for x in beliefs},
                None if srcs is None else set(srcs),
                None if dsts is None else set(dsts),
                result,
            ))
        update = {}
        for b in range(len(names)):
            for i, s in enumerate(env_states):
                for j, t in enumerate(env_states):
                    result = default
                    for bs, ss, ts, res in compiled:
                        if (bs is None or b in bs) and (ss is None or s in ss) \
                                and (ts is None or t in ts):
                            result = res
                            break
                    if result is None:
                        continue
                    update[b, i, j] = b if result == "stay" else bidx[_check(bidx, result)]
        return cls(names, tuple(tuple(float(p) for p in v) for v in vectors),
                   bidx[_check(bidx, initial)], env_states, update,
                   None if mode_names is None else tuple(mode_names))


def _check(index, name):
    if name not in index:
        raise UnknownStateError(f"unknown belief {name!r}")
    return name


def validate_model(model: LabeledMarkovChain | LabeledMdp | Amdp,
                   tol: float = STOCH_TOL) -> list[Violation]:
    """Check the stochasticity, enabledness and labeling invariants.

    Returns an empty list iff every invariant holds.
    """
    out = model._label_violations()
    n = model.num_states
    for key, row in model.transitions.items():
        where = _describe(model, key)
        for t, p in row:
            if not 0 <= t < n:
                out.append(Violation("unknown-successor", f"{where} -> {t}"))
            if not 0.0 <= p <= 1.0:
                out.append(Violation("probability-range", f"{where} -> {model.states[t]}", p))
        total = _row_sum(row)
        if abs(total - 1.0) > tol:
            out.append(Violation("stochasticity", where, abs(total - 1.0)))

    if isinstance(model, LabeledMarkovChain):
        for s in range(n):
            if s not in model.transitions:
                out.append(Violation("stochasticity", model.states[s], 1.0))
    elif isinstance(model, LabeledMdp):
        for s in range(n):
            if not model.enabled(s):
                out.append(Violation("no-enabled-action", model.states[s]))
    else:
        for s in range(n):
            ctrl, adv = model.enabled_control(s), model.enabled_adversarial(s)
            if not ctrl:
                out.append(Violation("no-enabled-control-action", model.states[s]))
            if not adv:
                out.append(Violation("no-enabled-adversarial-action", model.states[s]))
            for a in ctrl:
                for b in adv:
                    row = model.transitions.get((s, a, b))
                    if row is None or abs(_row_sum(row) - 1.0) > tol:
                        out.append(Violation(
                            "rectangularity",
                            f"{model.states[s]}, {model.control_actions[a]}, "
                            f"{model.adversarial_actions[b]}"))
    return out


def _describe(model, key) -> str:
    if isinstance(model, LabeledMarkovChain):
        return model.states[key]
    if isinstance(model, LabeledMdp):
        s, a = key
        return f"{model.states[s]}, {model.actions[a]}"
    s, a, b = key
    return f"{model.states[s]}, {model.control_actions[a]}, {model.adversarial_actions[b]}"


def validate_beliefs(table: BeliefTable, tol: float = STOCH_TOL) -> list[Violation]:
    out = []
    if not 0 <= table.initial < len(table.names):
        out.append(Violation("initial-belief", str(table.initial)))
    if table.mode_names is not None and len(table.mode_names) != table.num_modes:
        out.append(Violation("belief-length", f"{len(table.mode_names)} mode names"))
    for name, vec in zip(table.names, table.vectors):
        if len(vec) != table.num_modes:
            out.append(Violation("belief-length", name))
        if any(p < 0 for p in vec):
            out.append(Violation("belief-negative", name))
        total = math.fsum(vec)
        if abs(total - 1.0) > tol:
            out.append(Violation("belief-sum", name, abs(total - 1.0)))
    for b, bname in enumerate(table.names):
        for i, s in enumerate(table.env_states):
            for j, t in enumerate(table.env_states):
                if (b, i, j) not in table.update:
                    out.append(Violation("update-totality", f"({bname}, {s}, {t})"))
    return out


@dataclass(frozen=True)
class FinitePath:
    states: tuple[int, ...]
    actions: tuple[int, ...] | None = None

    @classmethod
    def from_names(cls, model, states: Iterable[str],
                   actions: Iterable[str] | None = None) -> FinitePath:
        idx = tuple(model.index_of(s) for s in states)
        if actions is None:
            return cls(idx)
        act_names = model.actions if isinstance(model, LabeledMdp) else model.control_actions
        return cls(idx, tuple(act_names.index(a) for a in actions))

    def __len__(self):
        return len(self.states) - 1


Policy = Callable[[tuple[int, ...]], int] | Mapping[int, int]


def _choose(policy, prefix: tuple[int, ...]) -> int:
    if hasattr(policy, "choose"):
        return policy.choose(prefix)
    if callable(policy):
        return policy(prefix)
    return policy[prefix[-1]]


def path_probability(model: LabeledMdp | LabeledMarkovChain, policy: Policy | None,
                     path: FinitePath) -> float:
    """Probability of the cylinder set of ``path`` under ``policy``.

    ``policy`` may be an object with ``choose(prefix)``, a callable on the
    prefix of state indices, or a memoryless ``state -> action`` mapping. For
    Markov chains and for paths carrying explicit actions it may be ``None``.
    """
    if not path.states:
        raise ValueError("empty path")
    if path.states[0] != model.initial:
        raise ValueError("path does not start at the initial state")
    prob = 1.0
    for i in range(len(path.states) - 1):
        s, t = path.states[i], path.states[i + 1]
        if isinstance(model, LabeledMarkovChain):
            row = model.successors(s)
            where = model.states[s]
        else:
            if policy is not None:
                a = _choose(policy, path.states[: i + 1])
            elif path.actions is not None:
                a = path.actions[i]
            else:
                raise ValueError("MDP path needs a policy or explicit actions")
            row = model.row(s, a)
            where = f"{model.states[s]}, {model.actions[a]}"
        p = dict(row).get(t)
        if p is None:
            raise UndefinedTransitionError(f"no transition {where} -> {model.states[t]}")
        prob *= p
    return prob


def enabled_actions(model: LabeledMdp | Amdp, state: str | int):
    """Names of the actions enabled in ``state``.

    For an AMDP, returns the pair ``(control, adversarial)``.
    """
    s = model.index_of(state)
    if isinstance(model, Amdp):
        return (frozenset(model.control_actions[a] for a in model.enabled_control(s)),
                frozenset(model.adversarial_actions[b] for b in model.enabled_adversarial(s)))
    return frozenset(model.actions[a] for a in model.enabled(s))
