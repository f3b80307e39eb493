"""Deterministic Rabin automata: construction, file I/O and run evaluation.

Letters are sets of atom names. A DRA only looks at its own ``propositions``,
so callers may pass letters over a larger alphabet; they are projected before
lookup. The full alphabet of ``2^props`` is never materialized: edges carry
propositional guards and ``step`` memoizes per ``(state, letter)``.

File format (``#`` starts a comment)::

    props: col goal
    states: q0 q1 q2
    initial: q0
    acc: (;q1)
    q0 -- !col & !goal --> q0
    q0 -- goal --> q1
    q0 -- col & !goal --> q2
    q1 -- true --> q1
    q2 -- true --> q2

``acc`` lists Rabin pairs ``(H;K)``; each side is a comma or space separated
list of states. ``props`` is optional and defaults to the atoms of the guards.
"""
from __future__ import annotations

import itertools
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .errors import (DraError, DraSyntaxError, IncompletenessError, LtlSyntaxError,
                     NondeterminismError, UnsupportedFragmentError)
from .ltl import (TRUE, Always, And, Atom, Eventually, Formula, Next, Not, Until,
                  atoms, eval_prop, format_formula, is_propositional, parse_guard)

MAX_GUARD_ATOMS = 20


@dataclass(frozen=True)
class RabinPair:
    """Accept iff ``avoid`` is visited finitely often and ``repeat`` infinitely often."""

    avoid: frozenset[int]
    repeat: frozenset[int]


@dataclass(frozen=True)
class Dra:
    states: tuple[str, ...]
    initial: int
    edges: tuple[tuple[tuple[Formula, int], ...], ...]
    acceptance: tuple[RabinPair, ...]
    propositions: frozenset[str]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.states)
        if not 0 <= self.initial < n:
            raise DraError(f"initial state index {self.initial} out of range")
        if len(self.edges) != n:
            raise DraError("edge list does not match the state count")
        for pair in self.acceptance:
            bad = [q for q in pair.avoid | pair.repeat if not 0 <= q < n]
            if bad:
                raise DraError(f"acceptance pair references unknown state index {bad[0]}")
        for q, out in enumerate(self.edges):
            for guard, target in out:
                if not 0 <= target < n:
                    raise DraError(f"edge from {self.states[q]} to unknown state index {target}")
                extra = atoms(guard) - self.propositions
                if extra:
                    raise DraError(f"guard at {self.states[q]} uses undeclared atom(s) {sorted(extra)}")
            self._check_state(q)

    def _check_state(self, q: int):
        out = self.edges[q]
        support = sorted(frozenset().union(*(atoms(g) for g, _ in out)) if out else ())
        if len(support) > MAX_GUARD_ATOMS:
            raise DraError(f"guards at {self.states[q]} mention more than {MAX_GUARD_ATOMS} atoms")
        for bits in itertools.product((False, True), repeat=len(support)):
            letter = frozenset(a for a, b in zip(support, bits) if b)
            targets = {t for g, t in out if eval_prop(g, letter)}
            if not targets:
                raise IncompletenessError(
                    f"no transition from {self.states[q]} on letter {_show(letter)}")
            if len(targets) > 1:
                names = ", ".join(self.states[t] for t in sorted(targets))
                raise NondeterminismError(
                    f"overlapping guards at {self.states[q]} on letter {_show(letter)} "
                    f"(targets {names})")

    def index_of(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise DraError(f"unknown automaton state {name!r}") from None

    def step(self, q: int, letter: Iterable[str]) -> int:
        key = (q, frozenset(letter) & self.propositions)
        hit = self._cache.get(key)
        if hit is None:
            for guard, target in self.edges[q]:
                if eval_prop(guard, key[1]):
                    hit = target
                    break
            self._cache[key] = hit
        return hit

    def is_absorbing(self, q: int) -> bool:
        return all(t == q for _, t in self.edges[q])

    def accepting_sinks(self) -> frozenset[int]:
        """Absorbing states whose self-loop run satisfies some Rabin pair."""
        return frozenset(q for q in range(len(self.states))
                         if self.is_absorbing(q) and _accepts_inf(self, {q}))

    def rejecting_sinks(self) -> frozenset[int]:
        return frozenset(q for q in range(len(self.states))
                         if self.is_absorbing(q) and not _accepts_inf(self, {q}))


def _show(letter) -> str:
    return "{" + ", ".join(sorted(letter)) + "}"


def _accepts_inf(dra: Dra, inf: set[int]) -> bool:
    return any(not (inf & p.avoid) and (inf & p.repeat) for p in dra.acceptance)


def dra_step(dra: Dra, state: int | str, letter: Iterable[str]) -> int:
    q = dra.index_of(state) if isinstance(state, str) else state
    return dra.step(q, letter)


def dra_run(dra: Dra, word: Iterable[Iterable[str]]) -> list[int]:
    """States q_0 = initial, q_{i+1} = step(q_i, word[i])."""
    q = dra.initial
    run = [q]
    for letter in word:
        q = dra.step(q, letter)
        run.append(q)
    return run


def dra_accepts_lasso(dra: Dra, stem: Sequence[Iterable[str]],
                      loop: Sequence[Iterable[str]]) -> bool:
    """Whether the run on ``stem . loop^omega`` satisfies the Rabin condition."""
    if not loop:
        raise ValueError("lasso loop must be nonempty")
    q = dra.initial
    for letter in stem:
        q = dra.step(q, letter)
    # iterate the loop until the state at the loop boundary repeats
    seen: dict[int, int] = {}
    boundary_states = []
    while q not in seen:
        seen[q] = len(boundary_states)
        boundary_states.append(q)
        for letter in loop:
            q = dra.step(q, letter)
    inf = set()
    for start in boundary_states[seen[q]:]:
        p = start
        for letter in loop:
            inf.add(p)
            p = dra.step(p, letter)
    return _accepts_inf(dra, inf)


def _template(names, initial, edges, acc, props) -> Dra:
    return Dra(tuple(names), initial,
               tuple(tuple(e) for e in edges),
               tuple(RabinPair(frozenset(h), frozenset(k)) for h, k in acc),
               frozenset(props))


def ltl_to_dra(formula: Formula) -> Dra:
    """Build a DRA for one of the supported formula shapes.

    Supported: propositional ``p``, ``p1 U p2``, ``F p``, ``G p``, ``G F p`` and
    ``F G p`` where ``p``, ``p1``, ``p2`` are propositional. Anything else
    needs an externally produced automaton.
    """
    props = atoms(formula)
    f = formula
    if is_propositional(f):
        if f == TRUE:
            return _template(["q0"], 0, [[(TRUE, 0)]], [((), (0,))], props)
        return _template(["q0", "q1", "q2"], 0,
                         [[(f, 1), (Not(f), 2)], [(TRUE, 1)], [(TRUE, 2)]],
                         [((), (1,))], props)
    if isinstance(f, Until) and is_propositional(f.left) and is_propositional(f.right):
        p1, p2 = f.left, f.right
        return _template(["q0", "q1", "q2"], 0,
                         [[(And(p1, Not(p2)), 0), (p2, 1), (And(Not(p1), Not(p2)), 2)],
                          [(TRUE, 1)], [(TRUE, 2)]],
                         [((), (1,))], props)
    if isinstance(f, Eventually) and is_propositional(f.arg):
        p = f.arg
        return _template(["q0", "q1"], 0, [[(Not(p), 0), (p, 1)], [(TRUE, 1)]],
                         [((), (1,))], props)
    if isinstance(f, Always) and is_propositional(f.arg):
        p = f.arg
        return _template(["q0", "q1"], 0, [[(p, 0), (Not(p), 1)], [(TRUE, 1)]],
                         [((), (0,))], props)
    if isinstance(f, (Always, Eventually)) and type(f.arg) in (Always, Eventually) \
            and type(f.arg) is not type(f) and is_propositional(f.arg.arg):
        p = f.arg.arg
        edges = [[(Not(p), 0), (p, 1)], [(Not(p), 0), (p, 1)]]
        if isinstance(f, Always):   # G F p
            return _template(["q0", "q1"], 0, edges, [((), (1,))], props)
        return _template(["q0", "q1"], 0, edges, [((0,), (1,))], props)
    bad = _offending(f)
    raise UnsupportedFragmentError(
        f"formula shape not supported: {format_formula(bad)}; "
        "build an automaton with an external tool and pass it with --dra <file>")


def _offending(f: Formula) -> Formula:
    """Smallest temporal subtree that falls outside the supported shapes."""
    if isinstance(f, Next):
        return f
    for child in _children(f):
        if not is_propositional(child) and not _supported(child):
            return _offending(child)
    return f


def _supported(f: Formula) -> bool:
    try:
        ltl_to_dra(f)
    except UnsupportedFragmentError:
        return False
    return True


def _children(f):
    if hasattr(f, "arg"):
        return [f.arg]
    if hasattr(f, "left"):
        return [f.left, f.right]
    return []


_EDGE_RE = re.compile(r"^(\S+)\s*--\s*(.*?)\s*-->\s*(\S+)$")
_PAIR_RE = re.compile(r"\(([^;()]*);([^;()]*)\)")


def parse_dra_file(text: str) -> Dra:
    header: dict[str, str] = {}
    raw_edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _EDGE_RE.match(line)
        if m:
            raw_edges.append((lineno, m.group(1), m.group(2), m.group(3)))
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in ("props", "states", "initial", "acc"):
            raise DraSyntaxError(f"cannot parse {line!r}", lineno)
        if key in header:
            raise DraSyntaxError(f"duplicate {key!r} header", lineno)
        header[key] = value.strip()
    for key in ("states", "initial"):
        if key not in header:
            raise DraSyntaxError(f"missing {key!r} header", 0)

    states = _split_names(header["states"])
    if not states or len(set(states)) != len(states):
        raise DraSyntaxError("state list empty or has duplicates", 0)
    idx = {q: i for i, q in enumerate(states)}

    def lookup(name, lineno):
        if name not in idx:
            raise DraSyntaxError(f"unknown state {name!r}", lineno)
        return idx[name]

    acc = []
    acc_text = header.get("acc", "")
    if _PAIR_RE.sub("", acc_text).strip():
        raise DraSyntaxError(f"malformed acceptance {acc_text!r}", 0)
    for h, k in _PAIR_RE.findall(acc_text):
        acc.append(RabinPair(frozenset(lookup(x, 0) for x in _split_names(h)),
                             frozenset(lookup(x, 0) for x in _split_names(k))))

    edges: list[list[tuple[Formula, int]]] = [[] for _ in states]
    guard_atoms: set[str] = set()
    for lineno, src, guard_text, dst in raw_edges:
        try:
            guard = parse_guard(guard_text)
        except LtlSyntaxError as exc:
            raise DraSyntaxError(str(exc), lineno) from None
        guard_atoms |= atoms(guard)
        edges[lookup(src, lineno)].append((guard, lookup(dst, lineno)))

    if "props" in header:
        props = frozenset(_split_names(header["props"]))
        if not guard_atoms <= props:
            raise DraSyntaxError(f"guards use undeclared atoms {sorted(guard_atoms - props)}", 0)
    else:
        props = frozenset(guard_atoms)
    return Dra(tuple(states), lookup(header["initial"], 0),
               tuple(tuple(e) for e in edges), tuple(acc), props)


def _split_names(text: str) -> list[str]:
    return [x for x in re.split(r"[\s,]+", text.strip()) if x]


def format_dra(dra: Dra) -> str:
    lines = [
        "props: " + " ".join(sorted(dra.propositions)),
        "states: " + " ".join(dra.states),
        "initial: " + dra.states[dra.initial],
        "acc: " + "".join(
            "({};{})".format(",".join(dra.states[q] for q in sorted(p.avoid)),
                             ",".join(dra.states[q] for q in sorted(p.repeat)))
            for p in dra.acceptance),
    ]
    for q, out in enumerate(dra.edges):
        for guard, target in out:
            lines.append(f"{dra.states[q]} -- {format_formula(guard)} --> {dra.states[target]}")
    return "\n".join(lines) + "\n"


def same_automaton(a: Dra, b: Dra) -> bool:
    """Structural equality up to guard syntax (guards compared semantically)."""
    if (a.states, a.initial, a.acceptance, a.propositions) != \
            (b.states, b.initial, b.acceptance, b.propositions):
        return False
    props = sorted(a.propositions)
    if len(props) > MAX_GUARD_ATOMS:
        raise DraError("too many atoms to compare")
    for q in range(len(a.states)):
        for bits in itertools.product((False, True), repeat=len(props)):
            letter = frozenset(p for p, bit in zip(props, bits) if bit)
            if a.step(q, letter) != b.step(q, letter):
                return False
    return True

