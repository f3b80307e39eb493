"""LTL syntax trees, a recursive-descent parser and a lasso-word evaluator.

Precedence, tightest first: unary operators (``!``, ``X``, ``F``, ``G``),
``U``, ``&``, ``|``, ``->``. ``U`` and ``->`` associate to the right.
ASCII and unicode spellings are both accepted::

    !col U goal      ¬col 𝒰 goal      []<>p      G F p      a -> X b
"""
from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .errors import LtlSyntaxError, UnknownAtomError


class Formula:
    __slots__ = ()

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class TrueConst(Formula):
    pass


@dataclass(frozen=True)
class FalseConst(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


TRUE = TrueConst()
FALSE = FalseConst()

_UNARY = {"!": Not, "X": Next, "F": Eventually, "G": Always}
_BINARY_SYMBOL = {And: "&", Or: "|", Implies: "->", Until: "U"}
_UNARY_SYMBOL = {Not: "!", Next: "X ", Eventually: "F ", Always: "G "}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<op>->|=>|\[\]|<>|[!~&|()¬∧∨→⟹◯□◇𝒰])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
""", re.VERBOSE)

_CANON = {
    "~": "!", "¬": "!", "∧": "&", "∨": "|", "→": "->", "⟹": "->", "=>": "->",
    "◯": "X", "□": "G", "[]": "G", "◇": "F", "<>": "F", "𝒰": "U",
}
_KEYWORDS = {"true": "TRUE", "True": "TRUE", "TRUE": "TRUE",
             "false": "FALSE", "False": "FALSE", "FALSE": "FALSE",
             "X": "X", "F": "F", "G": "G", "U": "U"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LtlSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        value = m.group()
        if kind == "op":
            value = _CANON.get(value, value)
            tokens.append((value, value, pos))
        elif kind == "ident":
            tokens.append((_KEYWORDS.get(value, "ATOM"), value, pos))
        pos = m.end()
    tokens.append(("EOF", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, temporal: bool):
        self.tokens = _tokenize(text)
        self.i = 0
        self.temporal = temporal

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str):
        tok = self.take()
        if tok[0] != kind:
            found = tok[1] or "end of input"
            raise LtlSyntaxError(f"expected {kind!r}, found {found!r}", tok[2])
        return tok

    def parse(self) -> Formula:
        f = self.implication()
        tok = self.tokens[self.i]
        if tok[0] != "EOF":
            raise LtlSyntaxError(f"unexpected token {tok[1]!r}", tok[2])
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.until()
        while self.peek() == "&":
            self.take()
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        left = self.unary()
        if self.peek() == "U":
            tok = self.take()
            if not self.temporal:
                raise LtlSyntaxError("temporal operator 'U' not allowed in a guard", tok[2])
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        kind, value, pos = self.tokens[self.i]
        if kind in _UNARY:
            self.take()
            if kind != "!" and not self.temporal:
                raise LtlSyntaxError(f"temporal operator {value!r} not allowed in a guard", pos)
            return _UNARY[kind](self.unary())
        return self.primary()

    def primary(self) -> Formula:
        kind, value, pos = self.take()
        if kind == "(":
            f = self.implication()
            self.expect(")")
            return f
        if kind == "TRUE":
            return TRUE
        if kind == "FALSE":
            return FALSE
        if kind == "ATOM":
            return Atom(value)
        raise LtlSyntaxError(f"unexpected {value or 'end of input'!r}", pos)


def parse_ltl(text: str, propositions: Iterable[str] | None = None) -> Formula:
    """Parse an LTL formula; with ``propositions`` given, reject unknown atoms."""
    f = _Parser(text, temporal=True).parse()
    _check_atoms(f, propositions)
    return f


def parse_guard(text: str, propositions: Iterable[str] | None = None) -> Formula:
    """Parse a propositional formula (no temporal operators)."""
    f = _Parser(text, temporal=False).parse()
    _check_atoms(f, propositions)
    return f


def _check_atoms(f: Formula, propositions):
    if propositions is None:
        return
    unknown = atoms(f) - set(propositions)
    if unknown:
        raise UnknownAtomError(f"unknown atomic proposition(s): {', '.join(sorted(unknown))}")


def atoms(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset([f.name])
    if isinstance(f, (TrueConst, FalseConst)):
        return frozenset()
    if isinstance(f, (Not, Next, Always, Eventually)):
        return atoms(f.arg)
    return atoms(f.left) | atoms(f.right)


def is_propositional(f: Formula) -> bool:
    if isinstance(f, (Atom, TrueConst, FalseConst)):
        return True
    if isinstance(f, Not):
        return is_propositional(f.arg)
    if isinstance(f, (And, Or, Implies)):
        return is_propositional(f.left) and is_propositional(f.right)
    return False


def eval_prop(f: Formula, letter: Iterable[str]) -> bool:
    """Truth value of a propositional formula under the set of true atoms."""
    if not isinstance(letter, (set, frozenset)):
        letter = frozenset(letter)
    return _eval(f, letter)


def _eval(f, letter) -> bool:
    if isinstance(f, Atom):
        return f.name in letter
    if isinstance(f, TrueConst):
        return True
    if isinstance(f, FalseConst):
        return False
    if isinstance(f, Not):
        return not _eval(f.arg, letter)
    if isinstance(f, And):
        return _eval(f.left, letter) and _eval(f.right, letter)
    if isinstance(f, Or):
        return _eval(f.left, letter) or _eval(f.right, letter)
    if isinstance(f, Implies):
        return (not _eval(f.left, letter)) or _eval(f.right, letter)
    raise ValueError(f"not a propositional formula: {format_formula(f)}")


def desugar(f: Formula) -> Formula:
    """Rewrite into the core grammar: True, atoms, !, &, X, U."""
    if isinstance(f, (Atom, TrueConst)):
        return f
    if isinstance(f, FalseConst):
        return Not(TRUE)
    if isinstance(f, Not):
        return Not(desugar(f.arg))
    if isinstance(f, Next):
        return Next(desugar(f.arg))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Not(And(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Not(And(desugar(f.left), Not(desugar(f.right))))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right))
    if isinstance(f, Eventually):
        return Until(TRUE, desugar(f.arg))
    if isinstance(f, Always):
        return Not(Until(TRUE, Not(desugar(f.arg))))
    raise TypeError(f"unknown formula node {f!r}")


def format_formula(f: Formula) -> str:
    """Fully parenthesized ASCII rendering that re-parses to the same tree."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, TrueConst):
        return "true"
    if isinstance(f, FalseConst):
        return "false"
    if type(f) in _UNARY_SYMBOL:
        inner = format_formula(f.arg)
        if not isinstance(f.arg, (Atom, TrueConst, FalseConst)) and type(f.arg) not in _UNARY_SYMBOL:
            inner = f"({inner})"
        return _UNARY_SYMBOL[type(f)] + inner
    sym = _BINARY_SYMBOL[type(f)]
    return f"({format_formula(f.left)} {sym} {format_formula(f.right)})"


def holds(f: Formula, stem: Sequence[Iterable[str]], loop: Sequence[Iterable[str]]) -> bool:
    """Does the lasso word ``stem . loop^omega`` satisfy ``f`` at position 0?

    Each letter is a collection of true atoms. ``loop`` must be nonempty.
    """
    if not loop:
        raise ValueError("lasso loop must be nonempty")
    word = [frozenset(x) for x in stem] + [frozenset(x) for x in loop]
    n = len(word)
    succ = [i + 1 for i in range(n - 1)] + [len(stem)]
    return _sat(desugar(f), word, succ)[0]


def _sat(f, word, succ) -> list[bool]:
    n = len(word)
    if isinstance(f, TrueConst):
        return [True] * n
    if isinstance(f, Atom):
        return [f.name in w for w in word]
    if isinstance(f, Not):
        return [not v for v in _sat(f.arg, word, succ)]
    if isinstance(f, And):
        a, b = _sat(f.left, word, succ), _sat(f.right, word, succ)
        return [x and y for x, y in zip(a, b)]
    if isinstance(f, Next):
        a = _sat(f.arg, word, succ)
        return [a[succ[i]] for i in range(n)]
    if isinstance(f, Until):
        a, b = _sat(f.left, word, succ), _sat(f.right, word, succ)
        # least fixpoint of X = b | (a & next X)
        cur = list(b)
        changed = True
        while changed:
            changed = False
            for i in range(n):
                if not cur[i] and a[i] and cur[succ[i]]:
                    cur[i] = True
                    changed = True
        return cur
    raise TypeError(f"unexpected node after desugaring: {f!r}")
