import itertools
from importlib import resources

import pytest
from hypothesis import given, strategies as st

from ltlsynth.automata import (dra_accepts_lasso, dra_run, dra_step, format_dra, ltl_to_dra,
                               parse_dra_file, same_automaton)
from ltlsynth.errors import (DraSyntaxError, IncompletenessError, NondeterminismError,
                             UnsupportedFragmentError)
from ltlsynth.ltl import holds, parse_ltl


def fig3_text():
    return resources.files("ltlsynth").joinpath("data/until_collision.dra").read_text()


@pytest.fixture(scope="module")
def fig3():
    return parse_dra_file(fig3_text())


def test_file_automaton_shape(fig3):
    assert fig3.states == ("q0", "q1", "q2")
    assert fig3.propositions == {"col", "goal"}
    assert len(fig3.acceptance) == 1
    pair = fig3.acceptance[0]
    assert pair.avoid == frozenset() and pair.repeat == {fig3.index_of("q1")}


def test_file_matches_template(fig3):
    assert same_automaton(fig3, ltl_to_dra(parse_ltl("!col U goal")))


@pytest.mark.parametrize("state, letter, target", [
    ("q0", {"goal"}, "q1"),
    ("q0", {"col"}, "q2"),
    ("q0", set(), "q0"),
    ("q0", {"col", "goal"}, "q1"),
    ("q1", {"col"}, "q1"),
    ("q1", set(), "q1"),
    ("q2", {"goal"}, "q2"),
])
def test_step(fig3, state, letter, target):
    assert fig3.states[dra_step(fig3, state, letter)] == target


def test_step_ignores_foreign_atoms(fig3):
    assert dra_step(fig3, "q0", {"goal", "c8_pl", "other"}) == fig3.index_of("q1")


def test_run(fig3):
    run = dra_run(fig3, [set(), set(), {"goal"}, {"col"}])
    assert [fig3.states[q] for q in run] == ["q0", "q0", "q0", "q1", "q1"]


def test_overlapping_guards():
    text = fig3_text().replace("q0 -- goal --> q1", "q0 -- goal --> q1\nq0 -- col --> q2") \
        .replace("q0 -- col & !goal --> q2\n", "")
    with pytest.raises(NondeterminismError, match="q0"):
        parse_dra_file(text)


def test_missing_letter():
    text = fig3_text().replace("q0 -- goal --> q1", "q0 -- goal & !col --> q1")
    with pytest.raises(IncompletenessError, match="col, goal"):
        parse_dra_file(text)


def test_redundant_edges_with_same_target_are_fine():
    text = fig3_text() + "q1 -- col --> q1\n"
    assert same_automaton(parse_dra_file(text), parse_dra_file(fig3_text()))


@pytest.mark.parametrize("bad", [
    "states q0\ninitial: q0\n",
    "states: q0\ninitial: q9\n",
    "states: q0\ninitial: q0\nq0 -- p & --> q0\n",
    "states: q0\ninitial: q0\nacc: (q0\n",
])
def test_syntax_errors(bad):
    with pytest.raises(DraSyntaxError):
        parse_dra_file(bad)


TEMPLATES = ["!col U goal", "p U q", "F p", "G p", "G F p", "F G p", "p & !q", "true",
             "(p | q) U (p & q)"]


@pytest.mark.parametrize("text", TEMPLATES)
def test_template_round_trips_through_file(text):
    dra = ltl_to_dra(parse_ltl(text))
    assert same_automaton(parse_dra_file(format_dra(dra)), dra)


def lassos(props, max_len):
    alphabet = [frozenset(c) for k in range(len(props) + 1)
                for c in itertools.combinations(props, k)]
    for total in range(1, max_len + 1):
        for split in range(total):
            for word in itertools.product(alphabet, repeat=total):
                yield word[:split], word[split:]


def test_until_template_against_semantics():
    f = parse_ltl("p U q")
    dra = ltl_to_dra(f)
    checked = 0
    for stem, loop in lassos(["p", "q"], 6):
        assert dra_accepts_lasso(dra, stem, loop) == holds(f, stem, loop), (stem, loop)
        checked += 1
    assert checked > 10_000


@pytest.mark.parametrize("text", ["F p", "G p", "G F p", "F G p", "p", "!p & q"])
def test_other_templates_against_semantics(text):
    f = parse_ltl(text)
    dra = ltl_to_dra(f)
    for stem, loop in lassos(["p", "q"], 5):
        assert dra_accepts_lasso(dra, stem, loop) == holds(f, stem, loop), (stem, loop)


def test_true_is_one_state():
    dra = ltl_to_dra(parse_ltl("True"))
    assert len(dra.states) == 1
    assert dra_accepts_lasso(dra, [], [set()])


def test_eventually_is_two_states():
    assert len(ltl_to_dra(parse_ltl("F p")).states) == 2


@pytest.mark.parametrize("text, culprit", [
    ("X p", "X p"),
    ("p U (q U r)", "(q U r)"),
    ("G (p -> F q)", "(p -> F q)"),
])
def test_unsupported_names_the_subformula(text, culprit):
    with pytest.raises(UnsupportedFragmentError) as info:
        ltl_to_dra(parse_ltl(text))
    msg = str(info.value)
    assert "--dra" in msg
    assert culprit.replace(" ", "") in msg.replace(" ", "")


@given(st.sampled_from(TEMPLATES), st.lists(st.frozensets(st.sampled_from(["p", "q", "x"])),
                                            max_size=10))
def test_every_letter_has_one_successor(text, word):
    dra = ltl_to_dra(parse_ltl(text))
    for q in dra_run(dra, word):
        assert 0 <= q < len(dra.states)
