import itertools
import random

from hypothesis import given, settings, strategies as st

from chainfree import automata as au
from chainfree.formula import And, ArithCmp, ArithTerm, Membership, Not, Relational, evaluate
from chainfree.oracle import bounded_sat, tuple_alphabets, words_upto

from gen import random_formula

AB = ("a", "b")


def test_words_in_length_then_lex_order():
    assert list(words_upto(AB, 2)) == [(), ("a",), ("b",), ("a", "a"), ("a", "b"),
                                       ("b", "a"), ("b", "b")]


def test_first_witness_is_smallest():
    f = And((ArithCmp(ArithTerm(1), "<=", ArithTerm.length(("x",))),
             Membership(("x",), au.word_automaton("ba"))))
    res = bounded_sat(f, 3, AB)
    assert res.witness == {"x": ("b", "a")}


def test_unsat_within_bound():
    f = And((Relational(("x",), ("y",), au.identity(AB)),
             ArithCmp(ArithTerm.length(("x",)), "<", ArithTerm.length(("y",)))))
    res = bounded_sat(f, 3, AB)
    assert not res.found and res.explored > 0


def test_declared_variables_come_first():
    f = Relational(("x",), ("x",))
    res = bounded_sat(f, 1, AB, ["w"])
    assert res.witness == {"w": (), "x": ()}


def test_tuple_alphabet_for_fresh_variable():
    letters = [("a", "b"), ("b", "a")]
    pi0 = au.projection(0, letters)
    a_f = au.tuple_letter_automaton(au.make(2, [0], [0], [0], [(0, lab, 0) for lab in letters]))
    clause = (Membership(("f",), a_f), Relational(("x",), ("f",), pi0),
              ArithCmp(ArithTerm(2), "<=", ArithTerm.length(("x",))))
    alph = tuple_alphabets(clause)
    assert set(alph["f"]) == set(letters)
    res = bounded_sat(And(clause), 2, AB, None, alph)
    assert res.found and len(res.witness["x"]) == 2


def test_concatenation_witness():
    f = And((Membership(("x",), au.word_automaton("ab")), Relational(("y",), ("x", "x"))))
    res = bounded_sat(f, 4, AB, ["x", "y"])
    assert res.witness == {"x": ("a", "b"), "y": ("a", "b", "a", "b")}


def _brute(p, bound):
    doms = [list(words_upto(p.alphabet, bound)) for _ in p.variables]
    for vals in itertools.product(*doms):
        eta = dict(zip(p.variables, vals))
        if evaluate(p, eta):
            return eta
    return None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_agrees_with_plain_enumeration(seed):
    p = random_formula(random.Random(seed), n_vars=2)
    if len(p.variables) > 3:
        return
    res = bounded_sat(p, 2)
    want = _brute(p, 2)
    assert res.found == (want is not None)
    if res.found:
        assert evaluate(p, {v: res.witness[v] for v in p.variables})


def test_negation_handled():
    f = Not(Membership(("x",), au.sigma_star("a")))
    assert bounded_sat(f, 2, AB).witness == {"x": ("b",)}
