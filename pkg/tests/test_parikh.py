import random

from hypothesis import given, settings, strategies as st

from chainfree import arith as ar
from chainfree import automata as au
from chainfree.formula import And, ArithCmp, ArithTerm, Membership, Relational, evaluate
from chainfree.oracle import bounded_sat
from chainfree.parikh import decide_clause, length_link, parikh_formula, synchronize

from gen import random_automaton
from parikh_check import compare, formula_vectors

AB = ("a", "b")
ID = au.identity(AB)


def star(word):
    n = len(word)
    return au.make(1, range(n), [0], [0], [(i, (c,), (i + 1) % n) for i, c in enumerate(word)])


def length(v):
    return ArithTerm.length((v,))


def test_synchronize_membership_and_identity():
    sc = synchronize([Membership(("x",), star("a")), Relational(("x",), ("y",), ID)], AB)
    got = {tuple(dict(zip(sc.tape_vars, t))[v] for v in "xy") for t in au.enumerate_tuples(sc.aut, 3)}
    assert got == {(("a",) * k, ("a",) * k) for k in range(4)}


def test_synchronize_single_membership():
    sc = synchronize([Membership(("x",), star("ab"))], AB)
    assert sc.tape_vars == ("x",)
    assert au.enumerate_words(sc.aut, 4) == au.enumerate_words(star("ab"), 4)


def test_synchronize_disjoint_languages():
    a_plus = au.make(1, [0, 1], [0], [1], [(0, ("a",), 1), (1, ("a",), 1)])
    b_plus = au.make(1, [0, 1], [0], [1], [(0, ("b",), 1), (1, ("b",), 1)])
    sc = synchronize([Membership(("x",), a_plus), Membership(("x",), b_plus)], AB)
    assert au.is_empty(sc.aut)


def test_parikh_ab_star():
    labels, sols = formula_vectors(star("ab"), 6)
    assert labels == [("a",), ("b",)]
    assert sols == {(k, k) for k in range(4)}


def test_parikh_empty_automaton():
    enc = parikh_formula(au.empty())
    assert ar.solve(ar.LiaProblem(enc.formula)).status == "unsat"


def test_parikh_single_loop():
    labels, sols = formula_vectors(star("a"), 5)
    assert sols == {(k,) for k in range(6)}


def test_parikh_needs_connectivity():
    # a disconnected b-cycle must not be counted without a path to it
    a = au.make(1, [0, 1, 2], [0], [0], [(0, ("a",), 0), (1, ("b",), 2), (2, ("b",), 1)])
    _, sols = formula_vectors(a, 4)
    assert all(v[1] == 0 for v in sols)


def test_flow_system_with_two_as():
    enc = parikh_formula(star("ab"))
    res = ar.solve(ar.LiaProblem(ar.conj(enc.formula, ar.eq(enc.label_var[("a",)], 2))))
    assert res.sat and res.model[enc.label_var[("b",)]] == 2


def test_length_link_two_tapes():
    t = au.make(2, [0], [0], [0], [(0, ("a", au.EPS), 0), (0, (au.EPS, "b"), 0)])
    sc = synchronize([Relational(("x",), ("y",), t)], AB)
    enc = parikh_formula(sc.aut)
    link = length_link(sc, enc, lambda v: f"len_{v}")
    fix = ar.conj(enc.formula, link, ar.eq("len_x", 2), ar.eq("len_y", 3))
    res = ar.solve(ar.LiaProblem(fix))
    assert res.sat
    assert res.model[enc.label_var[("a", au.EPS)]] == 2
    assert res.model[enc.label_var[(au.EPS, "b")]] == 3


def test_length_link_identity_forces_equal_lengths():
    sc = synchronize([Relational(("x",), ("y",), ID)], AB)
    enc = parikh_formula(sc.aut)
    link = length_link(sc, enc, lambda v: f"len_{v}")
    lt = ar.lt("len_x", "len_y")
    assert ar.solve(ar.LiaProblem(ar.conj(enc.formula, link, lt))).status == "unsat"


def test_decide_identity_with_length():
    a_star = star("a")
    clause = (Relational(("x",), ("y",), ID), ArithCmp(length("x"), "<=", ArithTerm(5)),
              ArithCmp(ArithTerm(1), "<=", length("x")), Membership(("x",), a_star))
    v = decide_clause(clause, AB)
    assert v.status == "sat"
    assert v.model["x"] == v.model["y"] and v.model["x"][0] == "a"
    assert evaluate(And(clause), v.model)
    assert bounded_sat(And(clause), 2, AB).found


def test_decide_identity_shorter_is_unsat():
    clause = (Relational(("x",), ("y",), ID), ArithCmp(length("x"), "<", length("y")))
    assert decide_clause(clause, AB).status == "unsat"


def test_decide_parity():
    clause = (Membership(("x",), star("aa")), ArithCmp(length("x"), "=", ArithTerm(3)))
    assert decide_clause(clause, AB).status == "unsat"


# -- properties ---------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 2))
def test_parikh_matches_enumeration(seed, tapes):
    rng = random.Random(seed)
    a = random_automaton(rng, tapes, max_states=5, lp=rng.random() < 0.5, density=0.35)
    assert compare(a, 5) is None


def _random_leaf(rng):
    vs = ["x", "y", "z"]
    atoms = []
    for _ in range(rng.randint(1, 3)):
        kind = rng.random()
        if kind < 0.4:
            x, y = rng.sample(vs, 2)
            atoms.append(Relational((x,), (y,), random_automaton(rng, 2, lp=rng.random() < 0.5)))
        elif kind < 0.7:
            atoms.append(Membership((rng.choice(vs),), random_automaton(rng, 1, lp=False)))
        else:
            x, y = rng.sample(vs, 2)
            op = rng.choice(["<", "<=", "="])
            atoms.append(ArithCmp(length(x), op, ArithTerm(rng.randint(0, 2), ((y, 1),)
                                                           if rng.random() < 0.5 else ())))
    # keep it chain-free: at most one relational atom per pair of variables
    seen, out = set(), []
    for a in atoms:
        if isinstance(a, Relational):
            key = frozenset(a.lhs + a.rhs)
            if key in seen:
                continue
            seen.add(key)
        out.append(a)
    return tuple(out)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_decide_agrees_with_oracle(seed):
    clause = _random_leaf(random.Random(seed))
    rels = [a for a in clause if isinstance(a, Relational)]
    if len(rels) == 3:
        return  # three pairs over three variables form a cycle of shared variables
    v = decide_clause(clause, AB)
    oracle = bounded_sat(And(clause), 4, AB)
    if oracle.found:
        assert v.status == "sat"
    if v.status == "unsat":
        assert not oracle.found
    if v.status == "sat":
        assert evaluate(And(clause), v.model)
