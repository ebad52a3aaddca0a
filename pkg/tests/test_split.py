import random

import pytest
from hypothesis import given, settings, strategies as st

from chainfree import automata as au
from chainfree.formula import And, ArithCmp, ArithTerm, Membership, Relational, evaluate, iter_dnf, to_left_sided
from chainfree.fragment import FragmentClass, classify_clause
from chainfree.oracle import bounded_sat
from chainfree.solver import reconstruct
from chainfree.split import (Fresh, SplitError, SplitStats, can_split, concat_free_clauses,
                             decompose_memberships, is_concat_free, split_constraint,
                             to_concat_free)

from gen import word_equations

AB = ("a", "b")
T = au.make(2, [0, 1], [0], [1], [(0, ("a", au.EPS), 0), (0, (au.EPS, "b"), 1)])
STEP = au.make(2, ["q0", "q1"], ["q0"], ["q1"], [("q0", ("a", "a"), "q1")])


def eq(lhs, rhs):
    return Relational(tuple(lhs), tuple(rhs))


def rename(atoms, parts, names):
    m = dict(zip(parts, names))
    return [Relational(tuple(m.get(v, v) for v in a.lhs), tuple(m.get(v, v) for v in a.rhs), a.rel)
            for a in atoms]


def test_golden_split_xy_zz():
    fresh = Fresh({"x", "y", "z"})
    (left,) = split_constraint(eq("xy", "zz"), "L", fresh)
    (right,) = split_constraint(eq("xy", "zz"), "R", fresh)
    assert left.var == "x" and right.var == "z"
    assert rename([left.first, left.second], left.parts, ["x1", "x2"]) == \
        [eq(["x1"], ["z"]), eq(["x2", "y"], ["z"])]
    assert rename([right.first, right.second], right.parts, ["z1", "z2"]) == \
        [eq(["x"], ["z1"]), eq(["y"], ["z2", "z1", "z2"])]


def test_transducer_with_single_left_variable_has_right_split_only():
    a = Relational(("x", "t"), ("y",), T)
    assert not can_split(a, "L") and can_split(a, "R")
    with pytest.raises(SplitError):
        split_constraint(a, "L", Fresh())
    cases = split_constraint(a, "R", Fresh())
    assert all(c.var == "y" for c in cases)
    assert len(cases) <= len(T.states)


def test_two_state_transducer_gives_two_disjuncts():
    cases = split_constraint(Relational(("x",), ("y", "z"), STEP), "L", Fresh())
    assert len(cases) == 2


def test_concat_free_split_is_an_error():
    with pytest.raises(SplitError):
        split_constraint(eq("x", "y"), "L", Fresh())


def test_concat_free_clause_passes_through():
    clause = (eq("x", "y"), Membership(("x",), au.sigma_star("a")))
    stats = SplitStats()
    leaves = list(to_concat_free(clause, AB, stats))
    assert [set(l.clause) for l in leaves] == [set(clause)]
    assert stats.phase1_steps == stats.phase2_steps == 0


def test_single_concatenation_needs_one_step():
    stats = SplitStats()
    leaves = concat_free_clauses((eq("z", "xy"),), AB, stats=stats)
    assert stats.phase1_steps + stats.phase2_steps == 1
    assert leaves and all(all(is_concat_free(a) for a in c) for c in leaves)


def test_left_sided_xy_zz_terminates_quickly():
    clause = to_left_sided([eq("xy", "zz")])
    stats = SplitStats()
    leaves = list(to_concat_free(clause, AB, stats))
    assert len(leaves) >= 2
    assert stats.phase1_steps <= 4 * len(leaves)
    assert not stats.measure_violations and not stats.chain_violations
    assert any(bounded_sat(And(l.clause), 2, AB).found for l in leaves)


def test_right_branch_of_xy_zz_phase2():
    stats = SplitStats()
    leaves = concat_free_clauses((eq("x", "z1"), eq("y", "z2 z1 z2".split())), AB, stats=stats)
    assert all(all(is_concat_free(a) for a in c) for c in leaves)
    assert not stats.measure_violations


def test_disjoint_memberships_stay_unsat():
    clause = (Membership(("x",), au.sigma_star("a")),
              Membership(("x",), au.make(1, [0, 1], [0], [1], [(0, ("b",), 1)])))
    (leaf,) = concat_free_clauses(clause, AB)
    assert set(leaf) == set(clause)
    assert not bounded_sat(And(leaf), 3, AB).found


def test_membership_decomposition():
    ab = au.word_automaton("ab")
    out = decompose_memberships([Membership(("x", "y"), ab)])
    sols = set()
    for c in out:
        r = bounded_sat(And(tuple(c)), 2, AB, ["x", "y"])
        if r.found:
            sols.add((r.witness["x"], r.witness["y"]))
    assert all(len(m.term) == 1 for c in out for m in c)
    assert sols <= {((), ("a", "b")), (("a",), ("b",)), (("a", "b"), ())}
    assert len(sols) == 3


def test_resource_limit():
    from chainfree.split import ResourceLimit
    clause = (Relational(("z",), ("x", "y", "x", "y"), STEP),)
    with pytest.raises(ResourceLimit):
        list(to_concat_free(clause, AB, cap=2))


# -- properties ---------------------------------------------------------------------

def _chain_free_clauses(seed):
    (p,) = word_equations(seed, 1, n_vars=3)
    for c in iter_dnf(p):
        c = to_left_sided(c, p.variables)
        if classify_clause(c).kind is FragmentClass.CHAIN_FREE:
            yield p, c


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_leaves_are_equisatisfiable(seed):
    for p, clause in _chain_free_clauses(seed):
        stats = SplitStats()
        leaves = list(to_concat_free(clause, p.alphabet, stats))
        assert not stats.measure_violations and not stats.chain_violations
        orig = bounded_sat(And(clause), 2, p.alphabet, list(p.variables))
        any_leaf = False
        for leaf in leaves:
            assert all(is_concat_free(a) for a in leaf.clause)
            r = bounded_sat(And(leaf.clause), 2, p.alphabet)
            if r.found:
                any_leaf = True
                model = reconstruct(r.witness, leaf.subs)
                assert evaluate(And(clause), model)
        if orig.found:
            assert any_leaf


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_branching_bound(seed):
    rng = random.Random(seed)
    from gen import random_automaton
    rel = random_automaton(rng, 2, lp=rng.random() < 0.5)
    atom = Relational(("x", "u"), ("y", "v"), rel)
    for d in "LR":
        assert len(split_constraint(atom, d, Fresh())) <= max(len(rel.states), 2)
