import itertools
import random
from pathlib import Path

from hypothesis import given, settings, strategies as st

from chainfree import automata as au
from chainfree.formula import Relational, parse
from chainfree.fragment import (FragmentClass, Position, build_graph, classify, classify_chain,
                                classify_clause, find_chains)

from gen import random_automaton

DATA = Path(__file__).parent / "data"
AB = ("a", "b")
T = au.make(2, [0, 1], [0], [1], [(0, ("a", au.EPS), 0), (0, (au.EPS, "b"), 1)])
ID = au.identity(AB)


def eq(lhs, rhs):
    return Relational(tuple(lhs), tuple(rhs))


PAIR = [eq("x", "zy"), eq("y", "xuv")]


def test_pair_graph():
    g = build_graph(PAIR)
    assert len(g.positions) == 7
    left = (Position(0, "L", 0), Position(1, "L", 0))
    assert (left[0], left[1]) in g.edges and (left[1], left[0]) in g.edges


def test_no_repeated_variable_no_edges():
    g = build_graph([Relational(("x",), ("y",), T)])
    assert len(g.positions) == 2 and not g.edges


def test_self_loops_on_r_x_x():
    g = build_graph([Relational(("x",), ("x",), T)])
    assert g.edges == {(Position(0, "L", 0), Position(0, "L", 0)),
                       (Position(0, "R", 0), Position(0, "R", 0))}


def test_pair_chains_include_benign():
    chains = find_chains(build_graph(PAIR))
    assert chains and any(w.benign for w in chains)


def test_straight_line_is_acyclic():
    clause = [Relational(("x1",), ("x0",), T), eq(["x2"], ["x1", "x0"])]
    assert find_chains(build_graph(clause)) == []


def test_self_loop_witnesses():
    ws = find_chains(build_graph([Relational(("x",), ("x",), T)]))
    assert sorted(w.cycle[0].side for w in ws) == ["L", "R"]
    assert all(len(w.cycle) == 1 and not w.benign for w in ws)


def test_classify_chain_conditions():
    (w,) = [c for c in find_chains(build_graph(PAIR)) if c.cycle[0].side == "L"]
    assert classify_chain(w, PAIR)
    loop = [Relational(("x",), ("x",), T)]
    assert not any(classify_chain(w2, loop) for w2 in find_chains(build_graph(loop)))


def test_single_side_self_loops_are_benign():
    assert classify_clause([eq("x", "xy")]).kind is FragmentClass.WEAKLY_CHAINING


def test_mixed_sides_not_benign():
    clause = [eq("z", "xy"), eq("z", "zyx")]
    cls = classify_clause(clause)
    assert cls.kind is FragmentClass.CHAINING
    assert "mixes left and right" in cls.bad_witness.reason


def test_classify_files():
    def kind(name):
        p = parse((DATA / name).read_text())
        return classify(p, p.alphabet)
    assert kind("sanitizer.smt") is FragmentClass.CHAIN_FREE
    assert kind("benign_pair.smt") is FragmentClass.WEAKLY_CHAINING
    assert kind("transducer_loop.smt") is FragmentClass.CHAINING
    assert kind("xyzz.smt") is FragmentClass.CHAIN_FREE


def test_classification_carries_witness():
    cls = classify_clause([Relational(("x",), ("x",), T)])
    assert cls.kind is FragmentClass.CHAINING
    assert "length-preserving" in cls.bad_witness.reason


# -- properties -------------------------------------------------------------------------

def random_clause(rng, n_cons):
    vs = "xyzu"
    out = []
    for _ in range(n_cons):
        lhs = tuple(rng.choice(vs) for _ in range(rng.randint(1, 2)))
        rhs = tuple(rng.choice(vs) for _ in range(rng.randint(1, 3)))
        rel = None if rng.random() < 0.4 else random_automaton(rng, 2, lp=rng.random() < 0.5)
        out.append(Relational(lhs, rhs, rel))
    return out


def _brute_edges(clause):
    cons = [a for a in clause if isinstance(a, Relational)]
    pos = [(Position(j, s, i), v) for j, a in enumerate(cons) for s in "LR"
           for i, v in enumerate(a.side(s))]
    var = dict(pos)
    edges = set()
    for (p, _), (q, vq) in itertools.product(pos, pos):
        for r, vr in pos:
            if r.con == p.con and r.side != p.side and vr == vq and r != q:
                edges.add((p, q))
    return edges, var


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_edges_match_definition(seed, n):
    clause = random_clause(random.Random(seed), n)
    edges, _ = _brute_edges(clause)
    assert build_graph(clause).edges == edges


def _has_cycle_closure(g):
    reach = {p: set() for p in g.positions}
    for p, q in g.edges:
        reach[p].add(q)
    changed = True
    while changed:
        changed = False
        for p in g.positions:
            new = set().union(*(reach[q] for q in reach[p])) if reach[p] else set()
            if not new <= reach[p]:
                reach[p] |= new
                changed = True
    return any(p in reach[p] for p in g.positions)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_chain_free_iff_acyclic(seed, n):
    clause = random_clause(random.Random(seed), n)
    g = build_graph(clause)
    assert (classify_clause(clause).kind is FragmentClass.CHAIN_FREE) == (not _has_cycle_closure(g))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_witnesses_are_cycles(seed, n):
    clause = random_clause(random.Random(seed), n)
    g = build_graph(clause)
    for w in find_chains(g):
        assert all(e in g.edges for e in w.edges())
        if w.benign:
            assert len({p.side for p in w.cycle}) == 1 and classify_chain(w, clause)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(list(itertools.permutations("xy"))), st.booleans(), st.booleans())
def test_two_constraints_sharing_two_variables_chain(order, flip1, flip2):
    x, y = order
    a = Relational((x,), (y,), ID) if not flip1 else Relational((y,), (x,), ID)
    b = Relational((x,), (y,), T) if not flip2 else Relational((y,), (x,), T)
    assert find_chains(build_graph([a, b]))
