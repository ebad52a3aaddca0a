"""Elimination of benign chains: weakly chaining clause -> equisatisfiable chain-free clause."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import automata as au
from .formula import (ArithCmp, ArithTerm, Membership, Relational, atom_vars, dedup,
                      fresh_names, length_zero)
from .fragment import (FragmentClass, build_graph, classify_clause, find_chains,
                       benign_constraint_count, sccs, component_status, _has_cycle)

log = logging.getLogger(__name__)


class NotWeaklyChaining(ValueError):
    pass


FALSE_ATOM = ArithCmp(ArithTerm(1), "<=", ArithTerm(0))


@dataclass
class ChainClosure:
    positions: tuple          # S
    constraints: tuple        # indices into the clause's relational atoms
    distinct_vars: tuple      # x_{i1} .. x_{ik}
    index_x: dict
    index_y: dict


@dataclass
class EliminationStats:
    initial_b: int = 0
    eliminations: int = 0
    b_trace: list = field(default_factory=list)
    degenerate: int = 0


def _choose_family(g):
    """The benign SCC to eliminate, normalised to left positions."""
    cyclic = [c for c in sorted(sccs(g)) if _has_cycle(g, c)]
    benign = [c for c in cyclic if component_status(g, c)[0]]
    for c in benign:
        if c[0].side == "L":
            return c
    if not benign:
        return None
    # right-only family: its constraints also carry a left-only benign family
    right = benign[0]
    lefts = {p for p in g.positions if p.side == "L" and p.con in {q.con for q in right}}
    for c in benign:
        if set(c) & lefts:
            return c
    raise AssertionError("right-only benign chain without a left-only counterpart")


def closure_of(clause, comp) -> ChainClosure:
    g = build_graph(clause)
    cons = sorted({p.con for p in comp})
    xs = [g.constraints[j].lhs[0] for j in cons]
    distinct = tuple(dict.fromkeys(xs))
    index_x = {j: distinct.index(g.constraints[j].lhs[0]) for j in cons}
    index_y = {}
    s_vars = set(distinct)
    for j in cons:
        occ = [v for v in g.constraints[j].rhs if v in s_vars]
        if len(occ) == 1:
            index_y[j] = distinct.index(occ[0])
    return ChainClosure(tuple(comp), tuple(cons), distinct, index_x, index_y)


def _equality_aut(alphabet):
    return au.identity(alphabet)


def _lift(rel, ix, iy, k, alphabet):
    """k-tape length-preserving automaton for {w | (w[ix], w[iy]) in rel}."""
    if ix == iy:
        base = au.diagonal(rel)
        target = [ix] + [t for t in range(k) if t != ix]
    else:
        base = rel
        target = [ix, iy] + [t for t in range(k) if t not in (ix, iy)]
    base = au.cylindrify(base, k, alphabet, length_preserving=True)
    # new tape target[m] carries old tape m
    sigma = [0] * k
    for m, t in enumerate(target):
        sigma[t] = m
    return au.permute(base, sigma)


def eliminate_one_chain_family(clause, comp, alphabet, taken=(), stats=None):
    """Replace the constraints of one benign family by A(f) and projections pi_j(x_ij, f)."""
    clause = tuple(clause)
    rels = [a for a in clause if isinstance(a, Relational)]
    status = component_status(build_graph(clause), comp)
    if not status[0]:
        raise NotWeaklyChaining(f"chain through {comp[0]} is not benign: {status[1]}")
    cl = closure_of(clause, comp)
    involved = [rels[j] for j in cl.constraints]
    rest = [a for a in clause if not (isinstance(a, Relational) and a in involved)]
    s_vars = set(cl.distinct_vars)
    added = []

    if len(cl.index_y) < len(cl.constraints):
        # some right side holds two chain variables: every chain variable is empty
        if stats:
            stats.degenerate += 1
        log.debug("degenerate family over %s: forcing empty words", sorted(s_vars))
        for a in involved:
            added.append(length_zero(a.lhs + a.rhs))
            rel = a.rel or _equality_aut(alphabet)
            if not au.accepts(rel, ((), ())):
                added.append(FALSE_ATOM)
        return dedup(rest + added), cl

    k = len(cl.distinct_vars)
    lifted = None
    for j in cl.constraints:
        a = rels[j]
        rel = a.rel or _equality_aut(alphabet)
        y = cl.distinct_vars[cl.index_y[j]]
        others = list(a.rhs)
        others.remove(y)
        if others:
            added.append(length_zero(tuple(others)))
        ak = _lift(rel, cl.index_x[j], cl.index_y[j], k, alphabet)
        lifted = ak if lifted is None else au.intersect_lp(lifted, ak)
    lifted = au.trim(lifted)
    taken = set(taken)
    for a in clause:
        taken.update(atom_vars(a))
    f = next(fresh_names("_b", taken))
    letters = sorted(lifted.labels, key=repr)
    a_f = au.tuple_letter_automaton(lifted).with_name(f"A_{f}")
    added.append(Membership((f,), a_f))
    for j, x in enumerate(cl.distinct_vars):
        added.append(Relational((x,), (f,), au.projection(j, letters)))
    log.debug("eliminated family %s: k=%d, |A|=%d states, fresh %s",
              [str(p) for p in comp], k, len(lifted.states), f)
    return dedup(rest + added), cl


def to_chain_free(clause, alphabet, taken=(), stats: EliminationStats | None = None):
    """Eliminate benign families until the clause is chain-free."""
    clause = tuple(clause)
    cls = classify_clause(clause)
    if cls.kind is FragmentClass.CHAINING:
        raise NotWeaklyChaining(str(cls.bad_witness))
    stats = stats if stats is not None else EliminationStats()
    stats.initial_b = benign_constraint_count(clause)
    stats.b_trace.append(stats.initial_b)
    taken = set(taken)
    while cls.kind is FragmentClass.WEAKLY_CHAINING:
        comp = _choose_family(build_graph(clause))
        clause, _ = eliminate_one_chain_family(clause, comp, alphabet, taken, stats)
        for a in clause:
            taken.update(atom_vars(a))
        stats.eliminations += 1
        stats.b_trace.append(benign_constraint_count(clause))
        cls = classify_clause(clause)
        if cls.kind is FragmentClass.CHAINING:
            raise AssertionError("benign elimination introduced a non-benign chain")
    return clause
