"""Splitting a chain-free clause into chain- and concatenation-free clauses.

Phase 1 splits only root constraints of the reminder; Phase 2 splits whatever is
left.  Both phases check their termination measures at every step, and every
intermediate clause is re-classified to confirm it stays chain-free.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache

from . import automata as au
from .formula import (ArithCmp, ArithTerm, Membership, Relational, atom_vars, dedup,
                      substitute)
from .fragment import build_graph, classify_clause, FragmentClass, root_positions

log = logging.getLogger(__name__)


class SplitError(RuntimeError):
    pass


class ResourceLimit(RuntimeError):
    pass


class InvariantViolation(AssertionError):
    pass


# -- single split ----------------------------------------------------------------

@lru_cache(maxsize=4096)
def state_splits(rel):
    """Non-empty (prefix, suffix) pairs of ``rel``, one per state; None means equality."""
    if rel is None:
        return ((None, None),)
    out = []
    for _, pre, suf in au.split_at_states(rel):
        pre, suf = au.trim(pre), au.trim(suf)
        if not au.is_empty(pre) and not au.is_empty(suf):
            out.append((pre, suf))
    return tuple(out)


class Fresh:
    def __init__(self, taken=()):
        self.taken = set(taken)
        self.counter = itertools.count(1)

    def __call__(self, base):
        base = base.split("~")[0]
        while True:
            name = f"{base}~{next(self.counter)}"
            if name not in self.taken:
                self.taken.add(name)
                return name

    def reserve(self, names):
        self.taken.update(names)


@dataclass(frozen=True)
class SplitCase:
    first: Relational      # concatenation-free part: R_q(x1, y) or R_q(x, y1)
    second: Relational     # qR(x2.t, t') or qR(t, y2.t')
    var: str
    parts: tuple


def can_split(atom, direction) -> bool:
    if not atom.lhs or not atom.rhs:
        return False
    return len(atom.rhs) > 1 if direction == "L" else len(atom.lhs) > 1


def split_constraint(atom: Relational, direction: str, fresh) -> list:
    """Disjuncts of the left ("L") or right ("R") split of ``atom``."""
    if not can_split(atom, direction):
        raise SplitError(f"no {direction} split for this atom")
    x, t = atom.lhs[0], atom.lhs[1:]
    y, t2 = atom.rhs[0], atom.rhs[1:]
    if direction == "L":
        v1, v2 = fresh(x), fresh(x)
        sub = {x: (v1, v2)}
        var = x
    else:
        v1, v2 = fresh(y), fresh(y)
        sub = {y: (v1, v2)}
        var = y
    st = lambda term: tuple(w for v in term for w in sub.get(v, (v,)))
    out = []
    for pre, suf in state_splits(atom.rel):
        if direction == "L":
            a1 = Relational((v1,), st((y,)), pre)
            a2 = Relational((v2,) + st(t), st(t2), suf)
        else:
            a1 = Relational(st((x,)), (v1,), pre)
            a2 = Relational(st(t), (v2,) + st(t2), suf)
        out.append(SplitCase(a1, a2, var, (v1, v2)))
    return out


def is_concat_free(a) -> bool:
    if isinstance(a, Relational):
        return len(a.lhs) <= 1 and len(a.rhs) <= 1
    if isinstance(a, Membership):
        return len(a.term) <= 1
    return True


# -- annotated clauses -------------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    atom: Relational
    level: int | None = None     # None while in the reminder
    outer: str | None = None     # "L"/"R" once the atom has been a root
    root: bool = False


@dataclass
class AnnotatedClause:
    slots: tuple
    others: tuple
    subs: tuple = ()
    l: int = 0
    next_level: int = 0
    measure: tuple | None = None
    depth: int = 0

    @property
    def reminder(self):
        return [i for i, s in enumerate(self.slots) if s.level is None]

    @property
    def clause(self):
        return tuple(s.atom for s in self.slots) + self.others

    @property
    def length_side(self):
        return tuple(ArithCmp(ArithTerm.length((x,)), "=", ArithTerm.length(parts))
                     for x, parts in self.subs)


@dataclass
class SplitStats:
    phase1_steps: int = 0
    phase2_steps: int = 0
    clauses: int = 0
    measure_checks: int = 0
    measure_violations: list = field(default_factory=list)
    chain_checks: int = 0
    chain_violations: list = field(default_factory=list)
    strict: bool = True

    def violation(self, bucket, msg):
        bucket.append(msg)
        if self.strict:
            raise InvariantViolation(msg)


def _root_sides(g, idx_map):
    """For each reminder slot index: the set of sides consisting of root positions."""
    roots = root_positions(g)
    out = {}
    for j, a in enumerate(g.constraints):
        sides = set()
        for side in "LR":
            ps = [p for p in g.positions if p.con == j and p.side == side]
            if ps and all(p in roots for p in ps):
                sides.add(side)
        out[idx_map[j]] = sides
    return out


def _reminder_roots(ac):
    rem = ac.reminder
    g = build_graph([ac.slots[i].atom for i in rem])
    return _root_sides(g, rem)


def settle(ac: AnnotatedClause, initial=False) -> AnnotatedClause:
    """Mark new roots, then drop concatenation-free roots from the reminder until none is left."""
    slots = list(ac.slots)
    l = ac.l
    level = ac.next_level
    while True:
        tmp = replace(ac, slots=tuple(slots))
        roots = _reminder_roots(tmp)
        dropped = []
        for i, sides in roots.items():
            if not sides:
                continue
            s = slots[i]
            if not s.root:
                if not initial:
                    l -= 1
                s = replace(s, root=True)
            if s.outer is None:
                s = replace(s, outer="L" if "L" in sides else "R")
            slots[i] = s
            if is_concat_free(s.atom):
                dropped.append(i)
        if not dropped:
            break
        for i in dropped:
            slots[i] = replace(slots[i], level=level)
        level += 1
    out = replace(ac, slots=tuple(slots), l=l, next_level=level)
    out.measure = phase1_measure(out)
    return out


def phase1_measure(ac) -> tuple:
    roots = _reminder_roots(ac)
    o = i = 0
    for k, sides in roots.items():
        if not sides:
            continue
        s = ac.slots[k]
        outer = s.outer if s.outer in sides else ("L" if "L" in sides else "R")
        o += len(s.atom.side(outer))
        i += len(s.atom.side("R" if outer == "L" else "L"))
    return (ac.l, o, i)


def phase2_measure(ac) -> tuple:
    """Inner-side lengths of non-concatenation-free atoms per level, highest level first."""
    n = ac.next_level
    vec = [0] * max(n, 1)
    for s in ac.slots:
        if s.level is None or is_concat_free(s.atom):
            continue
        inner = "R" if s.outer == "L" else "L"
        vec[s.level] += len(s.atom.side(inner))
    return tuple(reversed(vec))


def _normalize_relational(a, alphabet):
    """Relational atom with an empty side -> membership of the other side (or a constant)."""
    if a.lhs and a.rhs:
        return a
    rel = a.rel if a.rel is not None else au.identity(alphabet)
    if not a.lhs and not a.rhs:
        return None if au.accepts(rel, ((), ())) else FALSE_ATOM
    keep = 0 if a.lhs else 1
    dom = _domain(rel, keep)
    return Membership(a.lhs or a.rhs, dom)


FALSE_ATOM = ArithCmp(ArithTerm(1), "<=", ArithTerm(0))


@lru_cache(maxsize=1024)
def _domain(rel, keep):
    return au.project_side(rel, keep)


def initial_clause(clause, alphabet) -> AnnotatedClause:
    rels, others = [], []
    for a in clause:
        if isinstance(a, Relational):
            a = _normalize_relational(a, alphabet)
            if a is None:
                continue
        (rels if isinstance(a, Relational) else others).append(a)
    rels = dedup(rels)
    ac = AnnotatedClause(tuple(Slot(a) for a in rels), dedup(others), l=len(rels))
    return settle(ac, initial=True)


def _apply_split(ac, idx, case, sub):
    parent = ac.slots[idx]
    slots = []
    for k, s in enumerate(ac.slots):
        if k == idx:
            slots.append(replace(parent, atom=case.first))
            slots.append(replace(parent, atom=case.second))
        else:
            slots.append(replace(s, atom=substitute(s.atom, sub)))
    seen = set()
    uniq = []
    for s in slots:
        if s.atom not in seen:
            seen.add(s.atom)
            uniq.append(s)
    others = dedup(substitute(a, sub) for a in ac.others)
    return replace(ac, slots=tuple(uniq), others=others,
                   subs=ac.subs + ((case.var, case.parts),), measure=None, depth=ac.depth + 1)


def _children(ac, idx, fresh):
    atom = ac.slots[idx].atom
    kids = []
    for direction in "LR":
        if can_split(atom, direction):
            for case in split_constraint(atom, direction, fresh):
                sub = {case.var: case.parts}
                kids.append((direction, _apply_split(ac, idx, case, sub)))
    return kids


def _check_chain_free(ac, stats):
    stats.chain_checks += 1
    cls = classify_clause([s.atom for s in ac.slots])
    if cls.kind is not FragmentClass.CHAIN_FREE:
        stats.violation(stats.chain_violations,
                        f"intermediate clause is {cls.kind.value}: {cls.witnesses[0]}")


def phase1_step(ac, fresh, stats):
    """Split the lowest-index root constraint of the reminder."""
    roots = _reminder_roots(ac)
    candidates = [i for i in ac.reminder if roots[i]]
    if not candidates:
        raise SplitError("non-empty reminder without a root constraint")
    idx = min(candidates)
    out = []
    for direction, child in _children(ac, idx, fresh):
        child = settle(child)
        stats.measure_checks += 1
        if not child.measure < ac.measure:
            stats.violation(stats.measure_violations,
                            f"phase 1 measure {ac.measure} -> {child.measure}")
        _check_chain_free(child, stats)
        log.debug("phase1 split %s (%s): measure %s -> %s", idx, direction,
                  ac.measure, child.measure)
        out.append(child)
    stats.phase1_steps += 1
    return out


def phase2_step(ac, fresh, stats):
    idx = next(i for i, s in enumerate(ac.slots) if not is_concat_free(s.atom))
    before = phase2_measure(ac)
    out = []
    for direction, child in _children(ac, idx, fresh):
        after = phase2_measure(child)
        stats.measure_checks += 1
        if not after < before:
            stats.violation(stats.measure_violations,
                            f"phase 2 measure {before} -> {after}")
        _check_chain_free(child, stats)
        log.debug("phase2 split %s (%s): measure %s -> %s", idx, direction, before, after)
        out.append(child)
    stats.phase2_steps += 1
    return out


@dataclass
class Leaf:
    clause: tuple
    subs: tuple


def decompose_memberships(atoms) -> list:
    """Rewrite t1.t2 in A as a disjunction over states of t1 in A_q and t2 in qA."""
    todo = [(tuple(atoms), 0)]
    results = []
    while todo:
        cur, start = todo.pop()
        k = next((i for i in range(start, len(cur)) if isinstance(cur[i], Membership)
                  and len(cur[i].term) != 1), None)
        if k is None:
            results.append(dedup(cur))
            continue
        m = cur[k]
        rest = cur[:k] + cur[k + 1:]
        if not m.term:
            if au.accepts(m.aut, ((),)):
                todo.append((rest, k))
            continue
        head, tail = m.term[0], m.term[1:]
        alts = []
        for pre, suf in state_splits(m.aut):
            alts.append(rest[:k] + (Membership((head,), pre), Membership(tail, suf)) + rest[k:])
        for alt in reversed(alts):
            todo.append((alt, k))
    return results


def to_concat_free(clause, alphabet, stats: SplitStats | None = None, cap: int = 100_000,
                   taken=()):
    """Generate leaves (chain- and concatenation-free clauses with their substitutions).

    Depth-first, left split before right split.  ``cap`` bounds the total number of
    clauses created; exceeding it raises ResourceLimit.
    """
    stats = stats if stats is not None else SplitStats()
    clause = tuple(clause)
    fresh = Fresh(taken)
    for a in clause:
        fresh.reserve(atom_vars(a))
    root = initial_clause(clause, alphabet)
    _check_chain_free(root, stats)
    stack = [root]
    stats.clauses += 1
    while stack:
        ac = stack.pop()
        if ac.reminder:
            kids = phase1_step(ac, fresh, stats)
        elif any(not is_concat_free(s.atom) for s in ac.slots):
            kids = phase2_step(ac, fresh, stats)
        else:
            for atoms in decompose_memberships(ac.clause):
                yield Leaf(atoms, ac.subs)
            continue
        stats.clauses += len(kids)
        if stats.clauses > cap:
            raise ResourceLimit(f"more than {cap} clauses created while splitting")
        stack.extend(reversed(kids))


def concat_free_clauses(clause, alphabet, **kw) -> list:
    return [leaf.clause for leaf in to_concat_free(clause, alphabet, **kw)]
