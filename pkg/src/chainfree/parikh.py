"""Deciding chain- and concatenation-free clauses through Parikh images.

Atoms over shared variables are synchronised into one multi-tape automaton per
connected component.  Components that carry length constraints are encoded as
linear arithmetic (transition counts, flow balance, connectivity), linked to the
string lengths, and handed to an arithmetic backend.
"""
from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field

from . import arith as ar
from . import automata as au
from .automata import EPS
from .formula import ArithCmp, Membership, Relational, atom_vars, substitute

log = logging.getLogger(__name__)


class SyncError(RuntimeError):
    pass


@dataclass
class SyncConstraint:
    aut: au.NTapeAutomaton
    tape_vars: tuple

    def __post_init__(self):
        if len(set(self.tape_vars)) != len(self.tape_vars):
            raise SyncError("tape variables must be distinct")
        if self.aut.tapes != len(self.tape_vars):
            raise SyncError("tape count does not match the variables")


def _atom_aut(a, alphabet):
    if isinstance(a, Membership):
        return a.aut, a.term
    rel = a.rel if a.rel is not None else au.identity(alphabet)
    return rel, a.lhs + a.rhs


def _memberships_by_var(atoms):
    """Intersect the memberships of each variable into one minimal automaton."""
    per_var = {}
    rest = []
    for a in atoms:
        if isinstance(a, Membership):
            (x,) = a.term
            m = au.minimize1(a.aut)
            per_var[x] = m if x not in per_var else au.minimize1(au.intersect_lp(per_var[x], m))
        else:
            rest.append(a)
    return per_var, rest


def synchronize(atoms, alphabet=()) -> SyncConstraint:
    """Join atoms on their shared variable (product when none is shared).

    Memberships are merged per variable first and every intermediate product is
    reduced by bisimulation, which keeps the relation and shrinks the encoding.
    """
    atoms = list(atoms)
    if not atoms:
        raise SyncError("nothing to synchronise")
    per_var, rels = _memberships_by_var(atoms)
    cur, tvars = None, []
    remaining = list(range(len(rels)))
    while remaining:
        pick = next((k for k in remaining
                     if cur is None or set(atom_vars(rels[k])) & set(tvars)), remaining[0])
        remaining.remove(pick)
        aut, vs = _atom_aut(rels[pick], alphabet)
        if len(set(vs)) != len(vs):
            raise SyncError(f"atom repeats a variable: {vs}")
        if cur is None:
            cur, tvars = aut, list(vs)
        else:
            shared = [v for v in vs if v in tvars]
            if len(shared) > 1:
                raise SyncError(f"atoms share more than one variable: {shared}")
            if shared:
                v = shared[0]
                cur = au.join(cur, tvars.index(v), aut, vs.index(v))
                tvars += [w for w in vs if w != v]
            else:
                cur = au.loose_product(cur, aut)
                tvars += list(vs)
        for k, x in enumerate(tvars):
            if x in per_var:
                cur = au.join(cur, k, per_var.pop(x), 0)
        cur = au.reduce_states(cur)
    for x, m in per_var.items():
        # only memberships left: variables not met by any relational atom
        if cur is None:
            cur, tvars = m, [x]
        else:
            cur = au.reduce_states(au.loose_product(cur, m))
            tvars.append(x)
    return SyncConstraint(au.trim(cur), tuple(tvars))


# -- Parikh image ---------------------------------------------------------------------------

@dataclass
class ParikhEncoding:
    aut: au.NTapeAutomaton
    trans: list                    # (src, label, dst) in variable order
    tvar: list                     # count variable per transition
    label_var: dict                # label -> Parikh variable #label
    init_sel: dict
    final_sel: dict
    dist: dict
    base: ar.LAnd
    connectivity: ar.LAnd

    @property
    def formula(self):
        return ar.conj(self.base, self.connectivity)


def parikh_formula(aut: au.NTapeAutomaton, prefix: str = "") -> ParikhEncoding:
    """Existential encoding of the label-count vectors of accepting runs of ``aut``."""
    trans = sorted(aut.trans, key=repr)
    tvar = [f"{prefix}t{i}" for i in range(len(trans))]
    labels = sorted({lab for _, lab, _ in trans}, key=repr)
    label_var = {lab: f"{prefix}p{i}" for i, lab in enumerate(labels)}
    states = sorted(aut.states)
    init_sel = {q: f"{prefix}s{q}" for q in sorted(aut.init)}
    final_sel = {q: f"{prefix}f{q}" for q in sorted(aut.final)}
    dist = {q: f"{prefix}z{q}" for q in states}
    if not init_sel or not final_sel:
        return ParikhEncoding(aut, trans, tvar, label_var, init_sel, final_sel, dist,
                              ar.conj(ar.FALSE), ar.TRUE)
    inc, out = defaultdict(list), defaultdict(list)
    for i, (s, _, d) in enumerate(trans):
        out[s].append(i)
        inc[d].append(i)
    base = [ar.ge(v, 0) for v in tvar]
    for sel in (init_sel, final_sel):
        base += [ar.ge(v, 0) for v in sel.values()] + [ar.le(v, 1) for v in sel.values()]
        base.append(ar.eq(ar.lsum(sel.values()), 1))
    for q in states:
        flow = ar.lsum(tvar[i] for i in inc[q]) - ar.lsum(tvar[i] for i in out[q])
        sel = ar.Lin()
        if q in final_sel:
            sel = sel + final_sel[q]
        if q in init_sel:
            sel = sel - init_sel[q]
        base.append(ar.eq(flow, sel))
    for lab, v in label_var.items():
        base.append(ar.eq(v, ar.lsum(tvar[i] for i, t in enumerate(trans) if t[1] == lab)))
    conn = []
    for q in states:
        z = dist[q]
        alts = [ar.conj(ar.eq(ar.lsum(tvar[i] for i in inc[q]), 0), ar.eq(z, 0),
                        *([ar.eq(init_sel[q], 0)] if q in init_sel else []))]
        if q in init_sel:
            alts.append(ar.conj(ar.eq(init_sel[q], 1), ar.eq(z, 1)))
        for i in inc[q]:
            p = trans[i][0]
            if p != q:
                alts.append(ar.conj(ar.ge(tvar[i], 1), ar.ge(dist[p], 1),
                                    ar.ge(z, ar.Lin.of(dist[p]) + 1)))
        conn.append(ar.ge(z, 0))
        conn.append(ar.LOr(tuple(alts)))
    return ParikhEncoding(aut, trans, tvar, label_var, init_sel, final_sel, dist,
                          ar.conj(*base), ar.conj(*conn))


def letter_var(prefix, tape, letter, letters):
    return f"{prefix}a{tape}_{letters.index(letter)}"


def length_link(sc: SyncConstraint, enc: ParikhEncoding, len_var, prefix: str = "",
                tapes=None) -> ar.LAnd:
    """|x_i| = sum_a #a_i and #a_i = sum of #alpha over labels with alpha[i] = a."""
    parts = []
    for i, x in enumerate(sc.tape_vars):
        if tapes is not None and i not in tapes:
            continue
        letters = sorted({lab[i] for lab in enc.label_var if lab[i] != EPS}, key=repr)
        counts = []
        for a in letters:
            v = letter_var(prefix, i, a, letters)
            counts.append(v)
            parts.append(ar.eq(v, ar.lsum(p for lab, p in enc.label_var.items() if lab[i] == a)))
        parts.append(ar.eq(len_var(x), ar.lsum(counts)))
    return ar.conj(*parts)


def support_connected(enc: ParikhEncoding, model) -> bool:
    """Do the used transitions form one walk from the selected initial state?"""
    start = next(q for q, v in enc.init_sel.items() if model[v] == 1)
    adj = defaultdict(list)
    used = set()
    for i, (s, _, d) in enumerate(enc.trans):
        if model[enc.tvar[i]] > 0:
            adj[s].append(d)
            used.update((s, d))
    seen = {start}
    todo = [start]
    while todo:
        q = todo.pop()
        for d in adj[q]:
            if d not in seen:
                seen.add(d)
                todo.append(d)
    return used <= seen


def euler_run(enc: ParikhEncoding, model) -> list:
    """Transitions of a run using each one exactly as often as the model says."""
    start = next(q for q, v in enc.init_sel.items() if model[v] == 1)
    adj = defaultdict(list)
    for i, t in enumerate(enc.trans):
        adj[t[0]].extend([t] * model[enc.tvar[i]])
    for q in adj:
        adj[q].reverse()
    stack = [(start, None)]
    path = []
    while stack:
        q, t = stack[-1]
        if adj[q]:
            nt = adj[q].pop()
            stack.append((nt[2], nt))
        else:
            stack.pop()
            if t is not None:
                path.append(t)
    path.reverse()
    total = sum(model[v] for v in enc.tvar)
    if len(path) != total:
        raise AssertionError("transition counts do not form a single run")
    return path


# -- deciding a clause ------------------------------------------------------------------------

@dataclass
class Verdict:
    status: str                  # "sat" | "unsat" | "unknown"
    model: dict | None = None
    message: str = ""
    lia: ar.LiaProblem | None = None
    stats: dict = field(default_factory=dict)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _len_var(x):
    return f"len_{x}"


def _merge_equalities(atoms):
    uf = _UnionFind()
    rest = []
    for a in atoms:
        if isinstance(a, Relational) and a.rel is None and len(a.lhs) == 1 and len(a.rhs) == 1:
            uf.union(a.lhs[0], a.rhs[0])
        else:
            rest.append(a)
    for a in atoms:
        for v in atom_vars(a):
            uf.find(v)
    rep = {v: uf.find(v) for v in uf.parent}
    sub = {v: (r,) for v, r in rep.items() if v != r}
    return [substitute(a, sub) for a in rest], rep


_MARK = "#"


@dataclass
class LengthAbstraction:
    """``aut`` with letters replaced by a marker on the tapes whose length matters,
    quotiented by bisimulation.  Runs of the quotient map back to runs of ``aut``."""
    aut: au.NTapeAutomaton
    quotient: au.NTapeAutomaton
    block: dict
    abstract: au.NTapeAutomaton
    concrete: dict

    def concretize(self, run) -> list:
        """Concrete labels of an ``aut`` run matching a quotient run."""
        if not run:
            return []
        b0 = run[0][0]
        cur = next(s for s in sorted(self.aut.init) if self.block[s] == b0)
        labels = []
        for _, lab, b in run:
            nxt = next(d for l2, d in sorted(self.abstract.out[cur], key=repr)
                       if l2 == lab and self.block[d] == b)
            labels.append(self.concrete[(cur, lab, nxt)])
            cur = nxt
        if cur not in self.aut.final:
            raise AssertionError("concretised run does not end in a final state")
        return labels


def length_abstraction(aut: au.NTapeAutomaton, tapes) -> LengthAbstraction:
    concrete = {}
    for s, lab, d in sorted(aut.trans, key=repr):
        key = (s, tuple(_MARK if i in tapes and c != EPS else EPS for i, c in enumerate(lab)), d)
        concrete.setdefault(key, lab)
    abstract = au.make(aut.tapes, sorted(aut.states), sorted(aut.init), sorted(aut.final),
                       list(concrete), length_preserving=False)
    quotient, block = au.bisim_quotient(abstract)
    return LengthAbstraction(aut, quotient, block, abstract, concrete)


def _word_component(sc: SyncConstraint):
    path = au.shortest_path(sc.aut)
    words = au.read_tapes(sc.aut.tapes, path)
    return dict(zip(sc.tape_vars, words))


def decide_clause(clause, alphabet, backend=None, want_model=True) -> Verdict:
    """Satisfiability of a chain- and concatenation-free clause."""
    backend = backend or ar.make_backend("internal")
    atoms, rep = _merge_equalities(list(clause))
    string_atoms, arith_atoms = [], []
    for a in atoms:
        if isinstance(a, ArithCmp):
            arith_atoms.append(a)
            continue
        if isinstance(a, Relational):
            if len(a.lhs) != 1 or len(a.rhs) != 1:
                raise SyncError("clause is not concatenation-free")
            if a.lhs == a.rhs:
                if a.rel is None:
                    continue
                if not a.rel.length_preserving:
                    raise SyncError("R(x, x) with a non-length-preserving R")
                a = Membership(a.lhs, au.diagonal(a.rel))
        elif len(a.term) != 1:
            raise SyncError("clause is not concatenation-free")
        string_atoms.append(a)

    # connected components of the string atoms
    uf = _UnionFind()
    for a in string_atoms:
        vs = atom_vars(a)
        for v in vs[1:]:
            uf.union(vs[0], v)
    groups = defaultdict(list)
    for a in string_atoms:
        groups[uf.find(atom_vars(a)[0])].append(a)
    arith_vars = {v for a in arith_atoms for v in atom_vars(a)}

    model = {}
    parts = []
    encodings = []
    for k, key in enumerate(sorted(groups, key=str)):
        sc = synchronize(groups[key], alphabet)
        if au.is_empty(sc.aut):
            return Verdict("unsat", message="string constraints have no solution")
        if not set(sc.tape_vars) & arith_vars:
            if want_model:
                model.update(_word_component(sc))
            continue
        prefix = f"c{k}_"
        tapes = {i for i, x in enumerate(sc.tape_vars) if x in arith_vars}
        abst = length_abstraction(sc.aut, tapes)
        enc = parikh_formula(abst.quotient, prefix)
        log.debug("component %s: %d states -> %d after abstraction", sc.tape_vars,
                  len(sc.aut.states), len(abst.quotient.states))
        encodings.append((sc, enc, abst))
        parts.append(enc.base)
        parts.append(length_link(sc, enc, _len_var, prefix, tapes))

    tape_vars = {v for sc, _, _ in encodings for v in sc.tape_vars}
    free = sorted(arith_vars - tape_vars - set(model))
    base_letters = [c for c in alphabet]
    for v in free:
        parts.append(ar.ge(_len_var(v), 0))
        if not base_letters:
            parts.append(ar.eq(_len_var(v), 0))
    for a in arith_atoms:
        parts.append(_translate(a))

    with_conn = set()
    while True:
        formula = ar.conj(*parts, *[enc.connectivity for i, (_, enc, _) in enumerate(encodings)
                                    if i in with_conn])
        lia = ar.LiaProblem(formula)
        res = backend(lia)
        if res.status != "sat":
            return Verdict(res.status, message=res.message, lia=lia, stats=res.stats)
        broken = [i for i, (_, enc, _) in enumerate(encodings)
                  if i not in with_conn and not support_connected(enc, res.model)]
        if not broken:
            break
        with_conn.update(broken)
    if want_model:
        for sc, enc, abst in encodings:
            labels = abst.concretize(euler_run(enc, res.model))
            model.update(zip(sc.tape_vars, au.read_tapes(sc.aut.tapes, labels)))
        filler = base_letters[0] if base_letters else None
        for v in free:
            n = res.model[_len_var(v)]
            model[v] = (filler,) * n if n else ()
        for v, r in rep.items():
            if v != r and r in model:
                model[v] = model[r]
        for v in rep:
            model.setdefault(v, ())
    return Verdict("sat", model, lia=lia, stats=res.stats)


def _translate(a: ArithCmp):
    def lin(t):
        return ar.Lin.build([(_len_var(v), k) for v, k in t.coeffs], t.const)
    l, r = lin(a.lhs), lin(a.rhs)
    if a.op == "<=":
        return ar.le(l, r)
    if a.op == "<":
        return ar.lt(l, r)
    return ar.eq(l, r)
