"""Splitting graphs of clauses, chain detection and fragment classification."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from .formula import Problem, Relational, iter_dnf, to_left_sided


class Position(NamedTuple):
    con: int      # index among the clause's relational atoms
    side: str     # "L" or "R"
    slot: int     # 0-based offset in that side's term

    def __str__(self):
        return f"({self.con + 1},{self.side},{self.slot + 1})"


def opposite(side):
    return "R" if side == "L" else "L"


@dataclass
class SplittingGraph:
    constraints: tuple
    positions: tuple
    var: dict
    edges: frozenset
    succ: dict = field(repr=False)

    def con(self, edge):
        return self.constraints[edge[0].con]


def relational_atoms(clause) -> tuple:
    return tuple(a for a in clause if isinstance(a, Relational))


def build_graph(clause) -> SplittingGraph:
    """Edge (p, p') iff some p'' on the side opposite p has var(p'') = var(p') and p'' != p'."""
    cons = relational_atoms(clause)
    positions = []
    var = {}
    for j, a in enumerate(cons):
        for side in "LR":
            for i, v in enumerate(a.side(side)):
                p = Position(j, side, i)
                positions.append(p)
                var[p] = v
    occ = {}
    for p in positions:
        occ.setdefault(var[p], []).append(p)
    edges = set()
    for p in positions:
        opp = cons[p.con].side(opposite(p.side))
        for k, v in enumerate(opp):
            pp = Position(p.con, opposite(p.side), k)
            for target in occ[v]:
                if target != pp:
                    edges.add((p, target))
    succ = {p: [] for p in positions}
    for p, q in sorted(edges):
        succ[p].append(q)
    return SplittingGraph(cons, tuple(positions), var, frozenset(edges), succ)


def root_positions(g: SplittingGraph) -> set:
    has_in = {q for _, q in g.edges}
    return {p for p in g.positions if p not in has_in}


def sccs(g: SplittingGraph) -> list:
    """Tarjan's algorithm (iterative); each SCC is a sorted tuple of positions."""
    index, low, on_stack = {}, {}, set()
    stack, out = [], []
    counter = 0
    for root in g.positions:
        if root in index:
            continue
        work = [(root, iter(g.succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(g.succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(tuple(sorted(comp)))
    return out


@dataclass(frozen=True)
class ChainWitness:
    cycle: tuple          # positions p0..pn; edges are (p_k, p_{k+1}) and (pn, p0)
    component: tuple      # the strongly connected component containing the cycle
    benign: bool
    reason: str = ""

    def edges(self):
        c = self.cycle
        return tuple((c[k], c[(k + 1) % len(c)]) for k in range(len(c)))

    def constraints(self) -> set:
        return {p.con for p in self.component}

    def __str__(self):
        kind = "benign" if self.benign else f"non-benign ({self.reason})"
        return kind + " chain " + " -> ".join(str(p) for p in self.cycle + self.cycle[:1])


def _has_cycle(g, comp):
    return len(comp) > 1 or (comp[0], comp[0]) in g.edges


def _path(g, src, dst, allowed):
    """Shortest non-empty path src ->+ dst inside ``allowed``, as a position list without dst."""
    prev = {}
    todo = deque()
    for w in g.succ[src]:
        if w in allowed and w not in prev:
            prev[w] = src
            todo.append(w)
    while todo:
        v = todo.popleft()
        if v == dst:
            break
        for w in g.succ[v]:
            if w in allowed and w not in prev:
                prev[w] = v
                todo.append(w)
    if dst not in prev:
        return None
    path = []
    cur = dst
    while True:
        cur = prev[cur]
        path.append(cur)
        if cur == src:
            break
    path.reverse()
    return path


def _closed_walk(g, comp, through):
    """A closed walk from comp[0] visiting ``through`` (all inside comp)."""
    allowed = set(comp)
    start = comp[0]
    if through == start:
        return tuple(_path(g, start, start, allowed))
    there = _path(g, start, through, allowed)
    back = _path(g, through, start, allowed)
    return tuple(there + back)


def component_status(g: SplittingGraph, comp) -> tuple:
    """(benign, reason, offending position) for a cyclic SCC."""
    sides = {p.side for p in comp}
    for p in comp:
        a = g.constraints[p.con]
        if len(a.lhs) != 1:
            return False, "constraint not left-sided", p
        if not a.length_preserving:
            return False, "relation not length-preserving", p
    if len(sides) > 1:
        other = next(p for p in comp if p.side != comp[0].side)
        return False, "mixes left and right positions", other
    return True, "", comp[0]


def find_chains(g: SplittingGraph) -> list:
    """One witness per strongly connected component that contains a cycle."""
    out = []
    for comp in sorted(sccs(g)):
        if not _has_cycle(g, comp):
            continue
        benign, reason, where = component_status(g, comp)
        cycle = _closed_walk(g, comp, where)
        out.append(ChainWitness(cycle, comp, benign, reason))
    return out


def classify_chain(w: ChainWitness, clause) -> bool:
    """Benignity of a single chain, checked edge by edge."""
    g = build_graph(clause)
    for e in w.edges():
        if e not in g.edges:
            raise ValueError(f"{e} is not an edge of the clause's splitting graph")
    for p, _ in w.edges():
        a = g.constraints[p.con]
        if len(a.lhs) != 1 or not a.length_preserving:
            return False
    return len({p.side for p in w.cycle}) == 1


class FragmentClass(enum.Enum):
    CHAIN_FREE = "chain-free"
    WEAKLY_CHAINING = "weakly-chaining"
    CHAINING = "chaining"


@dataclass
class Classification:
    kind: FragmentClass
    witnesses: list

    @property
    def bad_witness(self):
        return next((w for w in self.witnesses if not w.benign), None)


def classify_clause(clause) -> Classification:
    chains = find_chains(build_graph(clause))
    if not chains:
        return Classification(FragmentClass.CHAIN_FREE, [])
    if all(w.benign for w in chains):
        return Classification(FragmentClass.WEAKLY_CHAINING, chains)
    return Classification(FragmentClass.CHAINING, chains)


def classify(f, alphabet=()) -> FragmentClass:
    """Worst class over the left-sided clauses of the DNF."""
    reserved = f.variables if isinstance(f, Problem) else ()
    order = list(FragmentClass)
    worst = FragmentClass.CHAIN_FREE
    for clause in iter_dnf(f, alphabet):
        k = classify_clause(to_left_sided(clause, reserved)).kind
        if order.index(k) > order.index(worst):
            worst = k
            if k is FragmentClass.CHAINING:
                break
    return worst


def is_chain_free(clause) -> bool:
    return classify_clause(clause).kind is FragmentClass.CHAIN_FREE


def benign_constraint_count(clause) -> int:
    """B: number of relational constraints owning positions of benign chains."""
    owners = set()
    for w in find_chains(build_graph(clause)):
        if w.benign:
            owners |= w.constraints()
    return len(owners)
