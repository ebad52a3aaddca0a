"""n-tape nondeterministic automata over (Sigma + eps)^n and their closure operations.

States are small integers after every construction.  Labels are tuples with one
component per tape; ``EPS`` marks an empty component.  Letters are any hashable,
orderable-by-repr values: plain strings for base letters, tuples of strings for
the tuple letters introduced when benign chains are eliminated.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Sequence

EPS = ""

Letter = Hashable
Label = tuple
Word = tuple


class AutomatonError(ValueError):
    pass


def _sort_key(x):
    return repr(x)


@dataclass(frozen=True)
class NTapeAutomaton:
    tapes: int
    states: frozenset
    init: frozenset
    final: frozenset
    trans: frozenset
    length_preserving: bool = False
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.tapes < 1:
            raise AutomatonError("an automaton needs at least one tape")
        if not (self.init <= self.states and self.final <= self.states):
            raise AutomatonError("initial/final states must be states")
        for src, label, dst in self.trans:
            if src not in self.states or dst not in self.states:
                raise AutomatonError(f"transition {src}->{dst} leaves the state set")
            if len(label) != self.tapes:
                raise AutomatonError(f"label {label!r} has wrong arity (expected {self.tapes})")
            if self.length_preserving and EPS in label:
                raise AutomatonError("length-preserving automaton with an epsilon component")

    @cached_property
    def out(self) -> dict:
        res = {q: [] for q in self.states}
        for src, label, dst in sorted(self.trans, key=_sort_key):
            res[src].append((label, dst))
        return res

    @cached_property
    def labels(self) -> frozenset:
        return frozenset(label for _, label, _ in self.trans)

    def letters(self, tape: int | None = None) -> set:
        tapes = range(self.tapes) if tape is None else [tape]
        return {lab[i] for lab in self.labels for i in tapes if lab[i] != EPS}

    def with_name(self, name):
        return NTapeAutomaton(self.tapes, self.states, self.init, self.final,
                              self.trans, self.length_preserving, name)

    def __repr__(self):
        nm = f" {self.name}" if self.name else ""
        return (f"<NTapeAutomaton{nm} tapes={self.tapes} states={len(self.states)} "
                f"trans={len(self.trans)} lp={self.length_preserving}>")


def make(tapes, states, init, final, trans, length_preserving=None, name=None) -> NTapeAutomaton:
    """Build an automaton, renumbering states to 0..n-1 in first-seen order.

    ``length_preserving=None`` infers the flag from the labels.
    """
    order = {}
    for q in itertools.chain(states, init, final, (s for s, _, _ in trans), (d for _, _, d in trans)):
        if q not in order:
            order[q] = len(order)
    tr = frozenset((order[s], tuple(lab), order[d]) for s, lab, d in trans)
    if length_preserving is None:
        length_preserving = all(EPS not in lab for _, lab, _ in tr)
    return NTapeAutomaton(tapes, frozenset(order.values()), frozenset(order[q] for q in init),
                          frozenset(order[q] for q in final), tr, bool(length_preserving), name)


def _as_word(w) -> Word:
    return tuple(w)


# -- basic constructions ---------------------------------------------------

def empty(tapes=1) -> NTapeAutomaton:
    return make(tapes, [0], [0], [], [], length_preserving=True)


def epsilon_relation(tapes=1) -> NTapeAutomaton:
    return make(tapes, [0], [0], [0], [], length_preserving=True)


def word_automaton(word) -> NTapeAutomaton:
    """1-tape automaton for the single word ``word``."""
    word = _as_word(word)
    trans = [(i, (a,), i + 1) for i, a in enumerate(word)]
    return make(1, range(len(word) + 1), [0], [len(word)], trans, length_preserving=True)


def universal(alphabet, tapes=1) -> NTapeAutomaton:
    """All tuples of words over ``alphabet`` (not length-preserving for tapes > 1)."""
    trans = []
    for i in range(tapes):
        for a in alphabet:
            lab = [EPS] * tapes
            lab[i] = a
            trans.append((0, tuple(lab), 0))
    return make(tapes, [0], [0], [0], trans, length_preserving=(tapes == 1))


def sigma_star(alphabet) -> NTapeAutomaton:
    return universal(alphabet, 1)


def identity(alphabet) -> NTapeAutomaton:
    return make(2, [0], [0], [0], [(0, (a, a), 0) for a in alphabet], length_preserving=True,
                name="Id")


def difference(alphabet) -> NTapeAutomaton:
    """Equal-length word pairs that differ in at least one aligned position."""
    trans = [(0, (a, a), 0) for a in alphabet]
    trans += [(0, (a, b), 1) for a in alphabet for b in alphabet if a != b]
    trans += [(1, (a, b), 1) for a in alphabet for b in alphabet]
    return make(2, [0, 1], [0], [1], trans, length_preserving=True, name="Diff")


def projection(j: int, letters: Iterable[tuple]) -> NTapeAutomaton:
    """Length-preserving transducer relating w_j to the tuple word (w_1..w_k).

    ``letters`` are tuple letters; ``j`` is 0-based.
    """
    trans = [(0, (t[j], t), 0) for t in letters]
    return make(2, [0], [0], [0], trans, length_preserving=True, name=f"pi{j + 1}")


# -- queries -----------------------------------------------------------------

def accepts(a: NTapeAutomaton, words) -> bool:
    if len(words) != a.tapes:
        raise AutomatonError(f"expected {a.tapes} words, got {len(words)}")
    words = tuple(_as_word(w) for w in words)
    return _accepts(a, words)


def _accepts(a, words) -> bool:
    n = a.tapes
    ends = tuple(len(w) for w in words)
    start = [(q, (0,) * n) for q in a.init]
    seen = set(start)
    todo = deque(start)
    while todo:
        q, pos = todo.popleft()
        if pos == ends and q in a.final:
            return True
        for label, dst in a.out[q]:
            npos = list(pos)
            ok = True
            for i in range(n):
                c = label[i]
                if c == EPS:
                    continue
                if pos[i] >= ends[i] or words[i][pos[i]] != c:
                    ok = False
                    break
                npos[i] += 1
            if ok:
                cfg = (dst, tuple(npos))
                if cfg not in seen:
                    seen.add(cfg)
                    todo.append(cfg)
    return False


def reachable(a: NTapeAutomaton, sources=None, backwards=False) -> set:
    if sources is None:
        sources = a.final if backwards else a.init
    adj = {}
    for s, _, d in a.trans:
        if backwards:
            s, d = d, s
        adj.setdefault(s, []).append(d)
    seen = set(sources)
    todo = list(sources)
    while todo:
        q = todo.pop()
        for d in adj.get(q, ()):
            if d not in seen:
                seen.add(d)
                todo.append(d)
    return seen


def is_empty(a: NTapeAutomaton) -> bool:
    return not (reachable(a) & a.final)


def trim(a: NTapeAutomaton) -> NTapeAutomaton:
    """Drop states that are unreachable or cannot reach a final state."""
    useful = reachable(a) & reachable(a, backwards=True)
    if not useful:
        return empty(a.tapes).with_name(a.name)
    keep = sorted(useful)
    trans = sorted(((s, l, d) for s, l, d in a.trans if s in useful and d in useful), key=_sort_key)
    return make(a.tapes, keep, sorted(a.init & useful), sorted(a.final & useful), trans,
                length_preserving=a.length_preserving, name=a.name)


def enumerate_tuples(a: NTapeAutomaton, max_len: int) -> set:
    """All accepted tuples whose components have length <= max_len."""
    n = a.tapes
    start = [(q, ((),) * n) for q in a.init]
    seen = set(start)
    todo = deque(start)
    found = set()
    while todo:
        q, ws = todo.popleft()
        if q in a.final:
            found.add(ws)
        for label, dst in a.out[q]:
            nws = list(ws)
            ok = True
            for i, c in enumerate(label):
                if c != EPS:
                    if len(ws[i]) >= max_len:
                        ok = False
                        break
                    nws[i] = ws[i] + (c,)
            if ok:
                cfg = (dst, tuple(nws))
                if cfg not in seen:
                    seen.add(cfg)
                    todo.append(cfg)
    return found


def enumerate_words(a: NTapeAutomaton, max_len: int) -> set:
    """Words of a 1-tape automaton up to ``max_len`` letters."""
    if a.tapes != 1:
        raise AutomatonError("enumerate_words needs a 1-tape automaton")
    return {ws[0] for ws in enumerate_tuples(a, max_len)}


def shortest_path(a: NTapeAutomaton):
    """Label sequence of some shortest accepting run, or None when empty."""
    prev = {q: None for q in a.init}
    todo = deque(sorted(a.init))
    while todo:
        q = todo.popleft()
        if q in a.final:
            path = []
            while prev[q] is not None:
                src, label = prev[q]
                path.append(label)
                q = src
            return path[::-1]
        for label, dst in a.out[q]:
            if dst not in prev:
                prev[dst] = (q, label)
                todo.append(dst)
    return None


def read_tapes(tapes: int, labels: Iterable[tuple]) -> tuple:
    out = [[] for _ in range(tapes)]
    for lab in labels:
        for i, c in enumerate(lab):
            if c != EPS:
                out[i].append(c)
    return tuple(tuple(w) for w in out)


# -- closure operations ------------------------------------------------------

def _check_same_arity(a, b):
    if a.tapes != b.tapes:
        raise AutomatonError(f"arity mismatch: {a.tapes} vs {b.tapes}")


def intersect_lp(a: NTapeAutomaton, b: NTapeAutomaton) -> NTapeAutomaton:
    """Synchronous product of two length-preserving automata."""
    _check_same_arity(a, b)
    if not (a.length_preserving and b.length_preserving):
        raise AutomatonError("intersect_lp needs length-preserving operands")
    start = [(p, q) for p in sorted(a.init) for q in sorted(b.init)]
    seen = set(start)
    todo = list(start)
    trans = []
    while todo:
        p, q = todo.pop()
        for lab, p2 in a.out[p]:
            for lab2, q2 in b.out[q]:
                if lab == lab2:
                    trans.append(((p, q), lab, (p2, q2)))
                    if (p2, q2) not in seen:
                        seen.add((p2, q2))
                        todo.append((p2, q2))
    final = [s for s in seen if s[0] in a.final and s[1] in b.final]
    return trim(make(a.tapes, start + sorted(seen - set(start)), start, final, trans,
                     length_preserving=True))


def _determinize(a: NTapeAutomaton, letters: Sequence):
    """Subset construction over the given letter alphabet (labels are letters).

    Epsilon moves are only recognised for 1-tape automata.
    """
    eps_adj = {}
    if a.tapes == 1:
        for s, lab, d in a.trans:
            if lab == (EPS,):
                eps_adj.setdefault(s, set()).add(d)

    def closure(qs):
        seen = set(qs)
        todo = list(qs)
        while todo:
            q = todo.pop()
            for d in eps_adj.get(q, ()):
                if d not in seen:
                    seen.add(d)
                    todo.append(d)
        return frozenset(seen)

    start = closure(a.init)
    seen = {start: 0}
    todo = [start]
    trans = []
    while todo:
        cur = todo.pop()
        for c in letters:
            nxt = set()
            for q in cur:
                for lab, d in a.out[q]:
                    if lab == c:
                        nxt.add(d)
            nxt = closure(nxt)
            if nxt not in seen:
                seen[nxt] = len(seen)
                todo.append(nxt)
            trans.append((seen[cur], c, seen[nxt]))
    return seen, trans


def complement_letters(a: NTapeAutomaton, letters: Sequence) -> NTapeAutomaton:
    """Complement w.r.t. letters*, treating each label as one letter."""
    letters = sorted(set(letters), key=_sort_key)
    subsets, trans = _determinize(a, letters)
    final = [i for s, i in subsets.items() if not (s & a.final)]
    return trim(make(a.tapes, sorted(subsets.values()), [0], final, trans,
                     length_preserving=a.length_preserving or a.tapes == 1))


def complement1(a: NTapeAutomaton, alphabet) -> NTapeAutomaton:
    if a.tapes != 1:
        raise AutomatonError("complement1 needs a 1-tape automaton")
    res = complement_letters(a, [(c,) for c in alphabet])
    return res


def complement_lp(a: NTapeAutomaton, alphabet) -> NTapeAutomaton:
    """Equal-length tuples over ``alphabet`` that ``a`` rejects (a must be length-preserving)."""
    if not a.length_preserving:
        raise AutomatonError("only length-preserving automata can be complemented")
    letters = list(itertools.product(sorted(alphabet, key=_sort_key), repeat=a.tapes))
    return complement_letters(a, letters)


def join(a: NTapeAutomaton, i: int, b: NTapeAutomaton, j: int) -> NTapeAutomaton:
    """Product synchronised on tape ``i`` of ``a`` and tape ``j`` of ``b`` (both 0-based).

    Result tapes: a's tapes, then b's tapes without ``j``.
    """
    if not (0 <= i < a.tapes and 0 <= j < b.tapes):
        raise AutomatonError("tape index out of range")
    n, m = a.tapes, b.tapes
    pad_a = (EPS,) * (m - 1)
    pad_b = (EPS,) * n

    def drop_j(lab):
        return lab[:j] + lab[j + 1:]

    start = [(p, q) for p in sorted(a.init) for q in sorted(b.init)]
    seen = set(start)
    todo = list(start)
    trans = []

    def push(src, lab, dst):
        trans.append((src, lab, dst))
        if dst not in seen:
            seen.add(dst)
            todo.append(dst)

    while todo:
        p, q = todo.pop()
        for lab, p2 in a.out[p]:
            if lab[i] == EPS:
                push((p, q), lab + pad_a, (p2, q))
        for lab, q2 in b.out[q]:
            if lab[j] == EPS:
                push((p, q), pad_b + drop_j(lab), (p, q2))
        for lab, p2 in a.out[p]:
            if lab[i] == EPS:
                continue
            for lab2, q2 in b.out[q]:
                if lab2[j] == lab[i]:
                    push((p, q), lab + drop_j(lab2), (p2, q2))
    final = [s for s in seen if s[0] in a.final and s[1] in b.final]
    lp = a.length_preserving and b.length_preserving
    return trim(make(n + m - 1, start + sorted(seen - set(start)), start, final, trans,
                     length_preserving=lp))


def loose_product(a: NTapeAutomaton, b: NTapeAutomaton) -> NTapeAutomaton:
    """Rel(a) x Rel(b): run ``a`` to completion, then ``b``, on disjoint tapes."""
    n, m = a.tapes, b.tapes
    trans = [(("a", s), lab + (EPS,) * m, ("a", d)) for s, lab, d in a.trans]
    trans += [(("b", s), (EPS,) * n + lab, ("b", d)) for s, lab, d in b.trans]
    trans += [(("a", f), (EPS,) * (n + m), ("b", i)) for f in a.final for i in b.init]
    states = [("a", q) for q in sorted(a.states)] + [("b", q) for q in sorted(b.states)]
    return trim(make(n + m, states, [("a", q) for q in sorted(a.init)],
                     [("b", q) for q in sorted(b.final)], sorted(trans, key=_sort_key),
                     length_preserving=False))


def permute(a: NTapeAutomaton, sigma: Sequence[int]) -> NTapeAutomaton:
    """New tape k carries old tape sigma[k] (0-based)."""
    if sorted(sigma) != list(range(a.tapes)):
        raise AutomatonError(f"{sigma!r} is not a permutation of {a.tapes} tapes")
    trans = [(s, tuple(lab[sigma[k]] for k in range(a.tapes)), d) for s, lab, d in a.trans]
    return NTapeAutomaton(a.tapes, a.states, a.init, a.final, frozenset(trans),
                          a.length_preserving, a.name)


def cylindrify(a: NTapeAutomaton, k: int, alphabet, length_preserving: bool = False) -> NTapeAutomaton:
    """Extend to ``k`` tapes; the new tapes are unconstrained.

    With ``length_preserving`` the new tapes only move in lock-step with the old
    ones (each label is extended by letters of ``alphabet``), so all components
    keep equal length.  Otherwise new tapes range over all words independently.
    """
    if k < a.tapes:
        raise AutomatonError("cannot cylindrify to fewer tapes")
    extra = k - a.tapes
    if extra == 0:
        return a
    alphabet = sorted(alphabet, key=_sort_key)
    if length_preserving:
        if not a.length_preserving:
            raise AutomatonError("length-preserving cylindrification of a non-length-preserving automaton")
        trans = [(s, lab + ext, d) for s, lab, d in a.trans
                 for ext in itertools.product(alphabet, repeat=extra)]
        return make(k, sorted(a.states), sorted(a.init), sorted(a.final), trans,
                    length_preserving=True)
    trans = [(s, lab + (EPS,) * extra, d) for s, lab, d in a.trans]
    loops = [ext for ext in itertools.product([EPS] + alphabet, repeat=extra) if any(ext)]
    trans += [(q, (EPS,) * a.tapes + ext, q) for q in a.states for ext in loops]
    return make(k, sorted(a.states), sorted(a.init), sorted(a.final), trans,
                length_preserving=False)


def concat_rel(a: NTapeAutomaton, b: NTapeAutomaton) -> NTapeAutomaton:
    """Componentwise concatenation Rel(a).Rel(b), built without epsilon glue."""
    _check_same_arity(a, b)
    trans = [(("a", s), lab, ("a", d)) for s, lab, d in a.trans]
    trans += [(("b", s), lab, ("b", d)) for s, lab, d in b.trans]
    trans += [(("a", f), lab, ("b", d)) for f in a.final
              for i in b.init for lab, d in b.out[i]]
    init = [("a", q) for q in a.init]
    if a.init & a.final:
        init += [("b", q) for q in b.init]
    final = [("b", q) for q in b.final]
    if b.init & b.final:
        final += [("a", q) for q in a.final]
    states = [("a", q) for q in sorted(a.states)] + [("b", q) for q in sorted(b.states)]
    return trim(make(a.tapes, states, sorted(init), sorted(final), sorted(trans, key=_sort_key),
                     length_preserving=a.length_preserving and b.length_preserving))


def split_at_states(a: NTapeAutomaton) -> list:
    """For each state q: (q, a with final := {q}, a with init := {q})."""
    res = []
    for q in sorted(a.states):
        prefix = NTapeAutomaton(a.tapes, a.states, a.init, frozenset([q]), a.trans,
                                a.length_preserving, a.name)
        suffix = NTapeAutomaton(a.tapes, a.states, frozenset([q]), a.final, a.trans,
                                a.length_preserving, a.name)
        res.append((q, prefix, suffix))
    return res


def diagonal(a: NTapeAutomaton) -> NTapeAutomaton:
    """1-tape automaton for {w | (w, w) in Rel(a)}; ``a`` must be a length-preserving transducer."""
    if a.tapes != 2 or not a.length_preserving:
        raise AutomatonError("diagonal needs a length-preserving transducer")
    trans = [(s, (lab[0],), d) for s, lab, d in a.trans if lab[0] == lab[1]]
    return trim(make(1, sorted(a.states), sorted(a.init), sorted(a.final), trans,
                     length_preserving=True))


def project_side(a: NTapeAutomaton, keep: int) -> NTapeAutomaton:
    """1-tape automaton for {w | (..w at tape keep..) in Rel(a), other tapes empty}."""
    trans = []
    for s, lab, d in a.trans:
        if all(c == EPS for i, c in enumerate(lab) if i != keep):
            trans.append((s, (lab[keep],), d))
    return trim(make(1, sorted(a.states), sorted(a.init), sorted(a.final), trans,
                     length_preserving=None))


def accepts_epsilon(a: NTapeAutomaton) -> bool:
    return accepts(a, ((),) * a.tapes)


def tuple_letter_automaton(a: NTapeAutomaton) -> NTapeAutomaton:
    """Read a length-preserving k-tape automaton as a 1-tape automaton over tuple letters."""
    if not a.length_preserving:
        raise AutomatonError("tuple letters need a length-preserving automaton")
    trans = [(s, (tuple(lab),), d) for s, lab, d in a.trans]
    return make(1, sorted(a.states), sorted(a.init), sorted(a.final), trans,
                length_preserving=True)


# -- reduction ---------------------------------------------------------------

def bisim_blocks(a: NTapeAutomaton) -> dict:
    """Coarsest forward bisimulation respecting finality: state -> block id."""
    block = {q: int(q in a.final) for q in a.states}
    n_blocks = len(set(block.values()))
    while True:
        sigs = {}
        new = {}
        for q in sorted(a.states):
            sig = (block[q], frozenset((lab, block[d]) for lab, d in a.out[q]))
            new[q] = sigs.setdefault(sig, len(sigs))
        if len(sigs) == n_blocks:
            return new
        block, n_blocks = new, len(sigs)


def bisim_quotient(a: NTapeAutomaton):
    """Quotient by bisimulation (same relation); also returns the state -> block map."""
    block = bisim_blocks(a)
    trans = {(block[s], lab, block[d]) for s, lab, d in a.trans}
    q = make(a.tapes, sorted(set(block.values())), sorted({block[s] for s in a.init}),
             sorted({block[s] for s in a.final}), sorted(trans, key=_sort_key),
             length_preserving=a.length_preserving, name=a.name)
    return q, block      # block ids are 0..n-1, so make() keeps them


def reduce_states(a: NTapeAutomaton) -> NTapeAutomaton:
    return trim(bisim_quotient(trim(a))[0])


def minimize1(a: NTapeAutomaton) -> NTapeAutomaton:
    """Minimal (trimmed) deterministic automaton of a 1-tape language."""
    if a.tapes != 1:
        raise AutomatonError("minimize1 needs a 1-tape automaton")
    letters = sorted({lab for lab in a.labels if lab != (EPS,)}, key=_sort_key)
    subsets, trans = _determinize(a, letters)
    final = [i for s, i in subsets.items() if s & a.final]
    d = trim(make(1, sorted(subsets.values()), [0], final, trans, length_preserving=True))
    return reduce_states(d)
