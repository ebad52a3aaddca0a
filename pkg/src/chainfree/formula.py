"""String formulas: AST, parser/printer for the input format, normal forms and evaluation.

String terms are tuples of variable names (``()`` is the empty word).  Words are
tuples of letters.  Equality is a relational atom whose ``rel`` is ``None``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from . import automata as au
from .automata import EPS, NTapeAutomaton
from .sexp import SexpError, SList, Str, Sym, parse_all, position


class FormulaError(ValueError):
    pass


class ParseError(FormulaError):
    def __init__(self, msg, node=None):
        line, col = position(node) if node is not None else (None, None)
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + msg)


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Membership:
    term: tuple
    aut: NTapeAutomaton

    def __post_init__(self):
        if self.aut.tapes != 1:
            raise FormulaError("membership needs a 1-tape automaton")


@dataclass(frozen=True)
class Relational:
    lhs: tuple
    rhs: tuple
    rel: NTapeAutomaton | None = None

    def __post_init__(self):
        if self.rel is not None and self.rel.tapes != 2:
            raise FormulaError("relational atom needs a 2-tape automaton")

    @property
    def is_equality(self) -> bool:
        return self.rel is None

    @property
    def length_preserving(self) -> bool:
        return self.rel is None or self.rel.length_preserving

    def side(self, s: str) -> tuple:
        return self.lhs if s == "L" else self.rhs


@dataclass(frozen=True)
class ArithTerm:
    """c + sum(k * |x|); ``coeffs`` is a sorted tuple of (var, k) with k != 0."""
    const: int = 0
    coeffs: tuple = ()

    @staticmethod
    def build(const=0, coeffs: Mapping | Iterable = ()) -> "ArithTerm":
        acc = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for v, k in items:
            acc[v] = acc.get(v, 0) + k
        return ArithTerm(const, tuple(sorted((v, k) for v, k in acc.items() if k)))

    @staticmethod
    def length(term: Iterable) -> "ArithTerm":
        return ArithTerm.build(0, [(v, 1) for v in term])

    def __add__(self, other):
        return ArithTerm.build(self.const + other.const, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, k: int):
        return ArithTerm.build(self.const * k, [(v, c * k) for v, c in self.coeffs])

    def value(self, lengths: Mapping) -> int:
        return self.const + sum(k * lengths[v] for v, k in self.coeffs)

    @property
    def vars(self):
        return tuple(v for v, _ in self.coeffs)


ARITH_OPS = ("<=", "<", "=")


@dataclass(frozen=True)
class ArithCmp:
    lhs: ArithTerm
    op: str
    rhs: ArithTerm

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise FormulaError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


TRUE = And(())

Atom = (Membership, Relational, ArithCmp)


def is_atom(x) -> bool:
    return isinstance(x, Atom)


@dataclass(frozen=True)
class Problem:
    """A parsed input: declarations plus the asserted formula."""
    alphabet: tuple
    variables: tuple
    automata: tuple = ()
    body: object = TRUE
    var_alphabets: tuple = field(default=(), compare=False)

    def automaton(self, name):
        for n, a in self.automata:
            if n == name:
                return a
        raise KeyError(name)


# -- small helpers -------------------------------------------------------------

def atom_vars(a) -> tuple:
    if isinstance(a, Membership):
        return a.term
    if isinstance(a, Relational):
        return a.lhs + a.rhs
    return a.lhs.vars + a.rhs.vars


def formula_vars(f) -> list:
    """Free variables in first-occurrence order."""
    seen = {}
    for a in atoms_of(f):
        for v in atom_vars(a):
            seen.setdefault(v, None)
    return list(seen)


def atoms_of(f) -> Iterator:
    if isinstance(f, Problem):
        f = f.body
    if is_atom(f):
        yield f
    elif isinstance(f, (And, Or)):
        for g in f.args:
            yield from atoms_of(g)
    elif isinstance(f, Not):
        yield from atoms_of(f.arg)
    elif isinstance(f, (tuple, list, frozenset, set)):
        for g in f:
            yield from atoms_of(g)
    else:
        raise FormulaError(f"not a formula: {f!r}")


def subst_term(term: tuple, sub: Mapping) -> tuple:
    out = []
    for v in term:
        out.extend(sub.get(v, (v,)))
    return tuple(out)


def subst_arith(t: ArithTerm, sub: Mapping) -> ArithTerm:
    return ArithTerm.build(t.const, [(w, k) for v, k in t.coeffs for w in sub.get(v, (v,))])


def substitute(a, sub: Mapping):
    """Apply a variable-to-term substitution to one atom."""
    if isinstance(a, Membership):
        return Membership(subst_term(a.term, sub), a.aut)
    if isinstance(a, Relational):
        return Relational(subst_term(a.lhs, sub), subst_term(a.rhs, sub), a.rel)
    return ArithCmp(subst_arith(a.lhs, sub), a.op, subst_arith(a.rhs, sub))


def dedup(atoms: Iterable) -> tuple:
    return tuple(dict.fromkeys(atoms))


def length_lt(t, u) -> ArithCmp:
    return ArithCmp(ArithTerm.length(t), "<", ArithTerm.length(u))


def length_zero(t) -> ArithCmp:
    return ArithCmp(ArithTerm.length(t), "=", ArithTerm())


def as_word(w) -> tuple:
    return tuple(w)


def show_word(w) -> str:
    return '"' + "".join(str(c) for c in w) + '"'


# -- evaluation ------------------------------------------------------------------

def eval_atom(a, eta: Mapping) -> bool:
    try:
        if isinstance(a, Membership):
            return au.accepts(a.aut, (_concat(a.term, eta),))
        if isinstance(a, Relational):
            left, right = _concat(a.lhs, eta), _concat(a.rhs, eta)
            if a.rel is None:
                return left == right
            return au.accepts(a.rel, (left, right))
        lengths = {v: len(as_word(eta[v])) for v in a.lhs.vars + a.rhs.vars}
    except KeyError as e:
        raise FormulaError(f"interpretation misses variable {e.args[0]!r}") from None
    lv, rv = a.lhs.value(lengths), a.rhs.value(lengths)
    if a.op == "<=":
        return lv <= rv
    if a.op == "<":
        return lv < rv
    return lv == rv


def _concat(term, eta):
    return tuple(itertools.chain.from_iterable(as_word(eta[v]) for v in term))


def evaluate(f, eta: Mapping) -> bool:
    """Truth value of a formula, problem or clause (iterable of atoms) under ``eta``."""
    if isinstance(f, Problem):
        f = f.body
    if is_atom(f):
        return eval_atom(f, eta)
    if isinstance(f, And):
        return all(evaluate(g, eta) for g in f.args)
    if isinstance(f, Or):
        return any(evaluate(g, eta) for g in f.args)
    if isinstance(f, Not):
        return not evaluate(f.arg, eta)
    if isinstance(f, (tuple, list, frozenset, set)):
        return all(evaluate(g, eta) for g in f)
    raise FormulaError(f"not a formula: {f!r}")


# -- normal forms ----------------------------------------------------------------

class _Negator:
    def __init__(self, alphabet):
        self.alphabet = tuple(alphabet)
        self._cache = {}

    def _memo(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def negate_atom(self, a):
        if isinstance(a, Membership):
            comp = self._memo(("c1", a.aut), lambda: au.complement1(a.aut, self.alphabet))
            return Membership(a.term, comp)
        if isinstance(a, Relational):
            if not a.length_preserving:
                raise FormulaError("negated non-invertible constraint")
            if a.rel is None:
                other = self._memo("diff", lambda: au.difference(self.alphabet))
            else:
                other = self._memo(("clp", a.rel), lambda: au.complement_lp(a.rel, self.alphabet))
            return Or((length_lt(a.lhs, a.rhs), length_lt(a.rhs, a.lhs),
                       Relational(a.lhs, a.rhs, other)))
        if a.op == "<=":
            return ArithCmp(a.rhs, "<", a.lhs)
        if a.op == "<":
            return ArithCmp(a.rhs, "<=", a.lhs)
        return Or((ArithCmp(a.lhs, "<", a.rhs), ArithCmp(a.rhs, "<", a.lhs)))

    def nnf(self, f, positive=True):
        if is_atom(f):
            return f if positive else self.negate_atom(f)
        if isinstance(f, Not):
            return self.nnf(f.arg, not positive)
        if isinstance(f, (And, Or)):
            args = tuple(self.nnf(g, positive) for g in f.args)
            flip = isinstance(f, And) != positive
            return Or(args) if flip else And(args)
        raise FormulaError(f"not a formula: {f!r}")


def to_nnf(f, alphabet):
    if isinstance(f, Problem):
        alphabet, f = f.alphabet, f.body
    return _Negator(alphabet).nnf(f)


def _dnf(f) -> Iterator[tuple]:
    if is_atom(f):
        yield (f,)
    elif isinstance(f, Or):
        for g in f.args:
            yield from _dnf(g)
    else:
        yield from _dnf_and(f.args, 0)


def _dnf_and(args, i) -> Iterator[tuple]:
    if i == len(args):
        yield ()
        return
    for head in _dnf(args[i]):
        for rest in _dnf_and(args, i + 1):
            yield head + rest


def iter_dnf(f, alphabet=()) -> Iterator[tuple]:
    """Clauses of the DNF, produced lazily; negations are eliminated atom-wise."""
    if isinstance(f, Problem):
        alphabet = f.alphabet
    for clause in _dnf(to_nnf(f, alphabet)):
        yield dedup(clause)


def to_dnf(f, alphabet=()) -> list:
    return list(iter_dnf(f, alphabet))


def fresh_names(prefix: str, taken: Iterable) -> Iterator[str]:
    taken = set(taken)
    for i in itertools.count(1):
        name = f"{prefix}{i}"
        if name not in taken:
            yield name


def to_left_sided(clause: Iterable, reserved: Iterable = ()) -> tuple:
    """Rewrite R(t, t') with |t| != 1 into R(f, t') and f = t for a fresh f.

    An equality whose right side is a single variable is flipped instead.
    """
    clause = tuple(clause)
    taken = set(reserved)
    for a in clause:
        taken.update(atom_vars(a))
    fresh = fresh_names("_f", taken)
    out = []
    for a in clause:
        if isinstance(a, Relational) and len(a.lhs) != 1:
            if a.rel is None and len(a.rhs) == 1:
                out.append(Relational(a.rhs, a.lhs))
                continue
            f = next(fresh)
            out.append(Relational((f,), a.rhs, a.rel))
            out.append(Relational((f,), a.lhs))
        else:
            out.append(a)
    return dedup(out)


# -- parser ------------------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z0-9]+\Z")


def _looks_arith(e) -> bool:
    if isinstance(e, SList) and e and isinstance(e[0], Sym):
        return e[0].name in ("len", "+", "*")
    return isinstance(e, Sym) and e.name.lstrip("-").isdigit()


class _Parser:
    def __init__(self):
        self.alphabet = []
        self.variables = []
        self.automata = {}
        self.literal_vars = {}
        self.literal_atoms = []
        self.asserts = []

    def run(self, text):
        try:
            exprs = parse_all(text)
        except SexpError as e:
            raise ParseError(str(e)) from None
        for e in exprs:
            self.toplevel(e)
        body = self.asserts + self.literal_atoms
        if len(body) == 1 and not self.literal_atoms:
            body = body[0]
        else:
            body = And(tuple(body))
        return Problem(tuple(self.alphabet), tuple(self.variables),
                       tuple(self.automata.items()), body)

    def head(self, e):
        if not isinstance(e, SList) or not e or not isinstance(e[0], Sym):
            raise ParseError("expected a parenthesised command", e)
        return e[0].name

    def sym(self, e, what="symbol"):
        if not isinstance(e, Sym):
            raise ParseError(f"expected {what}", e)
        return e.name

    def toplevel(self, e):
        h = self.head(e)
        if h == "declare-alphabet":
            for s in e[1:]:
                name = self.sym(s, "letter")
                if name == EPS or name == "_":
                    raise ParseError("'_' is reserved for epsilon", s)
                if name in self.alphabet:
                    raise ParseError(f"letter {name!r} declared twice", s)
                self.alphabet.append(name)
        elif h == "declare-str":
            for s in e[1:]:
                name = self.sym(s, "variable name")
                if name in self.variables:
                    raise ParseError(f"variable {name!r} declared twice", s)
                self.variables.append(name)
        elif h == "define-aut":
            self.define_aut(e)
        elif h == "assert":
            if len(e) != 2:
                raise ParseError("assert takes one formula", e)
            self.asserts.append(self.formula(e[1], True))
        else:
            raise ParseError(f"unknown command {h!r}", e)

    def define_aut(self, e):
        if len(e) < 2:
            raise ParseError("define-aut needs a name", e)
        name = self.sym(e[1], "automaton name")
        if name in self.automata:
            raise ParseError(f"automaton {name!r} defined twice", e[1])
        opts = {}
        rest = e[2:]
        if len(rest) % 2:
            raise ParseError("define-aut options come in :key value pairs", e)
        for k, v in zip(rest[::2], rest[1::2]):
            key = self.sym(k, "option key")
            if not key.startswith(":"):
                raise ParseError(f"expected an option key, got {key!r}", k)
            opts[key] = v
        for req in (":tapes", ":states", ":init", ":final", ":trans"):
            if req not in opts:
                raise ParseError(f"define-aut {name}: missing {req}", e)
        try:
            tapes = int(self.sym(opts[":tapes"], "tape count"))
        except ValueError:
            raise ParseError("tape count must be an integer", opts[":tapes"]) from None
        states = [self.sym(s, "state") for s in self.slist(opts[":states"])]
        sset = set(states)

        def state(s):
            n = self.sym(s, "state")
            if n not in sset:
                raise ParseError(f"undeclared state {n!r}", s)
            return n

        init = [state(s) for s in self.slist(opts[":init"])]
        final = [state(s) for s in self.slist(opts[":final"])]
        trans = []
        for t in self.slist(opts[":trans"]):
            if not isinstance(t, SList) or len(t) != 3:
                raise ParseError("transition must be (src label dst)", t)
            label = [t[1]] if isinstance(t[1], Sym) and tapes == 1 else self.slist(t[1])
            if len(label) != tapes:
                raise ParseError(f"label needs {tapes} components", t[1])
            lab = []
            for c in label:
                c = self.sym(c, "letter or _")
                if c == "_":
                    lab.append(EPS)
                elif c in self.alphabet:
                    lab.append(c)
                else:
                    raise ParseError(f"undeclared letter {c!r}", t[1])
            trans.append((state(t[0]), tuple(lab), state(t[2])))
        lp = None
        if ":length-preserving" in opts:
            flag = self.sym(opts[":length-preserving"], "true or false")
            if flag not in ("true", "false"):
                raise ParseError("expected true or false", opts[":length-preserving"])
            lp = flag == "true"
            if lp and any(EPS in lab for _, lab, _ in trans):
                raise ParseError(f"automaton {name} is marked length-preserving but uses _",
                                 opts[":length-preserving"])
        self.automata[name] = au.make(tapes, states, init, final, trans, lp, name)

    def slist(self, e):
        if not isinstance(e, SList):
            raise ParseError("expected a list", e)
        return e

    def aut(self, e, tapes):
        name = self.sym(e, "automaton name")
        if name not in self.automata:
            raise ParseError(f"undeclared automaton {name!r}", e)
        a = self.automata[name]
        if a.tapes != tapes:
            raise ParseError(f"automaton {name!r} has {a.tapes} tapes, expected {tapes}", e)
        return a

    def formula(self, e, positive):
        if isinstance(e, SList) and e and isinstance(e[0], Sym):
            h = e[0].name
            if h in ("and", "or"):
                args = tuple(self.formula(g, positive) for g in e[1:])
                return And(args) if h == "and" else Or(args)
            if h == "not":
                if len(e) != 2:
                    raise ParseError("not takes one argument", e)
                return Not(self.formula(e[1], not positive))
            if h == "=":
                self.arity(e, 2)
                if any(_looks_arith(t) for t in e[1:]):
                    raise ParseError("'=' compares strings; use '=len' for lengths", e)
                return Relational(self.term(e[1]), self.term(e[2]))
            if h == "in":
                self.arity(e, 2)
                return Membership(self.term(e[1]), self.aut(e[2], 1))
            if h == "rel":
                self.arity(e, 3)
                rel = self.aut(e[1], 2)
                if not positive and not rel.length_preserving:
                    raise ParseError("negated non-invertible constraint", e)
                return Relational(self.term(e[2]), self.term(e[3]), rel)
            if h in ("<=", "<", "=len"):
                self.arity(e, 2)
                op = "=" if h == "=len" else h
                return ArithCmp(self.aterm(e[1]), op, self.aterm(e[2]))
        raise ParseError("expected a formula", e)

    def arity(self, e, n):
        if len(e) != n + 1:
            raise ParseError(f"{e[0].name} takes {n} arguments", e)

    def term(self, e) -> tuple:
        if isinstance(e, Sym):
            if e.name not in self.variables:
                raise ParseError(f"undeclared variable {e.name!r}", e)
            return (e.name,)
        if isinstance(e, Str):
            return tuple(self.literal(c, e) for c in e.value)
        if isinstance(e, SList) and e and e[0] == Sym("concat"):
            return tuple(itertools.chain.from_iterable(self.term(t) for t in e[1:]))
        raise ParseError("expected a string term", e)

    def literal(self, c, node):
        if c not in self.alphabet:
            raise ParseError(f"undeclared letter {c!r} in literal", node)
        if c in self.literal_vars:
            return self.literal_vars[c]
        base = f"_l_{c}" if _IDENT.match(c) else f"_l{self.alphabet.index(c)}"
        name = base
        k = 0
        while name in self.variables or name in self.automata:
            k += 1
            name = f"{base}_{k}"
        self.variables.append(name)
        self.literal_vars[c] = name
        aname = "_A" + name[2:]
        while aname in self.automata:
            aname += "_"
        aut = au.word_automaton((c,)).with_name(aname)
        self.automata[aname] = aut
        self.literal_atoms.append(Membership((name,), aut))
        return name

    def aterm(self, e) -> ArithTerm:
        if isinstance(e, Sym):
            try:
                return ArithTerm(int(e.name))
            except ValueError:
                raise ParseError(f"expected an integer, got {e.name!r}", e) from None
        if isinstance(e, SList) and e and isinstance(e[0], Sym):
            h = e[0].name
            if h == "len":
                self.arity(e, 1)
                return ArithTerm.length(self.term(e[1]))
            if h == "+":
                acc = ArithTerm()
                for g in e[1:]:
                    acc = acc + self.aterm(g)
                return acc
            if h == "*":
                self.arity(e, 2)
                try:
                    k = int(self.sym(e[1], "integer"))
                except ValueError:
                    raise ParseError("left factor of * must be an integer", e[1]) from None
                return self.aterm(e[2]).scale(k)
        raise ParseError("expected an arithmetic term", e)


def parse(text) -> Problem:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser().run(text)


# -- printer -------------------------------------------------------------------

def _pr_term(t):
    if len(t) == 1:
        return t[0]
    if not t:
        return '""'
    return "(concat " + " ".join(t) + ")"


def _pr_aterm(t: ArithTerm):
    parts = []
    if t.const or not t.coeffs:
        parts.append(str(t.const))
    for v, k in t.coeffs:
        parts.append(f"(len {v})" if k == 1 else f"(* {k} (len {v}))")
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def _pr_label(lab):
    return "(" + " ".join("_" if c == EPS else str(c) for c in lab) + ")"


def print_automaton(name, a: NTapeAutomaton) -> str:
    st = lambda qs: "(" + " ".join(f"q{q}" for q in sorted(qs)) + ")"
    trans = " ".join(f"(q{s} {_pr_label(l)} q{d})" for s, l, d in sorted(a.trans, key=repr))
    lp = "true" if a.length_preserving else "false"
    return (f"(define-aut {name} :tapes {a.tapes} :states {st(a.states)} :init {st(a.init)} "
            f":final {st(a.final)} :trans ({trans}) :length-preserving {lp})")


def print_formula(f, names: Mapping | None = None) -> str:
    names = names or {}

    def aname(a):
        return names.get(a, a.name)

    if isinstance(f, Membership):
        return f"(in {_pr_term(f.term)} {aname(f.aut)})"
    if isinstance(f, Relational):
        if f.rel is None:
            return f"(= {_pr_term(f.lhs)} {_pr_term(f.rhs)})"
        return f"(rel {aname(f.rel)} {_pr_term(f.lhs)} {_pr_term(f.rhs)})"
    if isinstance(f, ArithCmp):
        op = "=len" if f.op == "=" else f.op
        return f"({op} {_pr_aterm(f.lhs)} {_pr_aterm(f.rhs)})"
    if isinstance(f, And):
        return "(and " + " ".join(print_formula(g, names) for g in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(print_formula(g, names) for g in f.args) + ")"
    if isinstance(f, Not):
        return "(not " + print_formula(f.arg, names) + ")"
    raise FormulaError(f"cannot print {f!r}")


def print_problem(p: Problem) -> str:
    lines = []
    if p.alphabet:
        lines.append("(declare-alphabet " + " ".join(p.alphabet) + ")")
    for v in p.variables:
        lines.append(f"(declare-str {v})")
    names = {}
    for n, a in p.automata:
        lines.append(print_automaton(n, a))
        names.setdefault(a, n)
    # one assert per conjunct; a one-element conjunction keeps its wrapper
    body = p.body.args if isinstance(p.body, And) and len(p.body.args) != 1 else (p.body,)
    for g in body:
        lines.append("(assert " + print_formula(g, names) + ")")
    return "\n".join(lines) + "\n"
