"""Quantifier-free linear integer arithmetic.

The internal backend searches the boolean structure depth-first, keeping an exact
rational simplex (bounds on variables and on one slack per linear form, Bland's
pivoting rule) in sync with the chosen atoms, and finishes every consistent
branch with branch and bound.  The external backend speaks SMT-LIB2 to a solver
process.
"""
from __future__ import annotations

import logging
import math
import re
import shlex
import subprocess
import sys
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .sexp import SexpError, SList, Sym, parse_all

try:  # exact rationals; gmpy2 is much faster when present
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q

log = logging.getLogger(__name__)

DEFAULT_NODE_LIMIT = 10 ** 6


# -- terms and formulas --------------------------------------------------------------

@dataclass(frozen=True)
class Lin:
    """sum(k * v) + const with integer coefficients; ``coeffs`` sorted, no zeros."""
    coeffs: tuple = ()
    const: int = 0

    @staticmethod
    def build(coeffs: Mapping | Iterable = (), const: int = 0) -> "Lin":
        acc = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for v, k in items:
            acc[v] = acc.get(v, 0) + k
        return Lin(tuple(sorted((v, k) for v, k in acc.items() if k)), const)

    @staticmethod
    def of(x) -> "Lin":
        if isinstance(x, Lin):
            return x
        if isinstance(x, int):
            return Lin((), x)
        if isinstance(x, str):
            return Lin(((x, 1),), 0)
        raise TypeError(f"cannot make a linear term from {x!r}")

    def __add__(self, other):
        other = Lin.of(other)
        return Lin.build(self.coeffs + other.coeffs, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return Lin(tuple((v, -k) for v, k in self.coeffs), -self.const)

    def __sub__(self, other):
        return self + (-Lin.of(other))

    def __rsub__(self, other):
        return Lin.of(other) - self

    def __mul__(self, k: int):
        return Lin.build([(v, c * k) for v, c in self.coeffs], self.const * k)

    __rmul__ = __mul__

    def value(self, model: Mapping):
        return self.const + sum(k * model[v] for v, k in self.coeffs)

    @property
    def vars(self):
        return tuple(v for v, _ in self.coeffs)


def lsum(items) -> Lin:
    acc = Lin()
    for x in items:
        acc = acc + Lin.of(x)
    return acc


@dataclass(frozen=True)
class Cmp:
    """``lin <= 0`` or ``lin = 0``."""
    lin: Lin
    op: str

    def __post_init__(self):
        if self.op not in ("<=", "="):
            raise ValueError(f"bad comparison {self.op!r}")


@dataclass(frozen=True)
class LAnd:
    args: tuple


@dataclass(frozen=True)
class LOr:
    args: tuple


@dataclass(frozen=True)
class LNot:
    arg: object


TRUE = LAnd(())
FALSE = LOr(())


def le(a, b) -> Cmp:
    return Cmp(Lin.of(a) - Lin.of(b), "<=")


def lt(a, b) -> Cmp:
    return Cmp(Lin.of(a) - Lin.of(b) + 1, "<=")


def ge(a, b) -> Cmp:
    return le(b, a)


def gt(a, b) -> Cmp:
    return lt(b, a)


def eq(a, b) -> Cmp:
    return Cmp(Lin.of(a) - Lin.of(b), "=")


def conj(*args) -> LAnd:
    out = []
    for a in args:
        if isinstance(a, LAnd):
            out.extend(a.args)
        elif isinstance(a, (list, tuple)):
            out.extend(conj(*a).args)
        else:
            out.append(a)
    return LAnd(tuple(out))


def disj(*args) -> LOr:
    return LOr(tuple(args))


def formula_vars(f, acc=None) -> dict:
    acc = {} if acc is None else acc
    if isinstance(f, Cmp):
        for v in f.lin.vars:
            acc.setdefault(v, None)
    elif isinstance(f, (LAnd, LOr)):
        for g in f.args:
            formula_vars(g, acc)
    elif isinstance(f, LNot):
        formula_vars(f.arg, acc)
    else:
        raise TypeError(f"not a linear formula: {f!r}")
    return acc


def evaluate(f, model: Mapping) -> bool:
    """Exact truth value; variables missing from ``model`` read as 0."""
    if isinstance(f, Cmp):
        v = f.lin.const + sum(k * model.get(x, 0) for x, k in f.lin.coeffs)
        return v <= 0 if f.op == "<=" else v == 0
    if isinstance(f, LAnd):
        return all(evaluate(g, model) for g in f.args)
    if isinstance(f, LOr):
        return any(evaluate(g, model) for g in f.args)
    if isinstance(f, LNot):
        return not evaluate(f.arg, model)
    raise TypeError(f"not a linear formula: {f!r}")


def nnf(f, positive=True):
    if isinstance(f, Cmp):
        if positive:
            return f
        if f.op == "<=":
            return Cmp(-f.lin + 1, "<=")
        return LOr((Cmp(f.lin + 1, "<="), Cmp(-f.lin + 1, "<=")))
    if isinstance(f, LNot):
        return nnf(f.arg, not positive)
    if isinstance(f, (LAnd, LOr)):
        args = tuple(nnf(g, positive) for g in f.args)
        return LAnd(args) if isinstance(f, LAnd) == positive else LOr(args)
    raise TypeError(f"not a linear formula: {f!r}")


@dataclass
class LiaProblem:
    formula: object
    variables: tuple = ()

    def __post_init__(self):
        seen = dict.fromkeys(self.variables)
        formula_vars(self.formula, seen)
        self.variables = tuple(seen)


@dataclass
class LiaResult:
    status: str                    # "sat" | "unsat" | "unknown"
    model: dict | None = None
    stats: dict = field(default_factory=dict)
    message: str = ""

    @property
    def sat(self):
        return self.status == "sat"


# -- exact simplex -----------------------------------------------------------------------

class _Conflict(Exception):
    pass


class NodeLimit(Exception):
    pass


class Simplex:
    """Bounds-based general simplex over exact rationals."""

    def __init__(self, nvars: int):
        self.n = nvars
        self.val = [Q(0)] * nvars
        self.lo = [None] * nvars
        self.hi = [None] * nvars
        self.rows = {}           # basic -> {nonbasic: coeff}
        self.cols = {j: set() for j in range(nvars)}
        self.trail = []
        self.pivots = 0

    def add_var(self) -> int:
        j = self.n
        self.n += 1
        self.val.append(Q(0))
        self.lo.append(None)
        self.hi.append(None)
        self.cols[j] = set()
        return j

    def add_row(self, coeffs: Mapping) -> int:
        """New basic variable s = sum(coeffs[j] * x_j); returns s."""
        s = self.add_var()
        row = {}
        for j, k in coeffs.items():
            k = Q(k)
            if j in self.rows:
                for jj, kk in self.rows[j].items():
                    row[jj] = row.get(jj, 0) + k * kk
            else:
                row[j] = row.get(j, 0) + k
        row = {j: k for j, k in row.items() if k}
        self.rows[s] = row
        for j in row:
            self.cols[j].add(s)
        self.val[s] = sum((k * self.val[j] for j, k in row.items()), Q(0))
        return s

    # bounds with backtracking
    def push(self):
        self.trail.append(None)

    def pop(self):
        while True:
            item = self.trail.pop()
            if item is None:
                return
            j, lo, hi = item
            self.lo[j], self.hi[j] = lo, hi

    def assert_upper(self, j, c):
        if self.hi[j] is not None and c >= self.hi[j]:
            return
        if self.lo[j] is not None and c < self.lo[j]:
            raise _Conflict
        self.trail.append((j, self.lo[j], self.hi[j]))
        self.hi[j] = c
        if j not in self.rows and self.val[j] > c:
            self._update(j, c)

    def assert_lower(self, j, c):
        if self.lo[j] is not None and c <= self.lo[j]:
            return
        if self.hi[j] is not None and c > self.hi[j]:
            raise _Conflict
        self.trail.append((j, self.lo[j], self.hi[j]))
        self.lo[j] = c
        if j not in self.rows and self.val[j] < c:
            self._update(j, c)

    def _update(self, j, v):
        d = v - self.val[j]
        for b in self.cols[j]:
            self.val[b] += self.rows[b][j] * d
        self.val[j] = v

    def _pivot(self, b, j):
        row = self.rows.pop(b)
        a = row.pop(j)
        for k in row:
            self.cols[k].discard(b)
        self.cols[j].discard(b)
        # x_j = (b - sum row) / a
        inv = 1 / Q(a)
        new = {b: inv}
        for k, c in row.items():
            new[k] = -c * inv
        for r in list(self.cols[j]):
            rr = self.rows[r]
            cj = rr.pop(j)
            for k, c in new.items():
                nv = rr.get(k, 0) + cj * c
                if nv:
                    if k not in rr:
                        self.cols[k].add(r)
                    rr[k] = nv
                elif k in rr:
                    del rr[k]
                    self.cols[k].discard(r)
        self.cols[j] = set()
        self.rows[j] = new
        for k in new:
            self.cols[k].add(j)
        self.pivots += 1

    def _pivot_and_update(self, b, j, v):
        a = self.rows[b][j]
        theta = (v - self.val[b]) / a
        self.val[b] = v
        self.val[j] += theta
        for r in self.cols[j]:
            if r != b:
                self.val[r] += self.rows[r][j] * theta
        self._pivot(b, j)

    def check(self) -> bool:
        while True:
            bad = None
            for b in sorted(self.rows):
                v = self.val[b]
                if (self.lo[b] is not None and v < self.lo[b]) or \
                        (self.hi[b] is not None and v > self.hi[b]):
                    bad = b
                    break
            if bad is None:
                return True
            b = bad
            row = self.rows[b]
            if self.lo[b] is not None and self.val[b] < self.lo[b]:
                target = self.lo[b]
                cand = [j for j, a in row.items()
                        if (a > 0 and (self.hi[j] is None or self.val[j] < self.hi[j])) or
                        (a < 0 and (self.lo[j] is None or self.val[j] > self.lo[j]))]
            else:
                target = self.hi[b]
                cand = [j for j, a in row.items()
                        if (a < 0 and (self.hi[j] is None or self.val[j] < self.hi[j])) or
                        (a > 0 and (self.lo[j] is None or self.val[j] > self.lo[j]))]
            if not cand:
                return False
            self._pivot_and_update(b, min(cand), target)


# -- internal solver --------------------------------------------------------------------

def _floor(q):
    return Q(math.floor(q))


def _ceil(q):
    return Q(math.ceil(q))


class InternalSolver:
    def __init__(self, problem: LiaProblem, node_limit: int = DEFAULT_NODE_LIMIT):
        self.problem = problem
        self.node_limit = node_limit
        self.nodes = 0
        self.names = list(problem.variables)
        self.index = {v: i for i, v in enumerate(self.names)}
        self.spx = Simplex(len(self.names))
        self.forms = {}
        self.formula = nnf(problem.formula)
        self.const_false = False
        self._compile(self.formula)

    # each atom becomes (var index, lower, upper) or a constant truth value
    def _compile(self, f):
        if isinstance(f, Cmp):
            self._bound_of(f)
        else:
            for g in f.args:
                self._compile(g)

    def _bound_of(self, atom):
        cached = self.forms.get(("atom", atom))
        if cached is not None:
            return cached
        lin = atom.lin
        if not lin.coeffs:
            ok = lin.const <= 0 if atom.op == "<=" else lin.const == 0
            res = ("const", ok)
        else:
            g = 0
            for _, k in lin.coeffs:
                g = math.gcd(g, k)
            sign = 1 if lin.coeffs[0][1] > 0 else -1
            form = tuple((v, k // (g * sign)) for v, k in lin.coeffs)
            rhs = Q(-lin.const, g * sign)      # form (<=|>=|=) rhs
            if len(form) == 1 and form[0][1] == 1:
                j = self.index[form[0][0]]
            else:
                j = self.forms.get(form)
                if j is None:
                    j = self.spx.add_row({self.index[v]: k for v, k in form})
                    self.forms[form] = j
            if atom.op == "=":
                if rhs.denominator != 1:
                    res = ("const", False)
                else:
                    res = ("bound", j, rhs, rhs)
            elif sign > 0:
                res = ("bound", j, None, _floor(rhs))
            else:
                res = ("bound", j, _ceil(rhs), None)
        self.forms[("atom", atom)] = res
        return res

    def _assert_atom(self, atom):
        b = self._bound_of(atom)
        if b[0] == "const":
            if not b[1]:
                raise _Conflict
            return
        _, j, lo, hi = b
        if lo is not None:
            self.spx.assert_lower(j, lo)
        if hi is not None:
            self.spx.assert_upper(j, hi)

    def _holds(self, f) -> bool:
        """Truth under the current rational assignment."""
        if isinstance(f, Cmp):
            b = self._bound_of(f)
            if b[0] == "const":
                return b[1]
            _, j, lo, hi = b
            v = self.spx.val[j]
            return (lo is None or v >= lo) and (hi is None or v <= hi)
        if isinstance(f, LAnd):
            return all(self._holds(g) for g in f.args)
        return any(self._holds(g) for g in f.args)

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise NodeLimit

    def _search(self, todo, ors):
        """Assert ``todo`` (a list of NNF formulas) on top of the current state."""
        self._tick()
        ors = list(ors)
        stack = list(todo)
        while stack:
            f = stack.pop()
            if isinstance(f, Cmp):
                self._assert_atom(f)
            elif isinstance(f, LAnd):
                stack.extend(f.args)
            else:
                if not f.args:
                    raise _Conflict
                ors.append(f)
        if not self.spx.check():
            return None
        if not ors:
            return self._branch_and_bound()
        # a violated disjunction first; otherwise commit to one that already holds
        o = next((x for x in ors if not self._holds(x)), ors[0])
        rest = [x for x in ors if x is not o]
        order = sorted(range(len(o.args)), key=lambda k: not self._holds(o.args[k]))
        for k in order:
            self.spx.push()
            try:
                res = self._search([o.args[k]], rest)
            except _Conflict:
                res = None
            finally:
                self.spx.pop()
            if res is not None:
                return res
        return None

    def _fractional(self):
        best, best_dist = None, None
        for j in range(len(self.names)):
            v = self.spx.val[j]
            if v.denominator != 1:
                frac = v - math.floor(v)
                dist = abs(frac - Q(1, 2))
                if best is None or dist < best_dist:
                    best, best_dist = j, dist
        return best

    def _branch_and_bound(self):
        work = [()]
        while work:
            extra = work.pop()
            self._tick()
            self.spx.push()
            try:
                for j, lo, hi in extra:
                    if lo is not None:
                        self.spx.assert_lower(j, lo)
                    if hi is not None:
                        self.spx.assert_upper(j, hi)
                if not self.spx.check():
                    continue
                j = self._fractional()
                if j is None:
                    return {v: int(self.spx.val[i]) for i, v in enumerate(self.names)}
                v = self.spx.val[j]
                work.append(extra + ((j, _ceil(v), None),))
                work.append(extra + ((j, None, _floor(v)),))
            except _Conflict:
                continue
            finally:
                self.spx.pop()
        return None

    def solve(self) -> LiaResult:
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 20000))
        try:
            self.spx.push()
            model = self._search([self.formula], [])
        except _Conflict:
            model = None
        except NodeLimit:
            return LiaResult("unknown", None, self._stats(),
                             f"node limit {self.node_limit} exhausted")
        finally:
            sys.setrecursionlimit(old)
        if model is None:
            return LiaResult("unsat", None, self._stats())
        if not evaluate(self.problem.formula, model):
            raise AssertionError("internal LIA model does not satisfy the formula")
        return LiaResult("sat", model, self._stats())

    def _stats(self):
        return {"nodes": self.nodes, "pivots": self.spx.pivots}


def _subst_lin(lin: Lin, sub: Mapping) -> Lin:
    out = Lin((), lin.const)
    for v, k in lin.coeffs:
        out = out + (sub[v] * k if v in sub else Lin(((v, k),), 0))
    return out


def _subst(f, sub):
    if isinstance(f, Cmp):
        return Cmp(_subst_lin(f.lin, sub), f.op)
    if isinstance(f, LNot):
        return LNot(_subst(f.arg, sub))
    return type(f)(tuple(_subst(g, sub) for g in f.args))


def _top_conjuncts(f):
    if isinstance(f, LAnd):
        for g in f.args:
            yield from _top_conjuncts(g)
    else:
        yield f


def eliminate_equalities(problem: LiaProblem):
    """Solve the top-level equalities over the integers.

    Returns ``(reduced, defs)`` where ``defs`` lists ``(var, Lin)`` definitions to be
    evaluated in reverse order, or None when the equalities have no integer solution.
    """
    eqs, rest = [], []
    for g in _top_conjuncts(nnf(problem.formula)):
        (eqs if isinstance(g, Cmp) and g.op == "=" else rest).append(g)
    eqs = [g.lin for g in eqs]
    taken = set(problem.variables)
    counter = 0
    defs = []

    def apply(sub):
        nonlocal eqs, rest
        eqs = [_subst_lin(e, sub) for e in eqs]
        rest = [_subst(g, sub) for g in rest]

    while eqs:
        e = eqs.pop()
        if not e.coeffs:
            if e.const:
                return None
            continue
        g = 0
        for _, k in e.coeffs:
            g = math.gcd(g, k)
        if e.const % g:
            return None
        e = Lin(tuple((v, k // g) for v, k in e.coeffs), e.const // g)
        unit = next((v for v, k in e.coeffs if abs(k) == 1), None)
        if unit is not None:
            k = dict(e.coeffs)[unit]
            value = (e - Lin(((unit, k),), 0)) * (-k)
            defs.append((unit, value))
            apply({unit: value})
            continue
        # x_v = t - sum q_i x_i shrinks the other coefficients modulo a_v
        v, a = min(e.coeffs, key=lambda c: abs(c[1]))
        if a < 0:
            e, a = -e, -a
        while True:
            counter += 1
            t = f"_eq{counter}"
            if t not in taken:
                break
        taken.add(t)
        value = Lin.build([(t, 1)] + [(w, -(k // a)) for w, k in e.coeffs if w != v])
        defs.append((v, value))
        eqs.append(e)
        apply({v: value})
    defined = {v for v, _ in defs}
    variables = [v for v in problem.variables if v not in defined]
    seen = dict.fromkeys(variables)
    for g in rest:
        formula_vars(g, seen)
    return LiaProblem(conj(*rest), tuple(v for v in seen if v not in defined)), defs


def _expand_model(model, defs, variables):
    model = dict(model)
    for v, lin in reversed(defs):
        model[v] = lin.value({w: model.get(w, 0) for w in lin.vars})
    return {v: model.get(v, 0) for v in variables}


def _boxed(problem: LiaProblem, box: int) -> LiaProblem:
    bounds = [c for v in problem.variables for c in (ge(v, -box), le(v, box))]
    return LiaProblem(conj(problem.formula, *bounds), problem.variables)


def solve(problem: LiaProblem, node_limit: int = DEFAULT_NODE_LIMIT) -> LiaResult:
    """Branch and bound can run forever on an unbounded, integer-infeasible branch and
    never reach a satisfiable sibling.  So unbounded runs alternate with runs inside
    growing boxes |v| <= 2^k, and with runs on the problem with its equalities solved,
    all under a doubling node budget.  A boxed run can only prove sat."""
    budget, box, spent = 256, 4, 0
    reduced = None
    while True:
        budget = min(budget, node_limit - spent)
        res = InternalSolver(problem, budget).solve()
        spent += res.stats["nodes"]
        if res.status != "unknown":
            res.stats["nodes"] = spent
            return res
        if spent >= node_limit:
            break
        # the same problem with its equalities solved; it can prove unsat on lattices
        if reduced is None:
            reduced = eliminate_equalities(problem) or False
            if reduced is False:
                return LiaResult("unsat", None, {"nodes": spent, "equalities": "no integer solution"})
        red = InternalSolver(reduced[0], min(budget, node_limit - spent)).solve()
        spent += red.stats["nodes"]
        if red.status == "unsat":
            return LiaResult("unsat", None, {"nodes": spent})
        if red.sat:
            model = _expand_model(red.model, reduced[1], problem.variables)
            if not evaluate(problem.formula, model):
                raise AssertionError("model of the reduced problem does not satisfy the formula")
            return LiaResult("sat", model, {"nodes": spent})
        if spent >= node_limit:
            break
        boxed = InternalSolver(_boxed(problem, box), min(budget, node_limit - spent)).solve()
        spent += boxed.stats["nodes"]
        if boxed.sat:
            model = {v: boxed.model[v] for v in problem.variables}
            return LiaResult("sat", model, {"nodes": spent, "box": box})
        if spent >= node_limit:
            break
        budget *= 2
        box *= 4
    return LiaResult("unknown", None, {"nodes": spent},
                     f"node limit {node_limit} exhausted")


# -- SMT-LIB2 -----------------------------------------------------------------------------

_SIMPLE = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*\Z")
_RESERVED = {"and", "or", "not", "true", "false", "let", "forall", "exists", "par", "as",
             "!", "_", "assert", "ite", "distinct"}


def smt_symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"variable name {name!r} cannot be written in SMT-LIB")
    return f"|{name}|"


def _smt_int(k: int) -> str:
    return str(k) if k >= 0 else f"(- {-k})"


def _smt_lin(coeffs) -> str:
    terms = []
    for v, k in coeffs:
        s = smt_symbol(v)
        terms.append(s if k == 1 else f"(* {_smt_int(k)} {s})")
    if not terms:
        return "0"
    return terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"


def smt_formula(f) -> str:
    if isinstance(f, Cmp):
        return f"({f.op} {_smt_lin(f.lin.coeffs)} {_smt_int(-f.lin.const)})"
    if isinstance(f, LAnd):
        return "(and " + " ".join(smt_formula(g) for g in f.args) + ")" if f.args else "true"
    if isinstance(f, LOr):
        return "(or " + " ".join(smt_formula(g) for g in f.args) + ")" if f.args else "false"
    if isinstance(f, LNot):
        return f"(not {smt_formula(f.arg)})"
    raise TypeError(f"not a linear formula: {f!r}")


def to_smtlib(problem: LiaProblem) -> str:
    lines = ["(set-logic QF_LIA)"]
    for v in problem.variables:
        lines.append(f"(declare-const {smt_symbol(v)} Int)")
    top = problem.formula.args if isinstance(problem.formula, LAnd) else (problem.formula,)
    for g in top:
        lines.append(f"(assert {smt_formula(g)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _int_value(e):
    if isinstance(e, Sym):
        return int(e.name)
    if isinstance(e, SList) and len(e) == 2 and e[0] == Sym("-"):
        return -_int_value(e[1])
    raise ValueError(f"unsupported model value {e!r}")


def parse_reply(text: str, variables: Iterable) -> LiaResult:
    try:
        exprs = parse_all(text)
    except SexpError as e:
        return LiaResult("unknown", message=f"malformed solver reply: {e}")
    if not exprs or not isinstance(exprs[0], Sym) or \
            exprs[0].name not in ("sat", "unsat", "unknown"):
        return LiaResult("unknown", message=f"malformed solver reply: {text[:200]!r}")
    status = exprs[0].name
    if status != "sat":
        return LiaResult(status)
    if len(exprs) < 2 or not isinstance(exprs[1], SList):
        return LiaResult("unknown", message="solver reported sat without a model")
    defs = list(exprs[1])
    if defs and defs[0] == Sym("model"):
        defs = defs[1:]
    model = {}
    try:
        for d in defs:
            if not (isinstance(d, SList) and len(d) == 5 and d[0] == Sym("define-fun")):
                raise ValueError(f"unexpected model entry {d!r}")
            model[d[1].name] = _int_value(d[4])
    except (ValueError, AttributeError) as e:
        return LiaResult("unknown", message=f"malformed model: {e}")
    for v in variables:
        model.setdefault(v, 0)
    return LiaResult("sat", model)


def solve_external(problem: LiaProblem, command, timeout: float = 60.0) -> LiaResult:
    """Run an SMT-LIB2 solver reading from stdin, e.g. ``"z3 -in"``."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    script = "(set-option :produce-models true)\n" + to_smtlib(problem) + "(get-model)\n(exit)\n"
    try:
        proc = subprocess.run(argv, input=script, capture_output=True, text=True, timeout=timeout)
    except (OSError, subprocess.SubprocessError) as e:
        return LiaResult("unknown", message=f"external solver failed: {e}")
    res = parse_reply(proc.stdout, problem.variables)
    if res.status == "sat" and not evaluate(problem.formula, res.model):
        return LiaResult("unknown", message="external model does not satisfy the formula")
    if res.status == "unknown" and proc.stderr:
        res.message = (res.message + " " + proc.stderr.strip()[:200]).strip()
    return res


def make_backend(spec: str | None, node_limit: int = DEFAULT_NODE_LIMIT):
    """``internal`` or ``external:<command>`` -> callable(LiaProblem) -> LiaResult."""
    spec = spec or "internal"
    if spec == "internal":
        return lambda p: solve(p, node_limit)
    if spec.startswith("external:"):
        cmd = spec[len("external:"):]
        if not cmd.strip():
            raise ValueError("external backend needs a command")
        return lambda p: solve_external(p, cmd)
    raise ValueError(f"unknown backend {spec!r}")
