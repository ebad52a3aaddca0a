"""Bounded exhaustive satisfiability check, used as ground truth in tests.

Atoms are checked with ``formula.eval_atom`` alone.  The one shortcut is to stop
extending a partial interpretation once the formula is already false on the
variables assigned so far.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .formula import And, Membership, Not, Or, Problem, atom_vars, eval_atom, formula_vars, is_atom


@dataclass
class OracleResult:
    witness: dict | None
    explored: int = 0

    @property
    def found(self):
        return self.witness is not None


def words_upto(alphabet, max_len):
    """All words of length <= max_len, length first, then lexicographic."""
    letters = sorted(alphabet, key=repr)
    for n in range(max_len + 1):
        yield from itertools.product(letters, repeat=n)


def _partial(f, eta):
    """True/False when decided by the assigned variables, otherwise None."""
    if is_atom(f):
        if all(v in eta for v in atom_vars(f)):
            return eval_atom(f, eta)
        return None
    if isinstance(f, Not):
        v = _partial(f.arg, eta)
        return None if v is None else not v
    if isinstance(f, And):
        res = True
        for g in f.args:
            v = _partial(g, eta)
            if v is False:
                return False
            if v is None:
                res = None
        return res
    if isinstance(f, Or):
        res = False
        for g in f.args:
            v = _partial(g, eta)
            if v is True:
                return True
            if v is None:
                res = None
        return res
    if isinstance(f, (tuple, list)):
        return _partial(And(tuple(f)), eta)
    raise TypeError(f"not a formula: {f!r}")


def bounded_sat(f, bound: int, alphabet=None, variables=None, var_alphabets=None) -> OracleResult:
    """First interpretation (variables in order, words length-lex) with |eta(x)| <= bound."""
    if isinstance(f, Problem):
        alphabet = f.alphabet if alphabet is None else alphabet
        variables = list(f.variables) if variables is None else variables
        body = f.body
    else:
        body = f
    if alphabet is None:
        raise ValueError("an alphabet is needed")
    used = formula_vars(body)
    variables = list(variables or []) + [v for v in used if v not in (variables or [])]
    var_alphabets = dict(var_alphabets or {})
    domains = [list(words_upto(var_alphabets.get(v, alphabet), bound)) for v in variables]
    explored = 0
    eta = {}

    def go(k):
        nonlocal explored
        explored += 1
        verdict = _partial(body, eta)
        if verdict is False:
            return False
        if k == len(variables):
            return verdict is True
        v = variables[k]
        for w in domains[k]:
            eta[v] = w
            if go(k + 1):
                return True
        del eta[v]
        return False

    if go(0):
        return OracleResult(dict(eta), explored)
    return OracleResult(None, explored)


def tuple_alphabets(clause) -> dict:
    """Per-variable alphabets for variables constrained to tuple letters."""
    out = {}
    for a in clause:
        if isinstance(a, Membership) and len(a.term) == 1:
            letters = a.aut.letters()
            if letters and all(isinstance(c, tuple) for c in letters):
                out[a.term[0]] = sorted(letters, key=repr)
    return out
