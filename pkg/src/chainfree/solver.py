"""Pipeline: DNF, left-sided form, classification, benign elimination, splitting, Parikh."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import arith as ar
from .benign import EliminationStats, to_chain_free
from .formula import Problem, atom_vars, evaluate, iter_dnf, to_left_sided
from .fragment import Classification, FragmentClass, classify_clause
from .parikh import decide_clause
from .split import ResourceLimit, SplitStats, to_concat_free

log = logging.getLogger(__name__)

SAT, UNSAT, UNKNOWN, OUT = "sat", "unsat", "unknown", "out-of-fragment"


class ModelError(AssertionError):
    """A model produced by the pipeline does not satisfy the input formula."""


@dataclass
class ClauseReport:
    index: int
    clause: tuple
    classification: Classification
    status: str | None = None
    message: str = ""
    model: dict | None = None
    elimination: EliminationStats | None = None
    split: SplitStats | None = None
    leaves: int = 0
    lia: list = field(default_factory=list)

    @property
    def kind(self):
        return self.classification.kind


@dataclass
class RunResult:
    verdict: str
    clauses: list
    model: dict | None = None

    @property
    def witness(self):
        for c in self.clauses:
            if c.kind is FragmentClass.CHAINING:
                return c.classification.bad_witness
        return None


def reconstruct(model: dict, subs) -> dict:
    """Undo variable splits x -> x1 x2, innermost first."""
    model = dict(model)
    for x, parts in reversed(tuple(subs)):
        model[x] = tuple(c for p in parts for c in model.get(p, ()))
    return model


def complete_model(problem: Problem, model: dict) -> dict:
    return {v: tuple(model.get(v, ())) for v in problem.variables}


def _decide(rep: ClauseReport, problem, backend, cap, want_model, keep_lia, strict):
    alphabet = problem.alphabet
    taken = set(problem.variables)
    for a in rep.clause:
        taken.update(atom_vars(a))
    rep.elimination = EliminationStats()
    cf = to_chain_free(rep.clause, alphabet, taken, rep.elimination)
    for a in cf:
        taken.update(atom_vars(a))
    rep.split = SplitStats(strict=strict)
    unknown = None
    try:
        for leaf in to_concat_free(cf, alphabet, rep.split, cap, taken):
            rep.leaves += 1
            v = decide_clause(leaf.clause, alphabet, backend, want_model)
            if keep_lia and v.lia is not None:
                rep.lia.append(v.lia)
            log.debug("clause %d leaf %d: %s", rep.index, rep.leaves, v.status)
            if v.status == SAT:
                rep.status = SAT
                if want_model:
                    rep.model = reconstruct(v.model, leaf.subs)
                return
            if v.status == UNKNOWN:
                unknown = v.message or "arithmetic backend gave up"
    except ResourceLimit as e:
        rep.status, rep.message = UNKNOWN, str(e)
        return
    if unknown:
        rep.status, rep.message = UNKNOWN, unknown
    else:
        rep.status = UNSAT


def solve_problem(problem: Problem, backend=None, cap: int = 100_000, want_model=True,
                  classify_only=False, keep_lia=False, strict=True) -> RunResult:
    """Decide ``problem``; a clause outside the fragment makes the verdict out-of-fragment
    unless another clause is satisfiable."""
    backend = backend or ar.make_backend("internal")
    reports = []
    verdict = None
    for i, clause in enumerate(iter_dnf(problem), 1):
        left = to_left_sided(clause, problem.variables)
        rep = ClauseReport(i, left, classify_clause(left))
        reports.append(rep)
        log.info("clause %d: %s (%d atoms)", i, rep.kind.value, len(left))
        if classify_only:
            continue
        if rep.kind is FragmentClass.CHAINING:
            rep.status = OUT
            continue
        _decide(rep, problem, backend, cap, want_model, keep_lia, strict)
        if rep.status == SAT:
            verdict = SAT
            break
    if classify_only:
        worst = max((r.kind for r in reports), key=_severity, default=FragmentClass.CHAIN_FREE)
        return RunResult(worst.value, reports)
    model = None
    if verdict == SAT:
        sat = reports[-1]
        if want_model:
            model = complete_model(problem, sat.model)
            if not evaluate(problem, model):
                raise ModelError(f"model of clause {sat.index} does not satisfy the formula")
    else:
        statuses = {r.status for r in reports}
        verdict = OUT if OUT in statuses else UNKNOWN if UNKNOWN in statuses else UNSAT
    return RunResult(verdict, reports, model)


def _severity(kind):
    return [FragmentClass.CHAIN_FREE, FragmentClass.WEAKLY_CHAINING,
            FragmentClass.CHAINING].index(kind)
