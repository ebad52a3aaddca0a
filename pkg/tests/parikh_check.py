"""Cross-check of Parikh encodings against run enumeration, shared by unit and acceptance tests."""
from chainfree import arith as ar
from chainfree.parikh import parikh_formula, support_connected


def run_vectors(aut, n):
    """Label-count vectors of accepting runs with at most ``n`` transitions."""
    labels = sorted({lab for _, lab, _ in aut.trans}, key=repr)
    out = _successors(aut)
    seen = {(q, (0,) * len(labels)) for q in aut.init}
    frontier = set(seen)
    for _ in range(n):
        nxt = set()
        for q, vec in frontier:
            for lab, d in out[q]:
                v = list(vec)
                v[labels.index(lab)] += 1
                item = (d, tuple(v))
                if item not in seen:
                    seen.add(item)
                    nxt.add(item)
        frontier = nxt
    return labels, {vec for q, vec in seen if q in aut.final}


def _successors(aut):
    out = {q: [] for q in aut.states}
    for s, lab, d in aut.trans:
        out[s].append((lab, d))
    return out


def formula_vectors(aut, n, backend=ar.solve):
    """Vectors with total <= n for which the Parikh formula of ``aut`` is satisfiable.

    Depth first over the labels; a prefix whose relaxation (no connectivity) is
    unsatisfiable cuts its subtree.
    """
    enc = parikh_formula(aut)
    labels = sorted(enc.label_var, key=repr)
    pv = [enc.label_var[lab] for lab in labels]
    found = set()

    def feasible(fixed, left):
        fix = [ar.eq(v, k) for v, k in zip(pv, fixed)]
        rest = ar.lsum(pv[len(fixed):])
        return backend(ar.LiaProblem(ar.conj(enc.base, *fix, ar.le(rest, left))))

    def go(fixed, left):
        res = feasible(fixed, left)
        if not res.sat:
            return
        if len(fixed) == len(pv):
            if not support_connected(enc, res.model):
                fix = [ar.eq(v, k) for v, k in zip(pv, fixed)]
                if not backend(ar.LiaProblem(ar.conj(enc.formula, *fix))).sat:
                    return
            found.add(tuple(fixed))
            return
        for k in range(left + 1):
            go(fixed + [k], left - k)

    go([], n)
    return labels, found


def compare(aut, n=6):
    """None when both sides agree, otherwise a description of the difference."""
    la, runs = run_vectors(aut, n)
    lb, sols = formula_vectors(aut, n)
    assert la == lb
    if runs == sols:
        return None
    return f"runs only: {sorted(runs - sols)[:3]}, formula only: {sorted(sols - runs)[:3]}"
