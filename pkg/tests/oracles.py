"""Reference implementations used only by the tests.

Nothing here calls into the package's solvers; only the syntax classes are
shared so that inputs can be handed to both sides.
"""

from __future__ import annotations

import itertools
import math

from proofgate.syntax import (
    And,
    Atom,
    Bottom,
    Clause,
    Eq,
    Exists,
    Fn,
    Forall,
    Iff,
    Implies,
    Literal,
    Not,
    Or,
    Top,
    Var,
    signature_of,
)


def truth_table_sat(num_vars, clauses):
    """Satisfying assignment by 2^n enumeration, or None."""
    for bits in itertools.product((False, True), repeat=num_vars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return {i + 1: b for i, b in enumerate(bits)}
    return None


# ------------------------------------------------------------ evaluation


def term_value(t, funcs, env):
    if isinstance(t, Var):
        return env[t.name]
    return funcs[t.name][tuple(term_value(a, funcs, env) for a in t.args)]


def holds(f, n, funcs, preds, env=None):
    """Truth of a formula in the interpretation (funcs, preds) over range(n)."""
    env = env or {}
    if isinstance(f, Atom):
        return preds[f.pred][tuple(term_value(a, funcs, env) for a in f.args)]
    if isinstance(f, Eq):
        return term_value(f.lhs, funcs, env) == term_value(f.rhs, funcs, env)
    if isinstance(f, Not):
        return not holds(f.arg, n, funcs, preds, env)
    if isinstance(f, And):
        return all(holds(a, n, funcs, preds, env) for a in f.args)
    if isinstance(f, Or):
        return any(holds(a, n, funcs, preds, env) for a in f.args)
    if isinstance(f, Implies):
        return (not holds(f.lhs, n, funcs, preds, env)) or holds(f.rhs, n, funcs, preds, env)
    if isinstance(f, Iff):
        return holds(f.lhs, n, funcs, preds, env) == holds(f.rhs, n, funcs, preds, env)
    if isinstance(f, (Forall, Exists)):
        quant = all if isinstance(f, Forall) else any
        return quant(
            holds(f.body, n, funcs, preds, {**env, **dict(zip(f.vars, vals))})
            for vals in itertools.product(range(n), repeat=len(f.vars))
        )
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    raise TypeError(f)


def clause_holds(c, n, funcs, preds):
    vs = sorted(c.variables())
    for vals in itertools.product(range(n), repeat=len(vs)):
        env = dict(zip(vs, vals))
        if not any(holds(l.to_formula(), n, funcs, preds, env) for l in c.literals):
            return False
    return True


def all_interpretations(sig, n):
    """Every interpretation of ``sig`` over range(n), plain enumeration."""
    fcells = [(name, args) for name, a in sorted(sig.functions.items()) for args in itertools.product(range(n), repeat=a)]
    pcells = [(name, args) for name, a in sorted(sig.predicates.items()) for args in itertools.product(range(n), repeat=a)]
    for fvals in itertools.product(range(n), repeat=len(fcells)):
        funcs = {name: {} for name in sig.functions}
        for (name, args), v in zip(fcells, fvals):
            funcs[name][args] = v
        for pvals in itertools.product((False, True), repeat=len(pcells)):
            preds = {name: {} for name in sig.predicates}
            for (name, args), v in zip(pcells, pvals):
                preds[name][args] = v
            yield funcs, preds


def interpretation_bits(sig, n):
    bits = 0.0
    for a in sig.functions.values():
        bits += (n**a) * math.log2(n) if n > 1 else 0
    for a in sig.predicates.values():
        bits += n**a
    return bits


# -------------------------------------------------- pruned model search


class _Undecided(Exception):
    pass


def _pval(t, funcs, env):
    if isinstance(t, Var):
        return env[t.name]
    args = tuple(_pval(a, funcs, env) for a in t.args)
    v = funcs[t.name].get(args)
    if v is None:
        raise _Undecided
    return v


def _lit_state(lit, funcs, preds, env):
    a = lit.atom
    try:
        if isinstance(a, Eq):
            value = _pval(a.lhs, funcs, env) == _pval(a.rhs, funcs, env)
        else:
            v = preds[a.pred].get(tuple(_pval(t, funcs, env) for t in a.args))
            if v is None:
                return None
            value = v
    except _Undecided:
        return None
    return value == lit.positive


def _falsified(instances, funcs, preds):
    for lits, env in instances:
        undecided = False
        for lit in lits:
            s = _lit_state(lit, funcs, preds, env)
            if s is True:
                break
            if s is None:
                undecided = True
        else:
            if not undecided:
                return True
    return False


def search_model(clauses, n):
    """Exhaustive backtracking over all cells of the interpretation; a branch
    is abandoned only once some ground clause instance is already false."""
    sig = signature_of(*clauses)
    instances = []
    for c in clauses:
        vs = sorted(c.variables())
        for vals in itertools.product(range(n), repeat=len(vs)):
            instances.append((c.literals, dict(zip(vs, vals))))
    cells = [("f", name, args) for name, a in sorted(sig.functions.items(), key=lambda x: (x[1], x[0]))
             for args in itertools.product(range(n), repeat=a)]
    cells += [("p", name, args) for name, a in sorted(sig.predicates.items())
              for args in itertools.product(range(n), repeat=a)]
    funcs = {name: {} for name in sig.functions}
    preds = {name: {} for name in sig.predicates}

    def go(i):
        if _falsified(instances, funcs, preds):
            return False
        if i == len(cells):
            return True
        kind, name, args = cells[i]
        table = funcs[name] if kind == "f" else preds[name]
        for v in (range(n) if kind == "f" else (False, True)):
            table[args] = v
            if go(i + 1):
                return True
            del table[args]
        return False

    if go(0):
        return {k: dict(v) for k, v in funcs.items()}, {k: dict(v) for k, v in preds.items()}
    return None


def brute_countermodel(premises, conclusion, max_n=4, max_cells=24):
    """Countermodel of ``premises |= conclusion`` over closed formulas by
    plain enumeration; returns (n, funcs, preds), or None when none exists up
    to the largest size small enough to enumerate."""
    sig = signature_of(*premises, conclusion)
    for n in range(1, max_n + 1):
        if interpretation_bits(sig, n) > max_cells:
            return None
        for funcs, preds in all_interpretations(sig, n):
            if all(holds(p, n, funcs, preds) for p in premises) and not holds(conclusion, n, funcs, preds):
                return n, funcs, preds
    return None



# ------------------------------------------- countermodels for obligations


def _matrix(f):
    vs = []
    while isinstance(f, Forall):
        vs.extend(f.vars)
        f = f.body
    return vs, f


def _quantifier_free(f):
    if isinstance(f, (Forall, Exists)):
        return False
    if isinstance(f, (Not,)):
        return _quantifier_free(f.arg)
    if isinstance(f, (And, Or)):
        return all(_quantifier_free(a) for a in f.args)
    if isinstance(f, (Implies, Iff)):
        return _quantifier_free(f.lhs) and _quantifier_free(f.rhs)
    return True


def _cnf(f, positive=True):
    """Clause list (lists of Literal) of a quantifier-free formula."""
    if isinstance(f, (Atom, Eq)):
        return [[Literal(positive, f)]]
    if isinstance(f, Not):
        return _cnf(f.arg, not positive)
    if isinstance(f, Top):
        return [] if positive else [[]]
    if isinstance(f, Bottom):
        return [[]] if positive else []
    if isinstance(f, Implies):
        return _cnf(Or((Not(f.lhs), f.rhs)), positive)
    if isinstance(f, Iff):
        return _cnf(And((Implies(f.lhs, f.rhs), Implies(f.rhs, f.lhs))), positive)
    conjunctive = isinstance(f, And) == positive
    parts = [_cnf(a, positive) for a in f.args]
    if conjunctive:
        return [c for p in parts for c in p]
    out = [[]]
    for p in parts:
        out = [a + b for a in out for b in p]
    return out


def _subst(t, sigma):
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    return Fn(t.name, tuple(_subst(a, sigma) for a in t.args))


def _subst_formula(f, sigma):
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(_subst(a, sigma) for a in f.args))
    if isinstance(f, Eq):
        return Eq(_subst(f.lhs, sigma), _subst(f.rhs, sigma))
    if isinstance(f, Not):
        return Not(_subst_formula(f.arg, sigma))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_subst_formula(a, sigma) for a in f.args))
    if isinstance(f, (Implies, Iff)):
        return type(f)(_subst_formula(f.lhs, sigma), _subst_formula(f.rhs, sigma))
    return f


def obligation_clauses(premises, conclusion):
    """Clauses of premises + negated conclusion when every formula is a
    universally closed quantifier-free matrix; None otherwise."""
    clauses = []
    for p in premises:
        _, m = _matrix(p)
        if not _quantifier_free(m):
            return None
        clauses.extend(Clause(c) for c in _cnf(m))
    vs, m = _matrix(conclusion)
    if not _quantifier_free(m):
        return None
    sigma = {v: Fn(f"cm_{v.lower()}") for v in vs}
    clauses.extend(Clause(c) for c in _cnf(_subst_formula(m, sigma), False))
    return clauses


def find_countermodel(premises, conclusion, max_n=4):
    """Smallest n <= max_n with a countermodel, or None if there is none
    (or none that this oracle can afford to look for)."""
    clauses = obligation_clauses(premises, conclusion)
    if clauses is None:
        found = brute_countermodel(premises, conclusion, max_n, max_cells=16)
        return None if found is None else found[0]
    for n in range(1, max_n + 1):
        if search_model(clauses, n) is not None:
            return n
    return None
