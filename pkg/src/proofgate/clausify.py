"""Clausification: NNF, miniscoping, Skolemization and CNF by distribution.

No definitional naming is performed; a clause budget guards the
exponential case instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal as Lit

from proofgate.syntax import (
    FALSE,
    TRUE,
    And,
    Atom,
    Bottom,
    Clause,
    Eq,
    Exists,
    Fn,
    Forall,
    Formula,
    Iff,
    Implies,
    Literal,
    Not,
    Or,
    Term,
    Top,
    Var,
    free_vars,
    signature_of,
)

DEFAULT_CLAUSE_BUDGET = 100_000

SkolemMode = Lit["correct", "buggy-for-test"]


class ClauseBudgetExceeded(Exception):
    """Distribution would produce more clauses than allowed."""


# ------------------------------------------------------------------ nnf


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form; ``=>`` and ``<=>`` are expanded away."""
    if isinstance(f, (Atom, Eq)):
        return f if positive else Not(f)
    if isinstance(f, Top):
        return TRUE if positive else FALSE
    if isinstance(f, Bottom):
        return FALSE if positive else TRUE
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    if isinstance(f, (And, Or)):
        keep = isinstance(f, And) == positive
        parts = tuple(nnf(a, positive) for a in f.args)
        return And(parts) if keep else Or(parts)
    if isinstance(f, Implies):
        if positive:
            return Or((nnf(f.lhs, False), nnf(f.rhs, True)))
        return And((nnf(f.lhs, True), nnf(f.rhs, False)))
    if isinstance(f, Iff):
        a, b = f.lhs, f.rhs
        if positive:
            return And((Or((nnf(a, False), nnf(b))), Or((nnf(b, False), nnf(a)))))
        return And((Or((nnf(a), nnf(b))), Or((nnf(a, False), nnf(b, False)))))
    if isinstance(f, Forall):
        return Forall(f.vars, nnf(f.body, positive)) if positive else Exists(f.vars, nnf(f.body, False))
    if isinstance(f, Exists):
        return Exists(f.vars, nnf(f.body, positive)) if positive else Forall(f.vars, nnf(f.body, False))
    raise TypeError(f"not a formula: {f!r}")


# ------------------------------------------------------------ miniscope


def miniscope(f: Formula) -> Formula:
    """Push quantifiers inwards past subformulas that do not use them."""
    if isinstance(f, (And, Or)):
        return type(f)(tuple(miniscope(a) for a in f.args))
    if isinstance(f, Not):
        return Not(miniscope(f.arg))
    if isinstance(f, (Forall, Exists)):
        body = miniscope(f.body)
        for v in reversed(f.vars):
            body = _push(type(f), v, body)
        return body
    return f


def _push(q: type, v: str, body: Formula) -> Formula:
    if v not in free_vars(body):
        return body
    if isinstance(body, q):
        # same quantifier: Qx Qy B == Qy Qx B
        return q(body.vars, _push(q, v, body.body))
    if isinstance(body, (And, Or)):
        distributes = (q is Forall) == isinstance(body, And)
        if distributes:
            return type(body)(tuple(_push(q, v, a) for a in body.args))
        users = [i for i, a in enumerate(body.args) if v in free_vars(a)]
        if len(users) < len(body.args):
            if len(users) == 1:
                pushed = _push(q, v, body.args[users[0]])
            else:
                pushed = q((v,), type(body)(tuple(body.args[i] for i in users)))
            parts = []
            for i, a in enumerate(body.args):
                if i == users[0]:
                    parts.append(pushed)
                elif i not in users:
                    parts.append(a)
            return type(body)(tuple(parts))
    return q((v,), body)


# --------------------------------------------------------- substitution


def subst_term(t: Term, sigma: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if not t.args:
        return t
    return Fn(t.name, tuple(subst_term(a, sigma) for a in t.args))


def subst_formula(f: Formula, sigma: dict[str, Term]) -> Formula:
    """Substitute free variables; assumes bound names do not clash with sigma."""
    if not sigma:
        return f
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(subst_term(a, sigma) for a in f.args))
    if isinstance(f, Eq):
        return Eq(subst_term(f.lhs, sigma), subst_term(f.rhs, sigma))
    if isinstance(f, Not):
        return Not(subst_formula(f.arg, sigma))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(subst_formula(a, sigma) for a in f.args))
    if isinstance(f, (Implies, Iff)):
        return type(f)(subst_formula(f.lhs, sigma), subst_formula(f.rhs, sigma))
    if isinstance(f, (Forall, Exists)):
        inner = {k: v for k, v in sigma.items() if k not in f.vars}
        return type(f)(f.vars, subst_formula(f.body, inner))
    return f


def standardize_apart(f: Formula, taken: set[str] | None = None) -> Formula:
    """Give every quantifier its own variable names, distinct from free ones."""
    used = set(free_vars(f)) | (taken or set())

    def fresh(name: str) -> str:
        if name not in used:
            used.add(name)
            return name
        k = 1
        while f"{name}_{k}" in used:
            k += 1
        used.add(f"{name}_{k}")
        return f"{name}_{k}"

    def go(g: Formula, ren: dict[str, Term]) -> Formula:
        if isinstance(g, (Atom, Eq)):
            return subst_formula(g, ren)
        if isinstance(g, Not):
            return Not(go(g.arg, ren))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(a, ren) for a in g.args))
        if isinstance(g, (Implies, Iff)):
            return type(g)(go(g.lhs, ren), go(g.rhs, ren))
        if isinstance(g, (Forall, Exists)):
            inner = dict(ren)
            names = []
            for v in g.vars:
                n = fresh(v)
                names.append(n)
                inner[v] = Var(n)
            return type(g)(tuple(names), go(g.body, inner))
        return g

    return go(f, {})


# ------------------------------------------------------------- skolemize


@dataclass(frozen=True)
class SkolemEntry:
    variable: str
    symbol: str
    dependencies: tuple[str, ...]


@dataclass
class SkolemMap:
    entries: list[SkolemEntry] = field(default_factory=list)
    sigma: dict[str, Term] = field(default_factory=dict)

    @property
    def symbols(self) -> list[str]:
        return [e.symbol for e in self.entries]


class SkolemNamer:
    """Hands out ``skN`` names that avoid every symbol in ``taken``."""

    def __init__(self, taken: set[str] | None = None, prefix: str = "sk"):
        self.taken = set(taken or ())
        self.prefix = prefix
        self.counter = 0

    def fresh(self) -> str:
        while True:
            name = f"{self.prefix}{self.counter}"
            self.counter += 1
            if name not in self.taken:
                self.taken.add(name)
                return name


def skolemize(
    f: Formula,
    mode: SkolemMode = "correct",
    namer: SkolemNamer | None = None,
) -> tuple[Formula, SkolemMap]:
    """Replace existentials of an NNF formula by Skolem terms.

    Each Skolem function takes the enclosing universal variables that occur
    in the quantified subformula *after* earlier Skolem substitutions.
    ``buggy-for-test`` ignores those substitutions when computing
    dependencies, which loses dependencies inherited through earlier Skolem
    terms; it exists only as a regression oracle.
    """
    if mode not in ("correct", "buggy-for-test"):
        raise ValueError(f"unknown Skolemization mode {mode!r}")
    f = standardize_apart(f)
    if namer is None:
        namer = SkolemNamer(signature_of(f).symbols())
    else:
        namer.taken |= signature_of(f).symbols()
    smap = SkolemMap()

    def go(g: Formula, universals: list[str], sigma: dict[str, Term]) -> Formula:
        if isinstance(g, (Atom, Eq)):
            return subst_formula(g, sigma)
        if isinstance(g, Not):
            return Not(go(g.arg, universals, sigma))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(a, universals, sigma) for a in g.args))
        if isinstance(g, Forall):
            return Forall(g.vars, go(g.body, universals + list(g.vars), sigma))
        if isinstance(g, Exists):
            for k, v in enumerate(g.vars):
                scope = Exists(g.vars[k + 1:], g.body) if k + 1 < len(g.vars) else g.body
                if mode == "correct":
                    scope = subst_formula(scope, sigma)
                occurring = set(free_vars(scope))
                deps = tuple(u for u in universals if u in occurring)
                sym = namer.fresh()
                sigma = {**sigma, v: Fn(sym, tuple(Var(u) for u in deps))}
                smap.entries.append(SkolemEntry(v, sym, deps))
            return go(g.body, universals, sigma)
        if isinstance(g, (Implies, Iff)):
            raise ValueError("skolemize expects a formula in negation normal form")
        return g

    out = go(f, list(free_vars(f)), {})
    smap.sigma = {e.variable: _final(e.variable, smap) for e in smap.entries}
    return out, smap


def _final(v: str, smap: SkolemMap) -> Term:
    e = next(x for x in smap.entries if x.variable == v)
    return Fn(e.symbol, tuple(Var(u) for u in e.dependencies))


def strip_universals(f: Formula) -> Formula:
    if isinstance(f, Forall):
        return strip_universals(f.body)
    if isinstance(f, (And, Or)):
        return type(f)(tuple(strip_universals(a) for a in f.args))
    if isinstance(f, Not):
        return Not(strip_universals(f.arg))
    if isinstance(f, Exists):
        raise ValueError("existential quantifier left after Skolemization")
    return f


# ------------------------------------------------------------------ cnf


def cnf(f: Formula, budget: int = DEFAULT_CLAUSE_BUDGET) -> list[Clause]:
    """Clauses of a quantifier-free NNF formula, distributing ``|`` over ``&``."""
    raw = _cnf(f, budget)
    return list(dict.fromkeys(Clause(c) for c in raw))


def _cnf(f: Formula, budget: int) -> list[tuple[Literal, ...]]:
    if isinstance(f, (Atom, Eq)):
        return [(Literal(True, f),)]
    if isinstance(f, Not) and isinstance(f.arg, (Atom, Eq)):
        return [(Literal(False, f.arg),)]
    if isinstance(f, Top):
        return []
    if isinstance(f, Bottom):
        return [()]
    if isinstance(f, And):
        out: list[tuple[Literal, ...]] = []
        for a in f.args:
            out.extend(_cnf(a, budget))
            if len(out) > budget:
                raise ClauseBudgetExceeded(f"more than {budget} clauses")
        return out
    if isinstance(f, Or):
        acc: list[tuple[Literal, ...]] = [()]
        for a in f.args:
            part = _cnf(a, budget)
            if len(acc) * len(part) > budget:
                raise ClauseBudgetExceeded(f"more than {budget} clauses")
            acc = [x + y for x in acc for y in part]
        return acc
    if isinstance(f, (Forall, Exists, Implies, Iff, Not)):
        raise ValueError(f"cnf expects a quantifier-free NNF formula, got {type(f).__name__}")
    raise TypeError(f"not a formula: {f!r}")


def clausify(
    formulas: list[Formula],
    budget: int = DEFAULT_CLAUSE_BUDGET,
    mode: SkolemMode = "correct",
) -> tuple[list[Clause], SkolemMap]:
    """Clause set of the conjunction of ``formulas`` (free variables read
    universally); Skolem symbols are fresh across all of them."""
    namer = SkolemNamer(signature_of(*formulas).symbols())
    clauses: list[Clause] = []
    combined = SkolemMap()
    for f in formulas:
        g = miniscope(nnf(f))
        sk, smap = skolemize(g, mode, namer)
        combined.entries.extend(smap.entries)
        combined.sigma.update(smap.sigma)
        clauses.extend(cnf(strip_universals(sk), budget))
        if len(clauses) > budget:
            raise ClauseBudgetExceeded(f"more than {budget} clauses")
    return list(dict.fromkeys(clauses)), combined
