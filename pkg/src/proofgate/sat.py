"""Propositional CNF, a DPLL solver and ground abstraction of clause sets.

The solver does unit propagation over two watched literals and chronological
backtracking; there is no clause learning.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum

from proofgate.clausify import SkolemNamer, subst_term
from proofgate.syntax import Atom, Clause, Eq, Fn, Term, signature_of


class GroundingBudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class PropositionalCNF:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for c in self.clauses:
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")

    def to_dimacs(self, comments: list[str] = ()) -> str:
        lines = [f"c {c}" for c in comments]
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(map(str, c + (0,))) for c in self.clauses)
        return "\n".join(lines) + "\n"


class SatOutcome(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass
class SatResult:
    outcome: SatOutcome
    assignment: dict[int, bool] | None = None
    decisions: int = 0


def satisfies(cnf: PropositionalCNF, assignment: dict[int, bool]) -> bool:
    return all(any(assignment.get(abs(l), False) == (l > 0) for l in c) for c in cnf.clauses)


def dpll(cnf: PropositionalCNF, max_decisions: int | None = None, max_seconds: float | None = None) -> SatResult:
    n = cnf.num_vars
    clauses: list[list[int]] = []
    for c in cnf.clauses:
        lits = list(dict.fromkeys(c))
        if any(-l in lits for l in lits):
            continue
        if not lits:
            return SatResult(SatOutcome.UNSAT)
        clauses.append(lits)

    value: list[bool | None] = [None] * (n + 1)
    trail: list[int] = []
    watches: dict[int, list[int]] = {}
    units: list[int] = []
    for ci, c in enumerate(clauses):
        if len(c) == 1:
            units.append(c[0])
        else:
            watches.setdefault(c[0], []).append(ci)
            watches.setdefault(c[1], []).append(ci)

    def lit_value(l: int) -> bool | None:
        v = value[abs(l)]
        return v if v is None or l > 0 else not v

    def assign(l: int) -> bool:
        v = lit_value(l)
        if v is not None:
            return v
        value[abs(l)] = l > 0
        trail.append(l)
        return True

    for u in units:
        if not assign(u):
            return SatResult(SatOutcome.UNSAT)

    qhead = 0

    def propagate() -> bool:
        nonlocal qhead
        while qhead < len(trail):
            false_lit = -trail[qhead]
            qhead += 1
            watching = watches.get(false_lit, [])
            keep = []
            conflict = False
            for k, ci in enumerate(watching):
                if conflict:
                    keep.append(ci)
                    continue
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if lit_value(c[0]) is True:
                    keep.append(ci)
                    continue
                for j in range(2, len(c)):
                    if lit_value(c[j]) is not False:
                        c[1], c[j] = c[j], c[1]
                        watches.setdefault(c[1], []).append(ci)
                        break
                else:
                    keep.append(ci)
                    if lit_value(c[0]) is False:
                        conflict = True
                    else:
                        assign(c[0])
            watches[false_lit] = keep
            if conflict:
                return False
        return True

    occurrences = [0] * (n + 1)
    for c in clauses:
        for l in c:
            occurrences[abs(l)] += 1
    order = sorted(range(1, n + 1), key=lambda v: (-occurrences[v], v))

    decisions: list[list] = []  # [trail position, literal, flipped]
    deadline = None if max_seconds is None else time.monotonic() + max_seconds
    count = 0
    ptr = 0
    while True:
        if propagate():
            while ptr < len(order) and value[order[ptr]] is not None:
                ptr += 1
            if ptr == len(order):
                assignment = {v: bool(value[v]) for v in range(1, n + 1)}
                assert satisfies(cnf, assignment), "dpll produced a non-model"
                return SatResult(SatOutcome.SAT, assignment, count)
            count += 1
            if (max_decisions is not None and count > max_decisions) or (
                deadline is not None and count % 256 == 0 and time.monotonic() > deadline
            ):
                return SatResult(SatOutcome.BUDGET_EXHAUSTED, None, count)
            var = order[ptr]
            decisions.append([len(trail), var, False])
            assign(var)
            continue
        while decisions and decisions[-1][2]:
            decisions.pop()
        if not decisions:
            return SatResult(SatOutcome.UNSAT, None, count)
        top = decisions[-1]
        _undo(trail, value, top[0])
        qhead = top[0]
        ptr = 0
        top[1] = -top[1]
        top[2] = True
        assign(top[1])


def _undo(trail: list[int], value: list, pos: int) -> None:
    while len(trail) > pos:
        value[abs(trail.pop())] = None


# ------------------------------------------------------ ground abstraction


@dataclass
class GroundAbstraction:
    cnf: PropositionalCNF
    atoms: list[Atom | Eq]
    ground_clauses: list[Clause] = field(default_factory=list)
    fresh_constant: str | None = None

    def atom_table(self) -> dict[Atom | Eq, int]:
        return {a: i + 1 for i, a in enumerate(self.atoms)}

    def decode(self, assignment: dict[int, bool]) -> dict[Atom | Eq, bool]:
        return {a: assignment.get(i + 1, False) for i, a in enumerate(self.atoms)}


def ground_abstraction(clauses: list[Clause], max_instances: int = 10_000) -> GroundAbstraction:
    """Map ground atoms to propositional variables.

    Non-ground clauses are instantiated over the constants of the set (a
    fresh constant when there are none). Propositional UNSAT of the result
    implies first-order UNSAT of the input; SAT proves nothing.
    """
    sig = signature_of(*clauses)
    pool: list[Term] = [Fn(name) for name, arity in sorted(sig.functions.items()) if arity == 0]
    fresh = None
    if not pool:
        fresh = SkolemNamer(sig.symbols(), prefix="gnd").fresh()
        pool = [Fn(fresh)]
    ground: list[Clause] = []
    for c in clauses:
        vs = c.variables()
        if not vs:
            ground.append(c)
            continue
        if len(ground) + len(pool) ** len(vs) > max_instances:
            raise GroundingBudgetExceeded(f"more than {max_instances} ground instances")
        for combo in itertools.product(pool, repeat=len(vs)):
            sigma = dict(zip(vs, combo))
            ground.append(Clause(_ground_lit(l, sigma) for l in c.literals))
    table: dict[Atom | Eq, int] = {}
    out = []
    for c in ground:
        lits = []
        for l in c.literals:
            idx = table.setdefault(l.atom, len(table) + 1)
            lits.append(idx if l.positive else -idx)
        out.append(tuple(lits))
    return GroundAbstraction(PropositionalCNF(len(table), tuple(out)), list(table), ground, fresh)


def _ground_lit(l, sigma):
    from proofgate.syntax import Literal

    a = l.atom
    if isinstance(a, Eq):
        return Literal(l.positive, Eq(subst_term(a.lhs, sigma), subst_term(a.rhs, sigma)))
    return Literal(l.positive, Atom(a.pred, tuple(subst_term(t, sigma) for t in a.args)))
