"""Finite model search by flattening and grounding clauses into SAT.

Equality is identity on the domain (normal models). Every model returned
has been re-checked by direct evaluation against the original clauses.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum

from proofgate.sat import PropositionalCNF, SatOutcome, dpll
from proofgate.syntax import (
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
    Not,
    Or,
    Term,
    Top,
    Var,
    signature_of,
)

DEFAULT_MAX_DOMAIN = 4
DEFAULT_MAX_ENCODING = 400_000


class EvaluationError(Exception):
    """A symbol has no interpretation."""

    def __init__(self, symbol: str, kind: str):
        super().__init__(f"uninterpreted {kind} {symbol}")
        self.symbol = symbol
        self.kind = kind


@dataclass
class Interpretation:
    size: int
    functions: dict[str, dict[tuple[int, ...], int]] = field(default_factory=dict)
    predicates: dict[str, dict[tuple[int, ...], bool]] = field(default_factory=dict)

    def __post_init__(self):
        for table in list(self.functions.values()) + list(self.predicates.values()):
            arities = {len(k) for k in table}
            for arity in arities:
                if len(table) != self.size**arity:
                    raise ValueError("interpretation tables must be total")

    def term_value(self, t: Term, env: dict[str, int]) -> int:
        if isinstance(t, Var):
            try:
                return env[t.name]
            except KeyError:
                raise EvaluationError(t.name, "variable") from None
        table = self.functions.get(t.name)
        if table is None:
            raise EvaluationError(t.name, "function")
        return table[tuple(self.term_value(a, env) for a in t.args)]

    def to_text(self) -> str:
        lines = [f"domain = {{0..{self.size - 1}}}"]
        for name in sorted(self.functions):
            table = self.functions[name]
            if () in table:
                lines.append(f"{name} = {table[()]}")
            else:
                cells = ", ".join(f"({','.join(map(str, k))})->{v}" for k, v in sorted(table.items()))
                lines.append(f"{name}: {cells}")
        for name in sorted(self.predicates):
            table = self.predicates[name]
            if () in table:
                lines.append(f"{name}: {'true' if table[()] else 'false'}")
            else:
                true_rows = [f"({','.join(map(str, k))})" for k, v in sorted(table.items()) if v]
                lines.append(f"{name}: {{{', '.join(true_rows)}}}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "domain_size": self.size,
            "functions": {n: [[list(k), v] for k, v in sorted(t.items())] for n, t in sorted(self.functions.items())},
            "predicates": {n: [list(k) for k, v in sorted(t.items()) if v] for n, t in sorted(self.predicates.items())},
        }


def _holds(f: Formula, i: Interpretation, env: dict[str, int]) -> bool:
    if isinstance(f, Atom):
        table = i.predicates.get(f.pred)
        if table is None:
            raise EvaluationError(f.pred, "predicate")
        return table[tuple(i.term_value(a, env) for a in f.args)]
    if isinstance(f, Eq):
        return i.term_value(f.lhs, env) == i.term_value(f.rhs, env)
    if isinstance(f, Not):
        return not _holds(f.arg, i, env)
    if isinstance(f, And):
        return all(_holds(a, i, env) for a in f.args)
    if isinstance(f, Or):
        return any(_holds(a, i, env) for a in f.args)
    if isinstance(f, Implies):
        return not _holds(f.lhs, i, env) or _holds(f.rhs, i, env)
    if isinstance(f, Iff):
        return _holds(f.lhs, i, env) == _holds(f.rhs, i, env)
    if isinstance(f, (Forall, Exists)):
        combos = itertools.product(range(i.size), repeat=len(f.vars))
        test = all if isinstance(f, Forall) else any
        return test(_holds(f.body, i, {**env, **dict(zip(f.vars, c))}) for c in combos)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    raise TypeError(f"not a formula: {f!r}")


def evaluate(c: Clause | Formula, i: Interpretation, env: dict[str, int] | None = None) -> bool:
    """Truth of a clause (variables read universally) or a closed formula."""
    if isinstance(c, Clause):
        vs = c.variables()
        for combo in itertools.product(range(i.size), repeat=len(vs)):
            e = dict(zip(vs, combo))
            if not any(_holds(l.to_formula(), i, e) for l in c.literals):
                return False
        return True
    return _holds(c, i, env or {})


# ---------------------------------------------------------------- search


class ModelOutcome(str, Enum):
    MODEL = "MODEL"
    NO_MODEL_UP_TO = "NO_MODEL_UP_TO"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass
class ModelResult:
    outcome: ModelOutcome
    model: Interpretation | None = None
    max_size: int = 0  # largest domain size fully searched without a model
    size: int | None = None  # size of the model, or where the budget ran out


def _flatten(c: Clause):
    """Flat literals: ("p", pos, var-tuple), ("f", name, arg-vars, result-var)
    (always negative), ("eq", pos, v1, v2). Returns literals and variables."""
    names: dict[Term, str] = {}
    flat: list[tuple] = []
    counter = itertools.count()

    def var_of(t: Term) -> str:
        if isinstance(t, Var):
            return "V" + t.name
        if t in names:
            return names[t]
        args = tuple(var_of(a) for a in t.args)
        v = f"T{next(counter)}"
        names[t] = v
        flat.append(("f", t.name, args, v))
        return v

    for lit in c.literals:
        if isinstance(lit.atom, Eq):
            flat.append(("eq", lit.positive, var_of(lit.atom.lhs), var_of(lit.atom.rhs)))
        else:
            flat.append(("p", lit.positive, lit.atom.pred, tuple(var_of(a) for a in lit.atom.args)))
    vars_: dict[str, None] = {}
    for item in flat:
        if item[0] == "f":
            vars_.update(dict.fromkeys(item[2]))
            vars_.setdefault(item[3])
        elif item[0] == "eq":
            vars_.update(dict.fromkeys(item[2:]))
        else:
            vars_.update(dict.fromkeys(item[3]))
    return flat, list(vars_)


def _encode(clauses: list[Clause], n: int, max_encoding: int):
    sig = signature_of(*clauses)
    var_ids: dict[tuple, int] = {}

    def pvar(key: tuple) -> int:
        return var_ids.setdefault(key, len(var_ids) + 1)

    out: list[tuple[int, ...]] = []
    dom = range(n)
    for name, arity in sorted(sig.functions.items()):
        for args in itertools.product(dom, repeat=arity):
            vals = [pvar(("f", name, args, v)) for v in dom]
            out.append(tuple(vals))
            out.extend((-a, -b) for a, b in itertools.combinations(vals, 2))
    for name, arity in sorted(sig.predicates.items()):
        for args in itertools.product(dom, repeat=arity):
            pvar(("p", name, args))
    constants = sorted(k for k, a in sig.functions.items() if a == 0)
    if constants:
        out.append((pvar(("f", constants[0], (), 0)),))

    for c in clauses:
        flat, vs = _flatten(c)
        if len(out) + n ** len(vs) > max_encoding:
            return None, var_ids
        for combo in itertools.product(dom, repeat=len(vs)):
            env = dict(zip(vs, combo))
            lits: list[int] = []
            satisfied = False
            for item in flat:
                if item[0] == "eq":
                    if (env[item[2]] == env[item[3]]) == item[1]:
                        satisfied = True
                        break
                elif item[0] == "f":
                    lits.append(-pvar(("f", item[1], tuple(env[a] for a in item[2]), env[item[3]])))
                else:
                    v = pvar(("p", item[2], tuple(env[a] for a in item[3])))
                    lits.append(v if item[1] else -v)
            if not satisfied:
                out.append(tuple(dict.fromkeys(lits)))
    return out, var_ids


def _decode(assignment: dict[int, bool], var_ids: dict[tuple, int], clauses: list[Clause], n: int) -> Interpretation:
    sig = signature_of(*clauses)
    funcs: dict[str, dict] = {name: {} for name in sig.functions}
    preds: dict[str, dict] = {name: {} for name in sig.predicates}
    for key, idx in var_ids.items():
        if key[0] == "f":
            if assignment.get(idx):
                funcs[key[1]][key[2]] = key[3]
        else:
            preds[key[1]][key[2]] = bool(assignment.get(idx))
    return Interpretation(n, funcs, preds)


def find_model(
    clauses: list[Clause],
    max_size: int = DEFAULT_MAX_DOMAIN,
    max_encoding: int = DEFAULT_MAX_ENCODING,
    max_seconds: float | None = None,
    min_size: int = 1,
) -> ModelResult:
    """Search domain sizes ``min_size..max_size`` in increasing order."""
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    deadline = None if max_seconds is None else time.monotonic() + max_seconds
    searched = min_size - 1
    for n in range(min_size, max_size + 1):
        cnf_clauses, var_ids = _encode(clauses, n, max_encoding)
        if cnf_clauses is None:
            return ModelResult(ModelOutcome.BUDGET_EXHAUSTED, None, searched, n)
        remaining = None if deadline is None else max(deadline - time.monotonic(), 0.001)
        sat = dpll(PropositionalCNF(len(var_ids), tuple(cnf_clauses)), max_seconds=remaining)
        if sat.outcome is SatOutcome.BUDGET_EXHAUSTED:
            return ModelResult(ModelOutcome.BUDGET_EXHAUSTED, None, searched, n)
        if sat.outcome is SatOutcome.SAT:
            model = _decode(sat.assignment, var_ids, clauses, n)
            if not all(evaluate(c, model) for c in clauses):
                raise AssertionError("model finder produced an interpretation that falsifies a clause")
            return ModelResult(ModelOutcome.MODEL, model, searched, n)
        searched = n
    return ModelResult(ModelOutcome.NO_MODEL_UP_TO, None, searched)
