"""Bounded given-clause refutation prover.

Unordered binary resolution plus factoring, no literal selection, forward
subsumption only. Equality is handled by adding congruence axioms. The
calculus is deliberately plain: with no selection restrictions an empty
passive set means the clause set is saturated up to the simplifications
described below.

Given clauses are picked lightest first (symbol weight, then age), with
every fifth pick taken by age alone so that no clause waits forever.
Weight rather than literal count matters with axiomatic equality: the
congruence axioms spawn an endless supply of ever deeper unit equations.

Inferences follow the set-of-support restriction: every inference needs a
parent descended from the input clauses, so the equality axioms are never
resolved with each other. The axioms alone are satisfiable, which keeps the
restriction refutation complete. Forward subsumption only consults
supported clauses.

A supported clause with a literal ``t != t`` is replaced by its resolvent
with the reflexivity axiom, recorded as an ordinary resolution step so
that traces still replay. Only syntactically identical sides qualify:
eliminating ``X != t`` in general would cut the transitivity chains that
axiomatic equality depends on.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from enum import Enum

from proofgate.syntax import Atom, Clause, Eq, Fn, Literal, Signature, Term, Var, signature_of

DEFAULT_MAX_CLAUSES = 50_000
DEFAULT_MAX_SECONDS = 5.0
AGE_PICK_EVERY = 5


class Outcome(str, Enum):
    REFUTED = "REFUTED"
    SATURATED = "SATURATED"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass(frozen=True)
class Budget:
    max_clauses: int = DEFAULT_MAX_CLAUSES
    max_seconds: float = DEFAULT_MAX_SECONDS

    def __post_init__(self):
        if self.max_clauses <= 0 or self.max_seconds <= 0:
            raise ValueError("budgets must be strictly positive")


# ---------------------------------------------------------- unification


def walk(t: Term, s: dict[str, Term]) -> Term:
    while isinstance(t, Var) and t.name in s:
        t = s[t.name]
    return t


def apply(t: Term, s: dict[str, Term]) -> Term:
    t = walk(t, s)
    if isinstance(t, Var) or not t.args:
        return t
    return Fn(t.name, tuple(apply(a, s) for a in t.args))


def _occurs(name: str, t: Term, s: dict[str, Term]) -> bool:
    stack = [t]
    while stack:
        u = walk(stack.pop(), s)
        if isinstance(u, Var):
            if u.name == name:
                return True
        else:
            stack.extend(u.args)
    return False


def unify(a: Term, b: Term, s: dict[str, Term] | None = None) -> dict[str, Term] | None:
    """Most general unifier extending ``s`` (triangular form), or None."""
    s = dict(s or {})
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = walk(x, s), walk(y, s)
        if x == y:
            continue
        if isinstance(x, Var):
            if _occurs(x.name, y, s):
                return None
            s[x.name] = y
        elif isinstance(y, Var):
            if _occurs(y.name, x, s):
                return None
            s[y.name] = x
        elif x.name != y.name or len(x.args) != len(y.args):
            return None
        else:
            stack.extend(zip(x.args, y.args))
    return s


def unify_args(xs, ys, s=None):
    if len(xs) != len(ys):
        return None
    s = dict(s or {})
    for x, y in zip(xs, ys):
        s = unify(x, y, s)
        if s is None:
            return None
    return s


def match(pattern: Term, target: Term, s: dict[str, Term]) -> dict[str, Term] | None:
    """One-way matching: bind variables of ``pattern`` only."""
    stack = [(pattern, target)]
    s = dict(s)
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            bound = s.get(p.name)
            if bound is None:
                s[p.name] = t
            elif bound != t:
                return None
        elif isinstance(t, Var) or p.name != t.name or len(p.args) != len(t.args):
            return None
        else:
            stack.extend(zip(p.args, t.args))
    return s


# -------------------------------------------------------------- literals


def make_literal(positive: bool, pred: str, args: tuple[Term, ...]) -> Literal:
    if pred == "=":
        return Literal(positive, Eq(args[0], args[1]))
    return Literal(positive, Atom(pred, args))


def apply_literal(lit: Literal, s: dict[str, Term]) -> Literal:
    return make_literal(lit.positive, lit.pred, tuple(apply(a, s) for a in lit.args))


def rename_clause(c: Clause, fresh) -> tuple[Clause, dict[str, str]]:
    ren = {v: fresh() for v in c.variables()}
    sub = {k: Var(v) for k, v in ren.items()}
    return Clause(apply_literal(l, sub) for l in c.literals), ren


def is_tautology(c: Clause, reflexive: bool = True) -> bool:
    """Complementary pair, or (with ``reflexive``) a positive ``t = t``.

    The engine passes ``reflexive=False``: it treats ``=`` as an ordinary
    predicate, so deleting ``X = X`` would throw away the reflexivity axiom.
    Such clauses are subsumed by that axiom anyway.
    """
    lits = set(c.literals)
    for lit in c.literals:
        if lit.negate() in lits:
            return True
        if reflexive and lit.positive and isinstance(lit.atom, Eq) and lit.atom.lhs == lit.atom.rhs:
            return True
    return False


def _lit_match(p: Literal, t: Literal, s):
    if p.positive != t.positive or p.pred != t.pred or len(p.args) != len(t.args):
        return None
    for a, b in zip(p.args, t.args):
        s = match(a, b, s)
        if s is None:
            return None
    return s


def _flat(c: Clause) -> list[tuple]:
    return [(l.positive, l.pred, l.args) for l in c.literals]


def subsumes(d: Clause, c: Clause) -> bool:
    """True when some instance of ``d`` is a subset of ``c``."""
    return _subsumes_flat(_flat(d), _flat(c))


SUBSUMPTION_NODE_LIMIT = 500


def _subsumes_flat(dl: list[tuple], cl: list[tuple]) -> bool:
    """Backtracking match of ``dl`` into ``cl``. Gives up (answers False,
    which only keeps a redundant clause) after SUBSUMPTION_NODE_LIMIT
    partial matches."""
    cands = []
    for pos, pred, args in dl:
        row = [t[2] for t in cl if t[0] == pos and t[1] == pred and len(t[2]) == len(args)]
        if not row:
            return False
        cands.append(row)
    # most constrained literal first
    order = sorted(range(len(dl)), key=lambda i: len(cands[i]))

    nodes = [SUBSUMPTION_NODE_LIMIT]

    def go(k: int, s) -> bool:
        if k == len(order):
            return True
        nodes[0] -= 1
        if nodes[0] < 0:
            return False
        i = order[k]
        pargs = dl[i][2]
        for targs in cands[i]:
            s2 = s
            for a, b in zip(pargs, targs):
                s2 = match(a, b, s2)
                if s2 is None:
                    break
            if s2 is not None and go(k + 1, s2):
                return True
        return False

    return go(0, {})


def is_variant(a: Clause, b: Clause) -> bool:
    """Equal up to a bijective renaming of variables."""
    if len(a) != len(b):
        return False
    al, bl = a.literals, b.literals

    def go(i: int, fwd: dict, back: dict, used: frozenset) -> bool:
        if i == len(al):
            return True
        for j, t in enumerate(bl):
            if j in used:
                continue
            s = _lit_match(al[i], t, fwd)
            if s is None or not all(isinstance(v, Var) for v in s.values()):
                continue
            inv = dict(back)
            ok = True
            for k, v in s.items():
                if inv.setdefault(v.name, k) != k:
                    ok = False
                    break
            if ok and go(i + 1, s, inv, used | {j}):
                return True
        return False

    return go(0, {}, {}, frozenset())


# ------------------------------------------------------- equality axioms


def equality_axioms(sig: Signature) -> list[Clause]:
    """Reflexivity, symmetry, transitivity and one congruence clause per
    argument position of every function and predicate symbol."""
    X, Y, Z = Var("X"), Var("Y"), Var("Z")

    def eq(a, b, pos=True):
        return Literal(pos, Eq(a, b))

    axioms = [
        Clause([eq(X, X)]),
        Clause([eq(X, Y, False), eq(Y, X)]),
        Clause([eq(X, Y, False), eq(Y, Z, False), eq(X, Z)]),
    ]
    for name, arity in sorted(sig.functions.items()):
        for i in range(arity):
            others = [Var(f"A{k}") for k in range(arity)]
            left = tuple(X if k == i else others[k] for k in range(arity))
            right = tuple(Y if k == i else others[k] for k in range(arity))
            axioms.append(Clause([eq(X, Y, False), eq(Fn(name, left), Fn(name, right))]))
    for name, arity in sorted(sig.predicates.items()):
        for i in range(arity):
            others = [Var(f"A{k}") for k in range(arity)]
            left = tuple(X if k == i else others[k] for k in range(arity))
            right = tuple(Y if k == i else others[k] for k in range(arity))
            axioms.append(Clause([eq(X, Y, False), Literal(False, Atom(name, left)), Literal(True, Atom(name, right))]))
    return axioms


def uses_equality(clauses) -> bool:
    return any(isinstance(l.atom, Eq) for c in clauses for l in c.literals)


# ---------------------------------------------------------------- search


@dataclass
class Step:
    id: int
    clause: Clause
    rule: str  # input | axiom | resolution | factoring
    parents: tuple[int, ...] = ()
    indices: tuple[int, ...] = ()
    unifier: dict[str, Term] = field(default_factory=dict)
    renaming: dict[str, str] = field(default_factory=dict)
    support: bool = True


@dataclass
class RefutationResult:
    outcome: Outcome
    trace: list[Step] = field(default_factory=list)
    generated: int = 0
    kept: int = 0
    iterations: int = 0
    elapsed: float = 0.0

    @property
    def stats(self) -> dict:
        return {"generated": self.generated, "kept": self.kept, "iterations": self.iterations}


class _Index:
    """Kept clauses for forward subsumption.

    A ground clause subsumes C exactly when its literals are a subset of
    C's, so ground clauses are found by hashing. Other clauses are filed
    under the shape (polarity, predicate, top symbols) of their most
    specific literal and looked up through every generalization of the
    shapes of C's literals.
    """

    MAX_SHAPE_ARITY = 4

    def __init__(self):
        self.ground: dict[Literal, list[frozenset]] = {}
        self.general: dict[tuple, list[tuple[int, list[tuple]]]] = {}

    def add(self, c: Clause) -> None:
        if c.is_ground():
            lits = frozenset(c.literals)
            self.ground.setdefault(min(lits, key=str), []).append(lits)
            return
        shapes = [_shape(l) for l in c.literals]
        key = max(shapes, key=lambda sh: (sum(x is not None for x in sh[2]), str(sh)))
        if len(key[2]) > self.MAX_SHAPE_ARITY:
            key = (key[0], key[1], (None,) * len(key[2]))
        self.general.setdefault(key, []).append((len(c), _flat(c)))

    def subsumed(self, c: Clause) -> bool:
        lits = frozenset(c.literals)
        for lit in c.literals:
            for d in self.ground.get(lit, ()):
                if d <= lits:
                    return True
        if not self.general:
            return False
        n = len(c)
        flat = _flat(c)
        seen: set[tuple] = set()
        for lit in c.literals:
            for key in self._generalizations(_shape(lit)):
                if key in seen:
                    continue
                seen.add(key)
                for size, d in self.general.get(key, ()):
                    if size <= n and _subsumes_flat(d, flat):
                        return True
        return False

    def _generalizations(self, shape: tuple):
        pos, pred, tops = shape
        if len(tops) > self.MAX_SHAPE_ARITY:
            yield (pos, pred, (None,) * len(tops))
            return
        for mask in itertools.product((False, True), repeat=len(tops)):
            yield (pos, pred, tuple(None if m else t for m, t in zip(mask, tops)))


def _weight(c: Clause) -> int:
    """Literal count plus term symbol occurrences."""
    n = len(c)
    stack = [t for l in c.literals for t in l.args]
    while stack:
        t = stack.pop()
        n += 1
        if isinstance(t, Fn):
            stack.extend(t.args)
    return n


def _shape(l: Literal) -> tuple:
    return (l.positive, l.pred, tuple(t.name if isinstance(t, Fn) else None for t in l.args))


def _keys(c: Clause) -> frozenset:
    return frozenset((l.positive, l.pred) for l in c.literals)


def refute(
    clauses: list[Clause],
    budget: Budget | None = None,
    equality: bool = True,
) -> RefutationResult:
    """Saturate ``clauses``; REFUTED carries a replayable derivation trace."""
    budget = budget or Budget()
    start = time.monotonic()
    deadline = start + budget.max_seconds
    counter = itertools.count()

    def fresh() -> str:
        return f"_V{next(counter)}"

    steps: dict[int, Step] = {}
    passive: set[int] = set()
    by_weight: list[tuple[int, int]] = []
    by_age: list[int] = []
    active: list[int] = []
    index = _Index()
    res = RefutationResult(Outcome.BUDGET_EXHAUSTED)

    def finish(outcome: Outcome, last: int | None = None) -> RefutationResult:
        res.outcome = outcome
        res.elapsed = time.monotonic() - start
        if last is not None:
            res.trace = _extract(steps, last)
        return res

    def keep(step: Step) -> bool:
        steps[step.id] = step
        passive.add(step.id)
        heapq.heappush(by_weight, (_weight(step.clause), step.id))
        heapq.heappush(by_age, step.id)
        if step.support:
            index.add(step.clause)
        res.kept += 1
        return res.kept > budget.max_clauses

    def consider(clause: Clause, rule, parents=(), indices=(), unifier=None, renaming=None, support=True):
        """Returns the new step id if the empty clause was derived."""
        res.generated += 1
        if is_tautology(clause, reflexive=False) or index.subsumed(clause):
            return None
        renamed, _ = rename_clause(clause, fresh)
        sid = len(steps)
        step = Step(sid, renamed, rule, parents, indices, unifier or {}, renaming or {}, support)
        if support and refl:
            found = _trivial_disequation(renamed)
            if found is not None:
                # recorded for the trace, never kept
                steps[sid] = step
                i, mgu, t = found
                rid = refl[0]
                (rv,) = steps[rid].clause.variables()
                mgu = {**mgu, rv: t}
                rest = Clause(apply_literal(l, mgu) for k, l in enumerate(renamed.literals) if k != i)
                return consider(rest, "resolution", (sid, rid), (i, 0), mgu)
        if renamed.is_empty:
            steps[sid] = step
            return sid
        if keep(step):
            raise _OutOfBudget
        return None

    inputs = list(clauses)
    extra = equality_axioms(signature_of(*inputs)) if equality and uses_equality(inputs) else []
    refl: list[int] = []
    try:
        for rule, group in (("axiom", extra), ("input", inputs)):
            for c in group:
                hit = consider(c, rule, support=rule == "input")
                if hit is not None:
                    return finish(Outcome.REFUTED, hit)
                if rule == "axiom" and not refl:
                    refl.append(len(steps) - 1)

        while passive:
            if time.monotonic() > deadline:
                return finish(Outcome.BUDGET_EXHAUSTED)
            res.iterations += 1
            heap = by_age if res.iterations % AGE_PICK_EVERY == 0 else by_weight
            while True:
                item = heapq.heappop(heap)
                gid = item if isinstance(item, int) else item[1]
                if gid in passive:
                    break
            passive.discard(gid)
            active.append(gid)
            given = steps[gid].clause
            supported = steps[gid].support

            for new in _factors(given) if supported else ():
                hit = consider(new[0], "factoring", (gid,), new[1], new[2])
                if hit is not None:
                    return finish(Outcome.REFUTED, hit)
            for aid in list(active):
                if not (supported or steps[aid].support):
                    continue
                # kept clauses are renamed apart already; only a self-pairing needs a copy
                if aid == gid:
                    other, ren = rename_clause(given, fresh)
                else:
                    other, ren = steps[aid].clause, {}
                for resolvent, idx, mgu in _resolvents(given, other):
                    hit = consider(resolvent, "resolution", (gid, aid), idx, mgu, ren)
                    if hit is not None:
                        return finish(Outcome.REFUTED, hit)
                if time.monotonic() > deadline:
                    return finish(Outcome.BUDGET_EXHAUSTED)
    except _OutOfBudget:
        return finish(Outcome.BUDGET_EXHAUSTED)
    return finish(Outcome.SATURATED)


class _OutOfBudget(Exception):
    pass


def _trivial_disequation(c: Clause):
    """(index, {}, t) for the first literal t != t."""
    for i, l in enumerate(c.literals):
        if not l.positive and isinstance(l.atom, Eq) and l.atom.lhs == l.atom.rhs:
            return i, {}, l.atom.lhs
    return None


def _factors(c: Clause):
    lits = c.literals
    for i, j in itertools.combinations(range(len(lits)), 2):
        a, b = lits[i], lits[j]
        if a.positive != b.positive or a.pred != b.pred:
            continue
        mgu = unify_args(a.args, b.args)
        if mgu is None:
            continue
        rest = [apply_literal(l, mgu) for k, l in enumerate(lits) if k != j]
        yield Clause(rest), (i, j), mgu


def _resolvents(c: Clause, d: Clause):
    for i, a in enumerate(c.literals):
        for j, b in enumerate(d.literals):
            if a.positive == b.positive or a.pred != b.pred:
                continue
            mgu = unify_args(a.args, b.args)
            if mgu is None:
                continue
            rest = [l for k, l in enumerate(c.literals) if k != i]
            rest += [l for k, l in enumerate(d.literals) if k != j]
            yield Clause(apply_literal(l, mgu) for l in rest), (i, j), mgu


def _extract(steps: dict[int, Step], last: int) -> list[Step]:
    needed: set[int] = set()
    stack = [last]
    while stack:
        n = stack.pop()
        if n not in needed:
            needed.add(n)
            stack.extend(steps[n].parents)
    return [steps[n] for n in sorted(needed)]


def replay_step(step: Step, by_id: dict[int, Step]) -> bool:
    """Re-derive ``step`` from its parents with the recorded unifier."""
    if step.rule in ("input", "axiom"):
        return True
    s = step.unifier
    if step.rule == "factoring":
        (pid,) = step.parents
        parent = by_id[pid].clause.literals
        i, j = step.indices
        a, b = apply_literal(parent[i], s), apply_literal(parent[j], s)
        if a != b:
            return False
        concl = Clause(apply_literal(l, s) for k, l in enumerate(parent) if k != j)
        return is_variant(concl, step.clause)
    if step.rule == "resolution":
        p1, p2 = step.parents
        left = by_id[p1].clause.literals
        ren = {k: Var(v) for k, v in step.renaming.items()}
        right = [apply_literal(l, ren) for l in by_id[p2].clause.literals]
        i, j = step.indices
        a, b = apply_literal(left[i], s), apply_literal(right[j], s)
        if a != b.negate():
            return False
        rest = [l for k, l in enumerate(left) if k != i] + [l for k, l in enumerate(right) if k != j]
        return is_variant(Clause(apply_literal(l, s) for l in rest), step.clause)
    return False


def replay_trace(trace: list[Step]) -> bool:
    by_id = {s.id: s for s in trace}
    return bool(trace) and trace[-1].clause.is_empty and all(replay_step(s, by_id) for s in trace)
