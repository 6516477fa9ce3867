"""First-order terms, formulas and clauses.

All node types are frozen dataclasses, so structural equality and hashing
come for free and values can be shared between threads and processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Union

# ---------------------------------------------------------------- terms


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Fn:
    """Function application; constants are 0-ary applications.

    Numerals are 0-ary applications whose name is the canonical numeral
    text (``"3"``, ``"-7"``, ``"1/2"``).
    """

    name: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        from proofgate.tptp import print_term

        return print_term(self)


Term = Union[Var, Fn]


def is_numeral(name: str) -> bool:
    head = name[1:] if name.startswith("-") else name
    return bool(head) and head[0].isdigit()


def numeral_name(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ------------------------------------------------------------- formulas


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True, slots=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True, slots=True)
class Not:
    arg: Formula


@dataclass(frozen=True, slots=True)
class And:
    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Implies:
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True, slots=True)
class Iff:
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True, slots=True)
class Forall:
    vars: tuple[str, ...]
    body: Formula


@dataclass(frozen=True, slots=True)
class Exists:
    vars: tuple[str, ...]
    body: Formula


@dataclass(frozen=True, slots=True)
class Top:
    pass


@dataclass(frozen=True, slots=True)
class Bottom:
    pass


TRUE = Top()
FALSE = Bottom()

Formula = Union[Atom, Eq, Not, And, Or, Implies, Iff, Forall, Exists, Top, Bottom]
Quantified = (Forall, Exists)


def conj(parts: list[Formula]) -> Formula:
    """Conjunction with the degenerate arities folded away."""
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


def disj(parts: list[Formula]) -> Formula:
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Or(tuple(parts))


# ------------------------------------------------------ traversal helpers


def term_vars(t: Term, acc: dict[str, None] | None = None) -> dict[str, None]:
    """Variables of ``t`` in first-occurrence order (an ordered set)."""
    if acc is None:
        acc = {}
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            acc.setdefault(s.name)
        else:
            stack.extend(reversed(s.args))
    return acc


def free_vars(f: Formula) -> list[str]:
    """Free variables of ``f`` in order of first occurrence."""
    out: dict[str, None] = {}

    def go(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, Atom):
            for a in g.args:
                for v in term_vars(a):
                    if v not in bound:
                        out.setdefault(v)
        elif isinstance(g, Eq):
            for a in (g.lhs, g.rhs):
                for v in term_vars(a):
                    if v not in bound:
                        out.setdefault(v)
        elif isinstance(g, Not):
            go(g.arg, bound)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                go(a, bound)
        elif isinstance(g, (Implies, Iff)):
            go(g.lhs, bound)
            go(g.rhs, bound)
        elif isinstance(g, Quantified):
            go(g.body, bound | set(g.vars))

    go(f, frozenset())
    return list(out)


def closure(f: Formula) -> Formula:
    """Universal closure; closed formulas are returned unchanged."""
    fv = free_vars(f)
    return Forall(tuple(fv), f) if fv else f


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Fn):
        for a in t.args:
            yield from subterms(a)


def formula_atoms(f: Formula) -> Iterator[Atom | Eq]:
    if isinstance(f, (Atom, Eq)):
        yield f
    elif isinstance(f, Not):
        yield from formula_atoms(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from formula_atoms(a)
    elif isinstance(f, (Implies, Iff)):
        yield from formula_atoms(f.lhs)
        yield from formula_atoms(f.rhs)
    elif isinstance(f, Quantified):
        yield from formula_atoms(f.body)


@dataclass(frozen=True)
class Signature:
    """Symbol names with arities, kept apart for functions and predicates."""

    functions: dict[str, int] = field(default_factory=dict)
    predicates: dict[str, int] = field(default_factory=dict)

    def symbols(self) -> set[str]:
        return set(self.functions) | set(self.predicates)

    def uninterpreted(self) -> set[str]:
        """Symbols that a prover could have invented: no numerals, no ``$`` words."""
        return {s for s in self.symbols() if not s.startswith("$") and not is_numeral(s)}


def _collect_term(t: Term, sig: Signature) -> None:
    for s in subterms(t):
        if isinstance(s, Fn):
            sig.functions.setdefault(s.name, len(s.args))


def signature_of(*items: Formula | Clause) -> Signature:
    sig = Signature()
    for item in items:
        atoms: list[Atom | Eq]
        if isinstance(item, Clause):
            atoms = [lit.atom for lit in item.literals]
        else:
            atoms = list(formula_atoms(item))
        for a in atoms:
            if isinstance(a, Eq):
                _collect_term(a.lhs, sig)
                _collect_term(a.rhs, sig)
            else:
                sig.predicates.setdefault(a.pred, len(a.args))
                for t in a.args:
                    _collect_term(t, sig)
    return sig


# -------------------------------------------------------------- clauses


@dataclass(frozen=True, slots=True)
class Literal:
    positive: bool
    atom: Atom | Eq

    def negate(self) -> Literal:
        return Literal(not self.positive, self.atom)

    @property
    def pred(self) -> str:
        return "=" if isinstance(self.atom, Eq) else self.atom.pred

    @property
    def args(self) -> tuple[Term, ...]:
        a = self.atom
        return (a.lhs, a.rhs) if isinstance(a, Eq) else a.args

    def to_formula(self) -> Formula:
        return self.atom if self.positive else Not(self.atom)

    def __str__(self) -> str:
        from proofgate.tptp import print_formula

        return print_formula(self.to_formula())


@dataclass(frozen=True, slots=True)
class Clause:
    """Disjunction of literals; duplicates are merged on construction.

    Literal order is first-occurrence order, so printing is stable while
    equality still ignores it (``__eq__`` compares the literal set).
    """

    literals: tuple[Literal, ...]

    def __init__(self, literals) -> None:
        object.__setattr__(self, "literals", tuple(dict.fromkeys(literals)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Clause):
            return NotImplemented
        return frozenset(self.literals) == frozenset(other.literals)

    def __hash__(self) -> int:
        return hash(frozenset(self.literals))

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    @property
    def is_empty(self) -> bool:
        return not self.literals

    def variables(self) -> list[str]:
        acc: dict[str, None] = {}
        for lit in self.literals:
            for t in lit.args:
                term_vars(t, acc)
        return list(acc)

    def is_ground(self) -> bool:
        return not self.variables()

    def to_formula(self) -> Formula:
        return disj([lit.to_formula() for lit in self.literals])

    def __str__(self) -> str:
        if not self.literals:
            return "$false"
        return " | ".join(str(lit) for lit in self.literals)
