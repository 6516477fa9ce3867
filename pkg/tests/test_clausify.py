import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import holds, search_model
from proofgate.clausify import ClauseBudgetExceeded, clausify, cnf, miniscope, nnf, skolemize, strip_universals
from proofgate.syntax import And, Atom, Exists, Fn, Forall, Iff, Implies, Not, Or, Var, signature_of
from proofgate.tptp import parse_formula, print_formula


def interpretations(sig, n):
    fcells = [(f, a) for f, k in sorted(sig.functions.items()) for a in itertools.product(range(n), repeat=k)]
    pcells = [(p, a) for p, k in sorted(sig.predicates.items()) for a in itertools.product(range(n), repeat=k)]
    for fv in itertools.product(range(n), repeat=len(fcells)):
        funcs = {f: {} for f in sig.functions}
        for (f, a), v in zip(fcells, fv):
            funcs[f][a] = v
        for pv in itertools.product((False, True), repeat=len(pcells)):
            preds = {p: {} for p in sig.predicates}
            for (p, a), v in zip(pcells, pv):
                preds[p][a] = v
            yield funcs, preds


# closed formulas over p/1, q/2, r/0 and constant a
def closed_formulas():
    def leaf(bound):
        terms = [Fn("a")] + [Var(v) for v in bound]
        t = st.sampled_from(terms)
        return st.one_of(
            st.just(Atom("r", ())),
            t.map(lambda x: Atom("p", (x,))),
            st.tuples(t, t).map(lambda xy: Atom("q", xy)),
        )

    def build(bound, depth):
        if depth == 0:
            return leaf(bound)
        sub = build(bound, depth - 1)
        var = f"X{len(bound)}"
        inner = build(bound + [var], depth - 1)
        return st.one_of(
            leaf(bound),
            sub.map(Not),
            st.tuples(sub, sub).map(lambda ab: And(ab)),
            st.tuples(sub, sub).map(lambda ab: Or(ab)),
            st.tuples(sub, sub).map(lambda ab: Implies(*ab)),
            st.tuples(sub, sub).map(lambda ab: Iff(*ab)),
            inner.map(lambda b: Forall((var,), b)),
            inner.map(lambda b: Exists((var,), b)),
        )

    return build([], 3)


def equivalent(f, g, max_n=2):
    sig = signature_of(f, g)
    for n in range(1, max_n + 1):
        for funcs, preds in interpretations(sig, n):
            if holds(f, n, funcs, preds) != holds(g, n, funcs, preds):
                return False
    return True


@settings(max_examples=150, deadline=None)
@given(closed_formulas())
def test_nnf_preserves_meaning(f):
    assert equivalent(f, nnf(f))


@settings(max_examples=150, deadline=None)
@given(closed_formulas())
def test_miniscope_preserves_meaning(f):
    g = nnf(f)
    assert equivalent(g, miniscope(g))


def _is_nnf(f):
    if isinstance(f, Not):
        return isinstance(f.arg, Atom) or type(f.arg).__name__ == "Eq"
    if isinstance(f, (Implies, Iff)):
        return False
    if isinstance(f, (And, Or)):
        return all(_is_nnf(a) for a in f.args)
    if isinstance(f, (Forall, Exists)):
        return _is_nnf(f.body)
    return True


@settings(max_examples=150, deadline=None)
@given(closed_formulas())
def test_nnf_shape(f):
    assert _is_nnf(nnf(f))


def test_miniscope_example():
    f = parse_formula("! [X] : (p(X) & r)")
    assert print_formula(miniscope(f)) == "(! [X] : p(X)) & r"


# ------------------------------------------------------------ Skolemization

NESTED = "! [U] : ? [X] : (p(X,U) & ? [Y] : q(X,Y))"


def _skolem(mode):
    out, smap = skolemize(nnf(parse_formula(NESTED)), mode)
    f, g = (e.symbol for e in smap.entries)
    return out, f, g


def test_correct_skolemization_shape():
    out, f, g = _skolem("correct")
    expected = parse_formula(f"! [U] : (p({f}(U),U) & q({f}(U),{g}(U)))")
    assert out == expected


def test_buggy_skolemization_shape():
    out, f, g = _skolem("buggy-for-test")
    expected = parse_formula(f"! [U] : (p({f}(U),U) & q({f}(U),{g}))")
    assert out == expected


def test_skolem_symbols_avoid_existing_names():
    _, smap = skolemize(nnf(parse_formula("? [X] : sk0(X)")))
    assert smap.symbols == ["sk1"]


# q(., y) and p(x, .) injective, plus two distinct constants: the buggy
# constant g cannot serve every u at once.
CONTEXT = [
    "! [X,Y,Z] : ((q(X,Y) & q(Z,Y)) => X = Z)",
    "! [X,U,V] : ((p(X,U) & p(X,V)) => U = V)",
    "c != d",
]


def _sat(formulas, n):
    clauses, _ = clausify(formulas)
    return search_model(clauses, n) is not None


def equisat_table(max_n=3):
    ctx = [parse_formula(c) for c in CONTEXT]
    original = parse_formula(NESTED)
    correct, _, _ = _skolem("correct")
    buggy, _, _ = _skolem("buggy-for-test")
    return {
        name: [_sat([f] + ctx, n) for n in range(1, max_n + 1)]
        for name, f in (("original", original), ("correct", correct), ("buggy", buggy))
    }


def test_buggy_skolemization_changes_satisfiability():
    table = equisat_table()
    assert table["original"] == table["correct"]
    assert any(table["original"])
    assert not any(table["buggy"])


# ---------------------------------------------------------------- cnf


def test_cnf_distributes():
    f = parse_formula("(p(a) & q(a,a)) | r")
    assert sorted(map(str, cnf(f))) == ["p(a) | r", "q(a,a) | r"]


def test_clause_budget():
    parts = [f"(p{i} & q{i})" for i in range(14)]
    with pytest.raises(ClauseBudgetExceeded):
        clausify([parse_formula(" | ".join(parts))], budget=1000)


@settings(max_examples=100, deadline=None)
@given(closed_formulas())
def test_clausify_equisatisfiable(f):
    clauses, _ = clausify([f])
    for n in (1, 2):
        sat_f = any(holds(f, n, fu, pr) for fu, pr in interpretations(signature_of(f), n))
        # a Skolemized model of size n exists iff the formula has one
        assert (search_model(clauses, n) is not None) == sat_f


def test_strip_universals_rejects_existentials():
    with pytest.raises(ValueError):
        strip_universals(parse_formula("? [X] : p(X)"))
