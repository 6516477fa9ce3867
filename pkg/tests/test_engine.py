import pytest

from generators import random_small_clause_sets
from oracles import search_model
from proofgate.clausify import clausify
from proofgate.engine import (
    Budget,
    Outcome,
    equality_axioms,
    is_tautology,
    is_variant,
    refute,
    replay_trace,
    subsumes,
    unify,
)
from proofgate.models import ModelOutcome, find_model
from proofgate.syntax import Fn, Var, signature_of
from proofgate.tptp import parse_derivation, parse_formula, parse_term


def clauses_of(*texts):
    cs, _ = clausify([parse_formula(t) for t in texts])
    return cs


def clause(text):
    (c,) = clauses_of(text)
    return c


def test_unify_and_occurs_check():
    s = unify(parse_term("f(X,b)"), parse_term("f(a,Y)"))
    assert s == {"X": Fn("a"), "Y": Fn("b")}
    assert unify(Var("X"), parse_term("f(X)")) is None
    assert unify(parse_term("f(a)"), parse_term("g(a)")) is None


def test_subsumption():
    assert subsumes(clause("p(X)"), clause("p(a) | q"))
    assert not subsumes(clause("p(a)"), clause("p(X) | q"))
    # each literal of the subsumer needs its own target only up to matching
    assert subsumes(clause("p(X) | p(Y)"), clause("p(a)"))
    assert not subsumes(clause("q(X,X)"), clause("q(a,b)"))


def test_variants_and_tautologies():
    assert is_variant(clause("p(X) | q(X,Y)"), clause("q(Z,W) | p(Z)"))
    assert not is_variant(clause("q(X,X)"), clause("q(X,Y)"))
    assert is_tautology(clause("p(X) | ~p(X)"))
    assert is_tautology(clause("X = X"))
    assert not is_tautology(clause("X = X"), reflexive=False)


def test_congruence_axioms():
    sig = signature_of(parse_formula("p(f(a,b))"))
    axioms = [str(c) for c in equality_axioms(sig)]
    assert axioms[0] == "X = X"
    # reflexivity, symmetry, transitivity, two per f, one for p
    assert len(axioms) == 6


def test_sample_problem_refuted_with_replayable_trace():
    units = parse_derivation("1. p(a) [input]\n2. ~p(X0) | b = X0 [input]\n3. ~p(b) [input]\n")
    cs, _ = clausify([u.formula for u in units])
    res = refute(cs, Budget(10_000, 5.0))
    assert res.outcome is Outcome.REFUTED
    assert replay_trace(res.trace)
    assert res.trace[-1].clause.is_empty


def test_saturation():
    res = refute(clauses_of("p(a)", "! [X] : (~p(X) | q(X))"), Budget(1000, 5.0))
    assert res.outcome is Outcome.SATURATED


def test_clause_budget():
    cs = clauses_of("p(a)", "! [X] : (~p(X) | p(f(X)))", "! [X] : ~q(X)", "q(a) | r")
    res = refute(cs, Budget(20, 5.0))
    assert res.outcome is Outcome.BUDGET_EXHAUSTED


def test_factoring_needed():
    res = refute(clauses_of("! [X,Y] : (p(X) | p(Y))", "! [X,Y] : (~p(X) | ~p(Y))"), Budget(1000, 5.0))
    assert res.outcome is Outcome.REFUTED
    assert any(s.rule == "factoring" for s in res.trace)
    assert replay_trace(res.trace)


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        Budget(0, 1.0)


ENGINE_BUDGET = Budget(150, 0.25)


def engine_model_clashes(count=200, seed=31):
    """Clause sets where the engine refutes and the model finder finds a model;
    also the number of cases where both were conclusive."""
    clashes, conclusive = [], 0
    for cs in random_small_clause_sets(seed, count, n=2):
        r = refute(cs, ENGINE_BUDGET)
        m = find_model(cs, 3)
        if r.outcome is Outcome.REFUTED:
            if m.outcome is ModelOutcome.MODEL or not replay_trace(r.trace):
                clashes.append(cs)
            conclusive += m.outcome is ModelOutcome.NO_MODEL_UP_TO
        elif r.outcome is Outcome.SATURATED:
            conclusive += m.outcome is ModelOutcome.MODEL
    return clashes, conclusive


def test_engine_agrees_with_model_finder():
    clashes, conclusive = engine_model_clashes(40, seed=8)
    assert clashes == []
    assert conclusive > 0


def test_refuted_sets_have_no_small_model():
    for cs in random_small_clause_sets(3, 40, n=2):
        if refute(cs, ENGINE_BUDGET).outcome is Outcome.REFUTED:
            assert search_model(cs, 1) is None
            assert search_model(cs, 2) is None


def test_transitivity_chain_refuted():
    res = refute(clauses_of("a = b", "b = c", "a != c"), Budget(1000, 5.0))
    assert res.outcome is Outcome.REFUTED
    assert replay_trace(res.trace)


def test_trivial_disequation_removed_in_trace():
    res = refute(clauses_of("b != b | ~s(a)", "s(a)"), Budget(1000, 5.0))
    assert res.outcome is Outcome.REFUTED
    assert replay_trace(res.trace)
