import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proofgate.syntax import And, Atom, Eq, Exists, FALSE, Fn, Forall, Iff, Implies, Not, Or, Var, free_vars
from proofgate.tptp import (
    INPUT,
    ArityError,
    ParseError,
    UnsupportedError,
    normalize_rule,
    parse_derivation,
    parse_derivation_bytes,
    parse_formula,
    parse_term,
    parse_term_arith,
    print_formula,
    print_term,
    read_derivation,
)

# ----------------------------------------------------------------- strategies

VARS = ["X", "Y", "Z0"]
CONSTS = ["a", "b", "c0"]
FUNCS = {"f": 1, "g": 2}
PREDS = {"p": 1, "q": 2, "r": 0}


def terms(depth=2):
    leaves = st.one_of(st.sampled_from(VARS).map(Var), st.sampled_from(CONSTS).map(Fn))
    if depth == 0:
        return leaves
    sub = terms(depth - 1)
    return st.one_of(
        leaves,
        sub.map(lambda t: Fn("f", (t,))),
        st.tuples(sub, sub).map(lambda ts: Fn("g", ts)),
    )


def atoms():
    t = terms()
    return st.one_of(
        st.just(Atom("r", ())),
        t.map(lambda x: Atom("p", (x,))),
        st.tuples(t, t).map(lambda ts: Atom("q", ts)),
        st.tuples(t, t).map(lambda ts: Eq(*ts)),
    )


def formulas():
    return st.recursive(
        atoms(),
        lambda inner: st.one_of(
            inner.map(Not),
            st.lists(inner, min_size=2, max_size=3).map(lambda xs: And(tuple(xs))),
            st.lists(inner, min_size=2, max_size=3).map(lambda xs: Or(tuple(xs))),
            st.tuples(inner, inner).map(lambda ab: Implies(*ab)),
            st.tuples(inner, inner).map(lambda ab: Iff(*ab)),
            st.tuples(st.lists(st.sampled_from(VARS), min_size=1, max_size=2, unique=True), inner).map(
                lambda vb: Forall(tuple(vb[0]), vb[1])
            ),
            st.tuples(st.lists(st.sampled_from(VARS), min_size=1, max_size=2, unique=True), inner).map(
                lambda vb: Exists(tuple(vb[0]), vb[1])
            ),
        ),
        max_leaves=8,
    )


# --------------------------------------------------------------- round trip


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_print_parse_roundtrip(f):
    text = print_formula(f)
    g = parse_formula(text)
    assert g == f
    assert print_formula(g) == text


@settings(max_examples=200, deadline=None)
@given(terms(3))
def test_term_roundtrip(t):
    assert parse_term(print_term(t)) == t


def test_printer_examples():
    assert print_formula(parse_formula("! [X0] : (~p(X0) | b = X0)")) == "! [X0] : (~p(X0) | b = X0)"
    assert print_formula(parse_formula("a != b")) == "a != b"
    assert print_formula(parse_formula("~ (p & q)")) == "~(p & q)"
    assert print_formula(parse_formula("(p => q) => r")) == "(p => q) => r"


# ------------------------------------------------------------------ grammar


def test_connectives_desugar():
    assert parse_formula("p <= q") == Implies(Atom("q", ()), Atom("p", ()))
    assert parse_formula("p <~> q") == Not(Iff(Atom("p", ()), Atom("q", ())))
    assert parse_formula("p ~| q") == Not(Or((Atom("p", ()), Atom("q", ()))))
    assert parse_formula("p ~& q") == Not(And((Atom("p", ()), Atom("q", ()))))
    assert parse_formula("a != b") == Not(Eq(Fn("a"), Fn("b")))


def test_nary_and_or():
    assert parse_formula("p & q & r") == And((Atom("p", ()), Atom("q", ()), Atom("r", ())))


@pytest.mark.parametrize("text", ["p & q | r", "p => q => r", "p <=> q <=> r"])
def test_mixed_or_nonassociative_binary_rejected(text):
    with pytest.raises(ParseError):
        parse_formula(text)


def test_quantifier_binds_tighter_than_binary():
    f = parse_formula("! [X] : p(X) | q(a,a)")
    assert isinstance(f, Or)
    assert isinstance(f.args[0], Forall)


def test_free_variables_reported():
    assert free_vars(parse_formula("p(X) & ! [Y] : q(X,Y)")) == ["X"]


def test_arity_clash():
    with pytest.raises(ArityError):
        parse_formula("p(a) & p(a,b)")


def test_error_position():
    with pytest.raises(ParseError) as info:
        parse_formula("p(a) &\n  & q")
    assert info.value.line == 2
    assert info.value.col == 3
    assert str(info.value).startswith("<input>:2:3:")


def test_nesting_limit():
    with pytest.raises(ParseError):
        parse_formula("~" * 500 + "p")


def test_numerals_are_exact():
    t = parse_term("$sum(1/2, -3)")
    assert t == Fn("$sum", (Fn("1/2"), Fn("-3")))
    assert parse_term("2/4") == Fn("1/2")
    with pytest.raises(ParseError):
        parse_term("1/0")


# ------------------------------------------------------ $uminus regression


def test_uminus_stays_unary():
    t = parse_term_arith("$uminus(x0)")
    assert t == Fn("$uminus", (Fn("x0"),))
    assert t.name != "$difference"


@settings(max_examples=200, deadline=None)
@given(terms(2))
def test_uminus_never_becomes_difference(t):
    text = f"$uminus({print_term(t)})"
    parsed = parse_term_arith(text)
    assert parsed.name == "$uminus"
    assert len(parsed.args) == 1
    assert parse_term_arith(print_term(parsed)) == parsed


def test_uminus_arity_is_checked():
    with pytest.raises(ArityError):
        parse_formula("p($uminus(a)) & p($uminus(a,b))")


# --------------------------------------------------------------- derivations


def test_numbered_sample_proof(sample_proof_path):
    units = read_derivation(sample_proof_path)
    assert [u.name for u in units] == ["1", "2", "3", "4", "5", "7"]
    assert units[0].is_input
    assert units[3].inference.rule == "resolution"
    assert units[3].inference.premises == ("2", "1")
    assert units[4].inference.key == "backward demodulation"
    assert units[5].formula == FALSE


def test_tptp_derivation():
    text = """
    % comment
    fof(a1,axiom, ! [X] : (man(X) => mortal(X)), file('s.p',a1)).
    fof(c,conjecture, mortal(s), file('s.p',c)).
    fof(nc,negated_conjecture, ~mortal(s), inference(negated_conjecture,[status(cth)],[c])).
    fof(sk,plain, p(sK0), inference(skolemisation,[status(esa),new_symbols(skolem,[sK0])],[nc])).
    fof(d,plain, sP0 <=> p(a), introduced(definition,[new_symbols(naming,[sP0])])).
    """
    units = parse_derivation(text)
    assert units[0].source is INPUT
    assert units[2].inference.premises == ("c",)
    assert units[3].inference.new_symbols == ("sK0",)
    assert units[4].inference.premises == ()
    assert units[4].inference.new_symbols == ("sP0",)


def test_nested_inference_parents():
    text = "cnf(x,plain, p, inference(resolution,[],[inference(flattening,[],[a1]), a2, theory(equality)]))."
    (u,) = parse_derivation(text)
    assert u.inference.premises == ("a1", "a2")


def test_unsupported_units():
    with pytest.raises(UnsupportedError):
        parse_derivation("tff(t,type, a: $int).")
    with pytest.raises(UnsupportedError):
        parse_derivation("include('Axioms/SET001.ax').")


def test_duplicate_names_rejected():
    with pytest.raises(ParseError):
        parse_derivation("1. p [input]\n1. q [input]\n")


def test_bad_role():
    with pytest.raises(ParseError):
        parse_derivation("fof(a,lemma_ish, p, file('x',a)).")


def test_rule_normalization():
    assert normalize_rule("Backward_Demodulation") == "backward demodulation"
    assert normalize_rule("subsumption-resolution") == "subsumption resolution"


def test_invalid_utf8_reports_position():
    with pytest.raises(ParseError) as info:
        parse_derivation_bytes(b"1. p(a) [input]\n2. \xff [input]\n")
    assert info.value.line == 2


# --------------------------------------------------------------------- fuzz


def _fuzz_inputs(count, seed):
    rng = random.Random(seed)
    alphabet = b"fofcnf(),.[]|&~!?:=<>$'\"%/* \n\tXYZabpq0123456789_-"
    for i in range(count):
        if i % 2:
            yield bytes(rng.randrange(256) for _ in range(rng.randrange(0, 200)))
        else:
            yield bytes(rng.choice(alphabet) for _ in range(rng.randrange(0, 200)))


def fuzz_crashes(count=1000, seed=1234):
    """Inputs for which parsing raised something other than ParseError."""
    crashes = []
    for data in _fuzz_inputs(count, seed):
        try:
            parse_derivation_bytes(data)
        except ParseError:
            pass
        except Exception as exc:  # noqa: BLE001
            crashes.append((data, exc))
    return crashes


def test_fuzz_small():
    assert fuzz_crashes(200, seed=7) == []
