"""Parser and printer for the FOF/CNF subset of TPTP used by derivations.

Two derivation surfaces are read: standard ``fof(name, role, formula,
source).`` units and the numbered listing style

    4. a = b [resolution 2,1]

Numbered lines are normalised to units named by their line numbers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Union

from proofgate.syntax import (
    FALSE,
    TRUE,
    And,
    Atom,
    Bottom,
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
    is_numeral,
    numeral_name,
)

ROLES = ("axiom", "hypothesis", "conjecture", "negated_conjecture", "plain")
MAX_DEPTH = 200


class ParseError(Exception):
    """Syntax error with a 1-based source position."""

    def __init__(self, message: str, line: int = 1, col: int = 1, file: str | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.file = file

    def __str__(self) -> str:
        return f"{self.file or '<input>'}:{self.line}:{self.col}: {self.message}"


class ArityError(ParseError):
    pass


class UnsupportedError(ParseError):
    """Well-formed TPTP outside the supported subset (include, tff, thf...)."""


# ---------------------------------------------------------------- lexer

_TOKEN_SPEC = [
    ("ws", r"[ \t\r\f\v]+"),
    ("nl", r"\n"),
    ("comment", r"%[^\n]*|/\*.*?\*/"),
    ("number", r"[+-]?[0-9]+(?:/[0-9]+|\.[0-9]+(?:[eE][+-]?[0-9]+)?|[eE][+-]?[0-9]+)?"),
    ("op", r"<=>|<~>|=>|<=|~\||~&|!=|[=~&|!?]"),
    ("punct", r"[()\[\],:.]"),
    ("upper", r"[A-Z][A-Za-z0-9_]*"),
    ("lower", r"[a-z][A-Za-z0-9_]*"),
    ("dollar", r"\$\$?[a-z][A-Za-z0-9_]*"),
    ("single", r"'(?:[^'\\\n]|\\.)+'"),
    ("distinct", r'"(?:[^"\\\n]|\\.)*"'),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{k}>{p})" for k, p in _TOKEN_SPEC), re.S)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col: int = 1, file: str | None = None) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line_start = -(col - 1)
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, file)
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "comment":
            newlines = tok.count("\n")
            if newlines:
                line += newlines
                line_start = pos + tok.rindex("\n") + 1
        elif kind != "ws":
            tokens.append(Token(kind, tok, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def parse_numeral(text: str) -> str:
    """Canonical exact numeral name; decimals become rationals."""
    body = text[1:] if text[0] in "+-" else text
    sign = -1 if text[0] == "-" else 1
    try:
        if "/" in body:
            num, den = body.split("/")
            if int(den) == 0:
                raise ValueError("zero denominator")
            value = Fraction(int(num), int(den))
        else:
            value = Fraction(body)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed numeral {text!r}: {exc}") from None
    return numeral_name(sign * value)


# ------------------------------------------------------- annotation terms


@dataclass(frozen=True)
class General:
    """A TPTP general term from a source annotation (``inference(...)`` etc)."""

    name: str
    args: tuple[Union[General, list], ...] = ()


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, tokens: list[Token], arities: dict[str, int] | None = None, file: str | None = None):
        self.toks = tokens
        self.i = 0
        self.arities = {} if arities is None else arities
        self.file = file
        self.depth = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Token | None = None, cls=ParseError) -> ParseError:
        t = tok or self.tok
        return cls(message, t.line, t.col, self.file)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "punct")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def expect_end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after end of expression")

    def enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("nesting too deep")

    def note_arity(self, name: str, arity: int, tok: Token) -> None:
        if is_numeral(name) or name.startswith('"'):
            if arity:
                raise self.error(f"{name} cannot take arguments", tok)
            return
        known = self.arities.setdefault(name, arity)
        if known != arity:
            raise self.error(f"symbol {name} used with arity {arity} and {known}", tok, ArityError)

    # formulas
    def formula(self) -> Formula:
        self.enter()
        first = self.unit()
        t = self.tok
        if t.kind != "op" or t.text in ("~", "!", "?", "=", "!="):
            self.depth -= 1
            return first
        op = t.text
        self.i += 1
        if op in ("&", "|"):
            parts = [first, self.unit()]
            while self.at(op):
                self.i += 1
                parts.append(self.unit())
            if self.tok.kind == "op" and self.tok.text not in ("~", "!", "?"):
                raise self.error(f"ambiguous mix of {op!r} and {self.tok.text!r}; add parentheses")
            self.depth -= 1
            return And(tuple(parts)) if op == "&" else Or(tuple(parts))
        second = self.unit()
        if self.tok.kind == "op" and self.tok.text not in ("~", "!", "?"):
            raise self.error(f"{op!r} is not associative; add parentheses")
        self.depth -= 1
        if op == "=>":
            return Implies(first, second)
        if op == "<=":
            return Implies(second, first)
        if op == "<=>":
            return Iff(first, second)
        if op == "<~>":
            return Not(Iff(first, second))
        if op == "~|":
            return Not(Or((first, second)))
        if op == "~&":
            return Not(And((first, second)))
        raise self.error(f"unexpected operator {op!r}", t)

    def unit(self) -> Formula:
        t = self.tok
        if t.kind == "op" and t.text == "~":
            self.i += 1
            self.enter()
            arg = self.unit()
            self.depth -= 1
            return Not(arg)
        if t.kind == "op" and t.text in ("!", "?"):
            self.i += 1
            self.expect("[")
            names = [self.variable_name()]
            while self.at(","):
                self.i += 1
                names.append(self.variable_name())
            self.expect("]")
            self.expect(":")
            self.enter()
            body = self.unit()
            self.depth -= 1
            return (Forall if t.text == "!" else Exists)(tuple(names), body)
        if self.at("("):
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        return self.atomic()

    def variable_name(self) -> str:
        t = self.tok
        if t.kind != "upper":
            raise self.error(f"expected a variable, found {t.text or 'end of input'!r}")
        self.i += 1
        if self.at(":"):
            nxt = self.toks[self.i + 1]
            if nxt.kind in ("dollar", "lower"):
                raise self.error("typed variables are not supported", cls=UnsupportedError)
        return t.text

    def atomic(self) -> Formula:
        t = self.tok
        if t.kind == "dollar" and t.text in ("$true", "$false"):
            self.i += 1
            return TRUE if t.text == "$true" else FALSE
        lhs_tok = t
        lhs = self.term(as_atom=True)
        if self.tok.kind == "op" and self.tok.text in ("=", "!="):
            op = self.tok.text
            self.i += 1
            rhs = self.term()
            if isinstance(lhs, Atom):
                lhs = self._atom_as_term(lhs, lhs_tok)
            eq = Eq(lhs, rhs)
            return eq if op == "=" else Not(eq)
        if isinstance(lhs, Var):
            raise self.error("a variable cannot be used as a formula", lhs_tok)
        if isinstance(lhs, Fn):
            raise self.error(f"{lhs.name} is a term, not a formula", lhs_tok)
        self.note_arity(lhs.pred, len(lhs.args), lhs_tok)
        return lhs

    def _atom_as_term(self, a: Atom, tok: Token) -> Fn:
        self.note_arity(a.pred, len(a.args), tok)
        return Fn(a.pred, a.args)

    def term(self, as_atom: bool = False):
        """Parse a term; with ``as_atom`` a symbol application is returned as
        an :class:`Atom` so the caller can decide once it sees ``=``."""
        t = self.tok
        if t.kind == "upper":
            self.i += 1
            return Var(t.text)
        if t.kind == "number":
            self.i += 1
            try:
                return Fn(parse_numeral(t.text))
            except ValueError as exc:
                raise self.error(str(exc), t) from None
        if t.kind == "distinct":
            self.i += 1
            return Fn(t.text)
        if t.kind in ("lower", "single", "dollar"):
            self.i += 1
            args: list[Term] = []
            if self.at("("):
                self.i += 1
                self.enter()
                args.append(self.term())
                while self.at(","):
                    self.i += 1
                    args.append(self.term())
                self.expect(")")
                self.depth -= 1
            if as_atom:
                return Atom(t.text, tuple(args))
            self.note_arity(t.text, len(args), t)
            return Fn(t.text, tuple(args))
        raise self.error(f"expected a term, found {t.text or 'end of input'!r}")

    # annotations
    def general(self):
        t = self.tok
        if self.at("["):
            self.i += 1
            items = []
            if not self.at("]"):
                items.append(self.general())
                while self.at(","):
                    self.i += 1
                    items.append(self.general())
            self.expect("]")
            value: General | list = items
        elif t.kind in ("lower", "single", "dollar", "upper", "number", "distinct"):
            self.i += 1
            args = []
            if self.at("("):
                self.i += 1
                self.enter()
                if t.kind == "dollar" and t.text in ("$fof", "$cnf"):
                    args.append(self.formula())
                else:
                    args.append(self.general())
                    while self.at(","):
                        self.i += 1
                        args.append(self.general())
                self.expect(")")
                self.depth -= 1
            value = General(t.text, tuple(args))
        else:
            raise self.error(f"unexpected {t.text or 'end of input'!r} in annotation")
        if self.at(":"):
            self.i += 1
            return General(":", (value, self.general()))
        return value


def parse_formula(text: str, arities: dict[str, int] | None = None) -> Formula:
    """Parse a bare FOF formula (no ``fof(...)`` wrapper).

    Free variables are allowed; ``free_vars`` reports them.
    """
    p = _Parser(tokenize(text), arities)
    f = p.formula()
    p.expect_end()
    return f


def parse_term(text: str, arities: dict[str, int] | None = None) -> Term:
    p = _Parser(tokenize(text), arities)
    t = p.term()
    p.expect_end()
    return t


def parse_term_arith(text: str) -> Term:
    """Parse an arithmetic term in prefix form (``$uminus``, ``$sum``...).

    ``$uminus(t)`` stays a unary application; nothing is rewritten.
    """
    return parse_term(text)


# ------------------------------------------------------------- printer

_BINARY = (And, Or, Implies, Iff)


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.name
    return f"{t.name}({','.join(print_term(a) for a in t.args)})"


def _wrapped(f: Formula) -> str:
    s = print_formula(f)
    if isinstance(f, _BINARY + (Forall, Exists)) and not _degenerate(f):
        return f"({s})"
    return s


def _degenerate(f: Formula) -> bool:
    return isinstance(f, (And, Or)) and len(f.args) < 2


def print_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        if not f.args:
            return f.pred
        return f"{f.pred}({','.join(print_term(a) for a in f.args)})"
    if isinstance(f, Eq):
        return f"{print_term(f.lhs)} = {print_term(f.rhs)}"
    if isinstance(f, Not):
        if isinstance(f.arg, Eq):
            return f"{print_term(f.arg.lhs)} != {print_term(f.arg.rhs)}"
        return "~" + _wrapped(f.arg)
    if isinstance(f, (And, Or)):
        if not f.args:
            return "$true" if isinstance(f, And) else "$false"
        if len(f.args) == 1:
            return print_formula(f.args[0])
        sep = " & " if isinstance(f, And) else " | "
        return sep.join(_wrapped(a) for a in f.args)
    if isinstance(f, Implies):
        return f"{_wrapped(f.lhs)} => {_wrapped(f.rhs)}"
    if isinstance(f, Iff):
        return f"{_wrapped(f.lhs)} <=> {_wrapped(f.rhs)}"
    if isinstance(f, (Forall, Exists)):
        if not f.vars:
            return print_formula(f.body)
        q = "!" if isinstance(f, Forall) else "?"
        body = f.body
        inner = f"({print_formula(body)})" if isinstance(body, _BINARY) and not _degenerate(body) else print_formula(body)
        return f"{q} [{','.join(f.vars)}] : {inner}"
    if isinstance(f, Top):
        return "$true"
    if isinstance(f, Bottom):
        return "$false"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------- derivations


class _InputMarker:
    __slots__ = ()

    def __repr__(self) -> str:
        return "INPUT"


INPUT = _InputMarker()


def normalize_rule(name: str) -> str:
    """Case-fold and unify spaces, underscores and hyphens."""
    return re.sub(r"[\s_\-]+", " ", name.strip().lower())


@dataclass(frozen=True)
class InferenceRecord:
    rule: str
    premises: tuple[str, ...] = ()
    new_symbols: tuple[str, ...] = ()

    @property
    def key(self) -> str:
        return normalize_rule(self.rule)


@dataclass(frozen=True)
class AnnotatedUnit:
    name: str
    role: str
    formula: Formula
    source: InferenceRecord | _InputMarker | None = None
    line: int = 0
    kind: str = field(default="fof", compare=False)

    @property
    def is_input(self) -> bool:
        return self.source is INPUT or self.source is None

    @property
    def inference(self) -> InferenceRecord | None:
        return self.source if isinstance(self.source, InferenceRecord) else None


_NUMBERED = re.compile(r"^(\s*)(\d+)\.\s(.*?)\s*\[([^\[\]]*)\]\s*(\{[^{}]*\})?\s*$")
_TPTP_START = re.compile(r"^\s*(fof|cnf|tff|thf|tcf|include)\s*\(")
_INPUT_ANNOT = re.compile(r"^input(?:\s*\((\w+)\))?$")
_RULE_ANNOT = re.compile(r"^(.*?)(?:\s+(\d+(?:\s*,\s*\d+)*))?$")


def _significant_lines(text: str):
    for lineno, raw in enumerate(text.split("\n"), start=1):
        s = raw.strip()
        if s and not s.startswith("%"):
            yield lineno, raw


def parse_derivation(text: str, file: str | None = None) -> list[AnnotatedUnit]:
    """Parse a derivation in either surface syntax, one unit per proof line."""
    first = next(_significant_lines(text), None)
    if first is not None and (_TPTP_START.match(first[1]) or first[1].lstrip().startswith("/*")):
        units = _parse_tptp_units(text, file)
    else:
        units = _parse_numbered(text, file)
    seen: dict[str, AnnotatedUnit] = {}
    for u in units:
        if u.name in seen:
            raise ParseError(f"duplicate unit name {u.name}", u.line or 1, 1, file)
        seen[u.name] = u
    return units


def parse_derivation_bytes(data: bytes, file: str | None = None) -> list[AnnotatedUnit]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        col = exc.start - (data.rfind(b"\n", 0, exc.start) + 1) + 1
        raise ParseError("invalid UTF-8", line, col, file) from None
    return parse_derivation(text, file)


def read_derivation(path: str | Path) -> list[AnnotatedUnit]:
    p = Path(path)
    return parse_derivation_bytes(p.read_bytes(), str(p))


def _parse_numbered(text: str, file: str | None) -> list[AnnotatedUnit]:
    arities: dict[str, int] = {}
    units = []
    for lineno, raw in _significant_lines(text):
        m = _NUMBERED.match(raw)
        if m is None:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ParseError("expected a proof line 'N. formula [annotation]'", lineno, col, file)
        name, body, annot = m.group(2), m.group(3), m.group(4).strip()
        col = m.start(3) + 1
        p = _Parser(tokenize(body, lineno, col, file), arities, file)
        formula = p.formula()
        p.expect_end()
        role = "plain"
        im = _INPUT_ANNOT.match(annot)
        if im:
            role = im.group(1) if im.group(1) in ROLES else "axiom"
            source: InferenceRecord | _InputMarker = INPUT
        else:
            rm = _RULE_ANNOT.match(annot)
            rule = rm.group(1).strip() if rm else ""
            if not rule:
                raise ParseError(f"malformed annotation [{annot}]", lineno, m.start(4) + 1, file)
            premises = tuple(x.strip() for x in rm.group(2).split(",")) if rm.group(2) else ()
            source = InferenceRecord(rule, premises)
            if normalize_rule(rule) == "negated conjecture":
                role = "negated_conjecture"
        units.append(AnnotatedUnit(name, role, formula, source, lineno, "numbered"))
    return units


def _parse_tptp_units(text: str, file: str | None) -> list[AnnotatedUnit]:
    p = _Parser(tokenize(text, file=file), {}, file)
    units = []
    while p.tok.kind != "eof":
        start = p.tok
        if start.kind != "lower":
            raise p.error(f"expected fof( or cnf(, found {start.text!r}")
        kind = start.text
        if kind in ("include", "tff", "thf", "tcf"):
            raise p.error(f"unsupported: {kind} units", start, UnsupportedError)
        if kind not in ("fof", "cnf"):
            raise p.error(f"unknown unit kind {kind!r}", start)
        p.i += 1
        p.expect("(")
        name_tok = p.tok
        if name_tok.kind not in ("lower", "number", "single", "upper"):
            raise p.error("expected a unit name")
        p.i += 1
        p.expect(",")
        role_tok = p.tok
        if role_tok.text not in ROLES:
            raise p.error(f"unsupported role {role_tok.text!r}", role_tok, UnsupportedError)
        p.i += 1
        p.expect(",")
        formula = p.formula()
        source: InferenceRecord | _InputMarker | None = None
        if p.at(","):
            p.i += 1
            source = _interpret_source(p.general())
            if p.at(","):
                p.i += 1
                p.general()
        p.expect(")")
        p.expect(".")
        units.append(AnnotatedUnit(name_tok.text, role_tok.text, formula, source, start.line, kind))
    return units


def _premise_names(item, out: list[str]) -> None:
    if isinstance(item, list):
        for x in item:
            _premise_names(x, out)
        return
    if item.name == ":":
        _premise_names(item.args[0], out)
    elif item.name == "inference" and len(item.args) == 3:
        _premise_names(item.args[2], out)
    elif not item.args:
        out.append(item.name)
    # theory(...), file(...) and friends are not proof units


def _new_symbols(info) -> tuple[str, ...]:
    """Symbols declared by ``new_symbols(kind, [s1, ...])`` entries."""
    found: list[str] = []
    for item in info if isinstance(info, list) else [info]:
        if isinstance(item, General) and item.name == "new_symbols" and len(item.args) == 2:
            listed = item.args[1]
            found.extend(x.name for x in (listed if isinstance(listed, list) else [listed]) if isinstance(x, General))
    return tuple(found)


def _interpret_source(src) -> InferenceRecord | _InputMarker:
    if isinstance(src, General):
        if src.name == "file":
            return INPUT
        if src.name == "inference" and src.args:
            rule = src.args[0]
            rule_name = rule.name if isinstance(rule, General) else "inference"
            names: list[str] = []
            if len(src.args) >= 3:
                _premise_names(src.args[2], names)
            info = src.args[1] if len(src.args) > 1 else []
            return InferenceRecord(rule_name, tuple(names), _new_symbols(info))
        if src.name == "introduced" and src.args:
            rule = src.args[0]
            info = src.args[1] if len(src.args) > 1 else []
            name = rule.name if isinstance(rule, General) else "introduced"
            return InferenceRecord(name, (), _new_symbols(info))
    return INPUT


def print_unit(u: AnnotatedUnit) -> str:
    return f"fof({u.name},{u.role}, {print_formula(u.formula)} )."
