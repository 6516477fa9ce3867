"""Per-step verification obligations and freshness checks."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from proofgate.dag import NodeKind, ProofDag, topological_order
from proofgate.syntax import Forall, Exists, Formula, Not, closure, free_vars, signature_of
from proofgate.tptp import InferenceRecord, ParseError, normalize_rule, parse_derivation, print_formula

log = logging.getLogger(__name__)


class InferenceClass(str, Enum):
    ENTAILMENT = "ENTAILMENT"
    SYMBOL_INTRODUCING = "SYMBOL_INTRODUCING"
    SAT_DELEGATED = "SAT_DELEGATED"
    SMT_DELEGATED = "SMT_DELEGATED"
    UNCLASSIFIED = "UNCLASSIFIED"


_ENTAILMENT_RULES = (
    "resolution", "binary resolution", "factoring", "subsumption resolution",
    "superposition", "demodulation", "forward demodulation", "backward demodulation",
    "equality resolution", "equality factoring", "trivial inequality removal",
    "duplicate literal removal", "cnf transformation", "flattening", "rectify",
    "nnf transformation", "ennf transformation",
    "definition unfolding", "definition folding", "instantiation", "paramodulation", "condensation",
    "unit resulting resolution", "hyper resolution", "negated conjecture",
)

DEFAULT_RULE_TABLE = {
    **{r: InferenceClass.ENTAILMENT for r in _ENTAILMENT_RULES},
    "skolemisation": InferenceClass.SYMBOL_INTRODUCING,
    "skolemization": InferenceClass.SYMBOL_INTRODUCING,
    "definition": InferenceClass.SYMBOL_INTRODUCING,
    "definition introduction": InferenceClass.SYMBOL_INTRODUCING,
    "naming": InferenceClass.SYMBOL_INTRODUCING,
    "formula naming": InferenceClass.SYMBOL_INTRODUCING,
    "avatar definition": InferenceClass.SYMBOL_INTRODUCING,
    "avatar component clause": InferenceClass.SYMBOL_INTRODUCING,
    "avatar component introduction": InferenceClass.SYMBOL_INTRODUCING,
    "avatar refutation": InferenceClass.SAT_DELEGATED,
    "avatar sat refutation": InferenceClass.SAT_DELEGATED,
    "global subsumption": InferenceClass.SAT_DELEGATED,
    "theory instance": InferenceClass.SMT_DELEGATED,
    "theory instantiation": InferenceClass.SMT_DELEGATED,
    "unit integer comparison": InferenceClass.SMT_DELEGATED,
}


@dataclass
class RuleTable:
    classes: dict[str, InferenceClass] = field(default_factory=lambda: dict(DEFAULT_RULE_TABLE))

    def lookup(self, rule: str) -> InferenceClass | None:
        return self.classes.get(normalize_rule(rule))

    @classmethod
    def load(cls, path: str | Path, base: RuleTable | None = None) -> RuleTable:
        """Read ``rule-name = class`` lines on top of ``base`` (defaults)."""
        table = cls(dict((base or cls()).classes))
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            rule, sep, value = line.rpartition("=")
            if not sep or not rule.strip():
                raise ParseError("expected 'rule-name = class'", lineno, 1, str(path))
            try:
                table.classes[normalize_rule(rule)] = InferenceClass(value.strip().upper())
            except ValueError:
                raise ParseError(f"unknown inference class {value.strip()!r}", lineno, raw.index(value.strip()) + 1, str(path)) from None
        return table


def classify_inference(record: InferenceRecord, table: RuleTable | None = None) -> InferenceClass:
    """Class of an inference by rule name; unknown rules default to ENTAILMENT."""
    found = (table or RuleTable()).lookup(record.rule)
    if found is None:
        log.warning("unknown inference rule %r treated as an entailment", record.rule)
        return InferenceClass.ENTAILMENT
    return found


@dataclass(frozen=True)
class Obligation:
    name: str
    conjecture: Formula
    premises: tuple[tuple[str, Formula], ...]
    inference_class: InferenceClass = InferenceClass.ENTAILMENT
    rule: str = ""

    @property
    def premise_formulas(self) -> list[Formula]:
        return [f for _, f in self.premises]


def emit_obligations(dag: ProofDag, table: RuleTable | None = None) -> list[Obligation]:
    """One obligation per derived node, premises first in topological order.

    A ``negated conjecture`` step is checked against the negation of its
    premise, since that is what the step claims.
    """
    table = table or RuleTable()
    out = []
    for node in topological_order(dag):
        if node.kind is not NodeKind.DERIVED:
            continue
        inf = node.unit.inference
        negate = inf.key == "negated conjecture"
        premises = []
        for name in node.children:
            f = closure(dag[name].formula)
            premises.append((name, Not(f) if negate else f))
        out.append(
            Obligation(node.name, closure(node.formula), tuple(premises), classify_inference(inf, table), inf.rule)
        )
    return out


# ------------------------------------------------------------- rendering

_PLAIN_NAME = re.compile(r"^[A-Za-z0-9_]+$")


def _unit_name(prefix: str, name: str) -> str:
    if _PLAIN_NAME.match(name):
        return prefix + name
    inner = name[1:-1] if name.startswith("'") and name.endswith("'") else name
    return "'" + prefix + inner.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _top_formula(f: Formula) -> str:
    s = print_formula(f)
    if isinstance(f, (Forall, Exists)) and f.vars:
        return f"( {s} )"
    return s


def render_obligation(o: Obligation) -> str:
    """TPTP problem text: the conjecture line then one axiom line per premise."""
    lines = [f"fof({_unit_name('r', o.name)},conjecture, {_top_formula(o.conjecture)} ). "]
    seen = set()
    for name, f in o.premises:
        if name in seen:
            log.warning("obligation r%s cites premise %s more than once", o.name, name)
        seen.add(name)
        lines.append(f"fof({_unit_name('pr', name)},axiom, {_top_formula(f)} ).")
    return "\n".join(lines) + "\n"


def render_obligations(obligations: list[Obligation]) -> str:
    return "".join(render_obligation(o) for o in obligations)


def _strip_prefix(name: str, prefix: str) -> str:
    if name.startswith("'"):
        return "'" + name[1 + len(prefix):]
    return name[len(prefix):]


def parse_obligations(text: str) -> list[Obligation]:
    """Inverse of :func:`render_obligations` (inference class is not encoded)."""
    out: list[Obligation] = []
    current: list | None = None
    # unit names repeat across obligations, so parse unit by unit
    for chunk in _split_units(text):
        units = parse_derivation(chunk)
        for u in units:
            if u.role == "conjecture":
                if current:
                    out.append(Obligation(current[0], current[1], tuple(current[2])))
                current = [_strip_prefix(u.name, "r"), u.formula, []]
            elif current is not None:
                current[2].append((_strip_prefix(u.name, "pr"), u.formula))
            else:
                raise ParseError("axiom line before any conjecture", u.line or 1)
    if current:
        out.append(Obligation(current[0], current[1], tuple(current[2])))
    return out


def _split_units(text: str) -> list[str]:
    chunks, buf = [], []
    for line in text.splitlines():
        if line.strip().startswith(("fof(", "cnf(")) and buf:
            chunks.append("\n".join(buf))
            buf = []
        if line.strip():
            buf.append(line)
    if buf:
        chunks.append("\n".join(buf))
    return chunks


# ------------------------------------------------------------- freshness


class Freshness(str, Enum):
    FRESH = "FRESH"
    VIOLATION = "VIOLATION"
    VACUOUS = "VACUOUS"


@dataclass(frozen=True)
class FreshnessVerdict:
    status: Freshness
    introduced: tuple[str, ...] = ()
    violations: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "introduced": list(self.introduced),
            "violations": [{"symbol": s, "node": n} for s, n in self.violations],
        }


def introduced_symbols(dag: ProofDag, name: str) -> list[str]:
    node = dag[name]
    mine = signature_of(node.formula).uninterpreted()
    if node.kind is NodeKind.DERIVED:
        before = set()
        for c in node.children:
            before |= signature_of(dag[c].formula).symbols()
    else:
        before = set()
        for other in dag:
            if other.kind is NodeKind.INPUT_LEAF:
                before |= signature_of(other.formula).symbols()
    found = mine - before
    inf = node.unit.inference
    if inf is not None:
        found |= set(inf.new_symbols)
    return sorted(found)


def check_freshness(dag: ProofDag, name: str) -> FreshnessVerdict:
    """Introduced symbols may occur only in this node and its descendants."""
    introduced = introduced_symbols(dag, name)
    if not introduced:
        log.warning("step %s claims to introduce symbols but introduces none", name)
        return FreshnessVerdict(Freshness.VACUOUS)
    allowed = dag.descendants(name) | {name}
    violations = []
    for other in dag:
        if other.name in allowed:
            continue
        syms = signature_of(other.formula).symbols()
        for s in introduced:
            if s in syms:
                violations.append((s, other.name))
    if violations:
        return FreshnessVerdict(Freshness.VIOLATION, tuple(introduced), tuple(violations))
    return FreshnessVerdict(Freshness.FRESH, tuple(introduced))


def closed(o: Obligation) -> bool:
    return not free_vars(o.conjecture) and all(not free_vars(f) for _, f in o.premises)
