"""Check pipeline, proof-level verdicts and failure explanations."""

from __future__ import annotations

import itertools
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

from proofgate.clausify import DEFAULT_CLAUSE_BUDGET, ClauseBudgetExceeded, clausify
from proofgate.dag import NodeKind, ProofDag, Severity, StructuralIssue, name_key, validate_dag
from proofgate.engine import Budget, Outcome, refute
from proofgate.models import (
    DEFAULT_MAX_DOMAIN,
    EvaluationError,
    Interpretation,
    ModelOutcome,
    evaluate,
    find_model,
)
from proofgate.obligations import (
    Freshness,
    InferenceClass,
    Obligation,
    RuleTable,
    check_freshness,
    emit_obligations,
)
from proofgate.sat import GroundingBudgetExceeded, SatOutcome, dpll, ground_abstraction
from proofgate.solvers import ExternalStatus, ExternalVerdict, SolverConfig, check_with_solvers
from proofgate.syntax import FALSE, Formula, Not, closure, signature_of

log = logging.getLogger(__name__)


class Verdict(str, Enum):
    VERIFIED = "VERIFIED"
    VERIFIED_EXTERNAL = "VERIFIED_EXTERNAL"
    CHECKED_FRESHNESS_ONLY = "CHECKED_FRESHNESS_ONLY"
    NOT_ENTAILED = "NOT_ENTAILED"
    FRESHNESS_VIOLATION = "FRESHNESS_VIOLATION"
    UNKNOWN = "UNKNOWN"
    UNCHECKED = "UNCHECKED"
    CONFLICT = "CONFLICT"


PASSING = {Verdict.VERIFIED, Verdict.VERIFIED_EXTERNAL, Verdict.CHECKED_FRESHNESS_ONLY}
FAILING = {Verdict.NOT_ENTAILED, Verdict.FRESHNESS_VIOLATION}


class Overall(str, Enum):
    PROOF_VERIFIED = "PROOF_VERIFIED"
    PROOF_REFUTED = "PROOF_REFUTED"
    PROOF_INCOMPLETE = "PROOF_INCOMPLETE"


PROBE_FRACTION = 0.1

EXIT_CODES = {Overall.PROOF_VERIFIED: 0, Overall.PROOF_REFUTED: 1, Overall.PROOF_INCOMPLETE: 2}


@dataclass(frozen=True)
class CheckConfig:
    budget_secs: float = 1.0
    budget_clauses: int = 50_000
    max_domain: int = DEFAULT_MAX_DOMAIN
    solvers: tuple[SolverConfig, ...] = ()
    jobs: int = 1
    rule_table: RuleTable | None = None
    clause_budget: int = DEFAULT_CLAUSE_BUDGET
    cross_check: bool = False
    workdir: str | None = None
    proof_name: str = "proof"

    def __post_init__(self):
        if self.budget_secs <= 0 or self.budget_clauses <= 0 or self.max_domain <= 0 or self.clause_budget <= 0:
            raise ValueError("budgets must be strictly positive")
        if self.jobs <= 0:
            raise ValueError("jobs must be positive")

    @property
    def engine_budget(self) -> Budget:
        return Budget(self.budget_clauses, self.budget_secs)


@dataclass(frozen=True)
class StepVerdict:
    node: str
    inference_class: InferenceClass
    verdict: Verdict
    rule: str = ""
    evidence: dict = field(default_factory=dict)
    countermodel: Interpretation | None = None
    external: tuple[ExternalVerdict, ...] = ()
    elapsed: float = 0.0

    def __post_init__(self):
        if self.verdict is Verdict.NOT_ENTAILED:
            has_external = any(e.status is ExternalStatus.COUNTER_SATISFIABLE for e in self.external)
            if self.countermodel is None and not has_external:
                raise ValueError("NOT_ENTAILED needs a countermodel or an external counter-satisfiable answer")

    def to_json(self, normalize: bool = False) -> dict:
        out = {
            "node": self.node,
            "rule": self.rule,
            "inference_class": self.inference_class.value,
            "verdict": self.verdict.value,
            "evidence": self.evidence,
        }
        if self.countermodel is not None:
            out["countermodel"] = self.countermodel.to_json()
        if self.external:
            ext = [e.to_json() for e in self.external]
            if normalize:
                for e in ext:
                    e.pop("wall_time")
                    e.pop("problem_file")
            out["external"] = ext
        if not normalize:
            out["elapsed"] = round(self.elapsed, 4)
        return out


@dataclass
class Explanation:
    kind: str
    node: str | None
    message: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        # findings are about the proof text; the cause inside the prover is not diagnosed
        return {"kind": self.kind, "node": self.node, "message": self.message, "scope": "symptom", **self.details}


@dataclass
class ProofReport:
    proof: str
    steps: list[StepVerdict]
    structural: list[StructuralIssue]
    overall: Overall
    first_failure: str | None = None
    explanations: list[Explanation] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.overall]

    def step(self, node: str) -> StepVerdict:
        for s in self.steps:
            if s.node == node:
                return s
        raise KeyError(node)

    def to_json(self, normalize: bool = False) -> dict:
        return {
            "proof": self.proof,
            "overall": self.overall.value,
            "first_failure": self.first_failure,
            "steps": [s.to_json(normalize) for s in self.steps],
            "structural": [i.to_json() for i in self.structural],
            "explanations": [e.to_json() for e in self.explanations],
        }

    def dumps(self, normalize: bool = False) -> str:
        return json.dumps(self.to_json(normalize), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        lines = [f"proof {self.proof}: {self.overall.value}"]
        if self.first_failure is not None:
            lines.append(f"first failure: {self.first_failure}")
        for s in self.steps:
            tag = "" if not s.external or not any(e.weak for e in s.external) else " (INDEPENDENT=weak)"
            lines.append(f"  step {s.node} [{s.rule or 'leaf'}] {s.verdict.value}{tag}")
        for i in self.structural:
            lines.append(f"  {i.severity.value}: {i.code} {i.node or ''} {i.message}".rstrip())
        if self.explanations:
            lines.append("  (explanations describe symptoms in the proof, not their cause inside the prover)")
        for e in self.explanations:
            lines.append(f"  explanation {e.kind}: {e.message}")
            if "countermodel" in e.details:
                lines.extend("    " + row for row in e.details["countermodel_text"].splitlines())
        return "\n".join(lines) + "\n"


# ------------------------------------------------------- single obligation


def obligation_clauses(o: Obligation, clause_budget: int = DEFAULT_CLAUSE_BUDGET):
    """Clauses of premises plus negated conclusion."""
    clauses, _ = clausify(o.premise_formulas + [Not(o.conjecture)], clause_budget)
    return clauses


def _countermodel_ok(o: Obligation, model: Interpretation) -> bool:
    """Re-check a countermodel against the obligation's own formulas."""
    try:
        return all(evaluate(f, model) for f in o.premise_formulas) and not evaluate(o.conjecture, model)
    except EvaluationError:
        return False


def _complete(model: Interpretation, formulas: list[Formula]) -> Interpretation:
    """Give symbols that vanished during clausification an arbitrary meaning."""
    sig = signature_of(*formulas)
    funcs = dict(model.functions)
    preds = dict(model.predicates)
    for name, arity in sig.functions.items():
        funcs.setdefault(name, {k: 0 for k in itertools.product(range(model.size), repeat=arity)})
    for name, arity in sig.predicates.items():
        preds.setdefault(name, {k: False for k in itertools.product(range(model.size), repeat=arity)})
    return Interpretation(model.size, funcs, preds)


def _restrict(model: Interpretation, formulas: list[Formula]) -> Interpretation:
    sig = signature_of(*formulas)
    return Interpretation(
        model.size,
        {k: v for k, v in model.functions.items() if k in sig.functions},
        {k: v for k, v in model.predicates.items() if k in sig.predicates},
    )


def check_entailment(o: Obligation, config: CheckConfig, allow_countermodel: bool = True) -> StepVerdict:
    """Internal engine, then the model finder if the engine did not refute."""
    start = time.monotonic()
    base = dict(node=o.name, inference_class=o.inference_class, rule=o.rule)
    try:
        clauses = obligation_clauses(o, config.clause_budget)
    except ClauseBudgetExceeded as exc:
        return StepVerdict(verdict=Verdict.UNCHECKED, evidence={"reason": str(exc)}, elapsed=time.monotonic() - start, **base)

    if o.inference_class is InferenceClass.SAT_DELEGATED:
        try:
            ga = ground_abstraction(clauses)
            sat = dpll(ga.cnf, max_seconds=config.budget_secs)
            if sat.outcome is SatOutcome.UNSAT:
                return StepVerdict(
                    verdict=Verdict.VERIFIED,
                    evidence={
                        "checker": "ground-sat",
                        "abstraction": "grounding over the step's constants",
                        "atoms": len(ga.atoms),
                        "clauses": len(ga.cnf.clauses),
                    },
                    elapsed=time.monotonic() - start,
                    **base,
                )
        except GroundingBudgetExceeded:
            pass

    def verified(result) -> StepVerdict:
        return StepVerdict(
            verdict=Verdict.VERIFIED,
            evidence={"checker": "engine", "trace_length": len(result.trace), **result.stats},
            elapsed=time.monotonic() - start,
            **base,
        )

    # short probe first so that cheap countermodels are not kept waiting
    probe = Budget(config.budget_clauses, config.budget_secs * PROBE_FRACTION)
    result = refute(clauses, probe)
    if result.outcome is Outcome.REFUTED:
        return verified(result)
    if not allow_countermodel:
        if result.outcome is Outcome.BUDGET_EXHAUSTED:
            result = refute(clauses, config.engine_budget)
            if result.outcome is Outcome.REFUTED:
                return verified(result)
        evidence = {"engine": result.outcome.value, **result.stats}
        return StepVerdict(verdict=Verdict.UNKNOWN, evidence=evidence, elapsed=time.monotonic() - start, **base)

    found = find_model(clauses, config.max_domain, max_seconds=config.budget_secs)
    if found.outcome is not ModelOutcome.MODEL and result.outcome is Outcome.BUDGET_EXHAUSTED:
        result = refute(clauses, config.engine_budget)
        if result.outcome is Outcome.REFUTED:
            return verified(result)
    evidence = {"engine": result.outcome.value, **result.stats, "model_finder": found.outcome.value}
    if found.outcome is ModelOutcome.MODEL:
        formulas = o.premise_formulas + [o.conjecture]
        model = _complete(_restrict(found.model, formulas), formulas)
        if _countermodel_ok(o, model):
            return StepVerdict(
                verdict=Verdict.NOT_ENTAILED,
                evidence={**evidence, "domain_size": model.size},
                countermodel=model,
                elapsed=time.monotonic() - start,
                **base,
            )
        log.error("countermodel for %s failed the direct re-check; reporting UNKNOWN", o.name)
        evidence["model_finder"] = "REJECTED"
    elif found.outcome is ModelOutcome.NO_MODEL_UP_TO:
        evidence["no_model_up_to"] = found.max_size
    return StepVerdict(verdict=Verdict.UNKNOWN, evidence=evidence, elapsed=time.monotonic() - start, **base)


def check_obligation(o: Obligation, config: CheckConfig) -> StepVerdict:
    """Full per-obligation pipeline: internal checks, then external solvers."""
    start = time.monotonic()
    if o.inference_class is InferenceClass.SMT_DELEGATED:
        # an uninterpreted countermodel says nothing about the theory
        v = check_entailment(o, config, allow_countermodel=False)
        if v.verdict is not Verdict.VERIFIED:
            v = replace(v, verdict=Verdict.UNCHECKED, evidence={**v.evidence, "reason": "theory step needs an SMT solver"})
    else:
        v = check_entailment(o, config)

    need_external = v.verdict in (Verdict.UNKNOWN, Verdict.UNCHECKED)
    if config.solvers and (need_external or config.cross_check):
        ext = tuple(check_with_solvers(o, list(config.solvers), config.workdir, config.proof_name))
        v = _merge_external(v, ext)
    return replace(v, elapsed=time.monotonic() - start)


def _merge_external(v: StepVerdict, ext: tuple[ExternalVerdict, ...]) -> StepVerdict:
    if not ext:
        return v
    final = ext[-1].status
    v = replace(v, external=ext)
    if v.verdict in (Verdict.UNKNOWN, Verdict.UNCHECKED):
        if final is ExternalStatus.THEOREM:
            return replace(v, verdict=Verdict.VERIFIED_EXTERNAL)
        if final is ExternalStatus.COUNTER_SATISFIABLE:
            return replace(v, verdict=Verdict.NOT_ENTAILED)
        return v
    disagree = (v.verdict is Verdict.VERIFIED and final is ExternalStatus.COUNTER_SATISFIABLE) or (
        v.verdict is Verdict.NOT_ENTAILED and final is ExternalStatus.THEOREM
    )
    if disagree:
        return replace(v, verdict=Verdict.CONFLICT, evidence={**v.evidence, "internal": v.verdict.value, "external": final.value})
    return v


# ----------------------------------------------------------- whole proof


def freshness_step(dag: ProofDag, name: str, cls: InferenceClass, rule: str) -> StepVerdict | None:
    start = time.monotonic()
    fv = check_freshness(dag, name)
    if fv.status is Freshness.VACUOUS:
        return None
    verdict = Verdict.CHECKED_FRESHNESS_ONLY if fv.status is Freshness.FRESH else Verdict.FRESHNESS_VIOLATION
    return StepVerdict(name, cls, verdict, rule, {"freshness": fv.to_json()}, elapsed=time.monotonic() - start)


def _run(obligations: list[Obligation], config: CheckConfig) -> list[StepVerdict]:
    if config.jobs == 1 or len(obligations) <= 1:
        return [check_obligation(o, config) for o in obligations]
    workers = min(config.jobs, len(obligations))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(check_obligation, obligations, [config] * len(obligations)))


def check_proof(dag: ProofDag, config: CheckConfig | None = None, explain: bool = True) -> ProofReport:
    config = config or CheckConfig()
    table = config.rule_table or RuleTable()
    structural = validate_dag(dag)
    verdicts: dict[str, StepVerdict] = {}

    pending = []
    for o in emit_obligations(dag, table):
        if o.inference_class is InferenceClass.SYMBOL_INTRODUCING:
            fresh = freshness_step(dag, o.name, o.inference_class, o.rule)
            if fresh is not None:
                verdicts[o.name] = fresh
                continue
        pending.append(o)
    for node in dag:
        if node.kind is NodeKind.INTRODUCED_LEAF:
            cls = table.lookup(node.rule or "")
            if cls is InferenceClass.SYMBOL_INTRODUCING:
                fresh = freshness_step(dag, node.name, cls, node.rule)
                if fresh is not None:
                    verdicts[node.name] = fresh
            elif cls in (InferenceClass.ENTAILMENT, InferenceClass.SAT_DELEGATED):
                # a known inference rule with no premises claims validity
                pending.append(Obligation(node.name, closure(node.formula), (), cls, node.rule))
    for v in _run(pending, config):
        verdicts[v.node] = v

    steps = sorted(verdicts.values(), key=lambda s: name_key(s.node))
    position = {n: i for i, n in enumerate(dag.order)}
    failures = [(position[s.node], s.node) for s in steps if s.verdict in FAILING]
    failures += [(position.get(i.node, -1), i.node) for i in structural if i.severity is Severity.ERROR]
    if failures:
        overall = Overall.PROOF_REFUTED
        first = min(failures)[1]
    elif all(s.verdict in PASSING for s in steps):
        overall, first = Overall.PROOF_VERIFIED, None
    else:
        overall, first = Overall.PROOF_INCOMPLETE, None

    report = ProofReport(config.proof_name, steps, structural, overall, first)
    if explain and overall is not Overall.PROOF_VERIFIED:
        report.explanations = explain_failure(report, dag, config)
    return report


# ----------------------------------------------------------- minimization


class MinimizationStatus(str, Enum):
    MINIMAL = "MINIMAL"
    MINIMIZATION_INCONCLUSIVE = "MINIMIZATION_INCONCLUSIVE"


@dataclass(frozen=True)
class Minimization:
    status: MinimizationStatus
    premises: tuple[tuple[str, Formula], ...]

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.premises]


Oracle = Callable[[Obligation], "bool | None"]


def internal_oracle(config: CheckConfig | None = None) -> Oracle:
    """True when refuted, False when a countermodel exists, None otherwise."""
    config = config or CheckConfig()

    def oracle(o: Obligation) -> bool | None:
        v = check_entailment(replace(o, inference_class=InferenceClass.ENTAILMENT), config)
        if v.verdict is Verdict.VERIFIED:
            return True
        if v.verdict is Verdict.NOT_ENTAILED:
            return False
        return None

    return oracle


def minimize_premises(o: Obligation, oracle: Oracle) -> Minimization:
    """Greedy deletion in premise order.

    Each kept premise was necessary for a superset of the result, so by
    monotonicity of entailment it is necessary for the result too.
    """
    first = oracle(o)
    if first is None:
        return Minimization(MinimizationStatus.MINIMIZATION_INCONCLUSIVE, o.premises)
    if first is False:
        raise ValueError(f"obligation {o.name} is not entailed by its premises")
    kept = list(o.premises)
    inconclusive = False
    i = 0
    while i < len(kept):
        trial = kept[:i] + kept[i + 1:]
        answer = oracle(replace(o, premises=tuple(trial)))
        if answer is True:
            kept = trial
            continue
        if answer is None:
            inconclusive = True
        i += 1
    status = MinimizationStatus.MINIMIZATION_INCONCLUSIVE if inconclusive else MinimizationStatus.MINIMAL
    return Minimization(status, tuple(kept))


def inconsistency_core(premises: list[tuple[str, Formula]], oracle: Oracle) -> Minimization | None:
    """Minimal subset of ``premises`` deriving $false, or None if consistent."""
    o = Obligation("core", FALSE, tuple(premises))
    answer = oracle(o)
    if answer is not True:
        return None
    return minimize_premises(o, oracle)


# ------------------------------------------------------------ explanation


def explain_failure(report: ProofReport, dag: ProofDag, config: CheckConfig | None = None) -> list[Explanation]:
    """Symptom-level findings; the cause inside the prover is out of reach."""
    config = config or CheckConfig()
    out: list[Explanation] = []

    leaves = [(n.name, closure(n.formula)) for n in dag if n.kind is NodeKind.INTRODUCED_LEAF]
    if leaves:
        core = inconsistency_core(leaves, internal_oracle(config))
        if core is not None:
            out.append(
                Explanation(
                    "AXIOMS_INCONSISTENT",
                    None,
                    "introduced axioms are jointly inconsistent on their own: " + ", ".join(core.names),
                    {"core": core.names, "minimal": core.status is MinimizationStatus.MINIMAL},
                )
            )

    for issue in report.structural:
        if issue.code == "NO_INPUT_ANCESTOR":
            out.append(Explanation("NO_INPUT_ANCESTOR", issue.node, issue.message))

    for s in report.steps:
        if s.verdict is Verdict.NOT_ENTAILED:
            details: dict = {}
            if s.countermodel is not None:
                details["countermodel"] = s.countermodel.to_json()
                details["countermodel_text"] = s.countermodel.to_text()
            else:
                details["external"] = [e.solver for e in s.external if e.status is ExternalStatus.COUNTER_SATISFIABLE]
            first = s.node == report.first_failure
            out.append(
                Explanation(
                    "FIRST_UNSOUND_STEP" if first else "UNSOUND_STEP",
                    s.node,
                    f"step {s.node} ({s.rule}) does not follow from its premises",
                    details,
                )
            )
        elif s.verdict is Verdict.FRESHNESS_VIOLATION:
            fresh = s.evidence["freshness"]
            where = ", ".join(f"{v['symbol']} in {v['node']}" for v in fresh["violations"])
            out.append(
                Explanation(
                    "FRESHNESS_VIOLATION",
                    s.node,
                    f"step {s.node} introduces symbols that already occur elsewhere: {where}",
                    {"violations": fresh["violations"]},
                )
            )
        elif s.verdict is Verdict.CONFLICT:
            out.append(
                Explanation(
                    "CHECKER_CONFLICT",
                    s.node,
                    f"internal checker says {s.evidence.get('internal')}, external says {s.evidence.get('external')}",
                )
            )
    return out


def default_jobs() -> int:
    return os.cpu_count() or 1
