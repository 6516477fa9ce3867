"""proofgate command line.

Exit codes: 0 verified, 1 refuted, 2 incomplete, 3 usage/parse error,
4 internal error. ``model`` uses 0 model found, 1 none up to the bound,
2 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

from proofgate.analysis import (
    FAILING,
    PASSING,
    CheckConfig,
    check_obligation,
    check_proof,
    default_jobs,
    freshness_step,
)
from proofgate.clausify import ClauseBudgetExceeded, clausify
from proofgate.dag import NodeKind, ProofDag, ProofDagError, build_dag
from proofgate.models import DEFAULT_MAX_DOMAIN, ModelOutcome, find_model
from proofgate.obligations import (
    InferenceClass,
    RuleTable,
    emit_obligations,
    render_obligation,
)
from proofgate.sat import GroundingBudgetExceeded, ground_abstraction
from proofgate.solvers import configured_solvers
from proofgate.syntax import Not
from proofgate.tptp import ParseError, print_formula, read_derivation

EXIT_USAGE = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rule-table", metavar="FILE", help="extra 'rule = CLASS' lines over the built-in table")

    budgets = argparse.ArgumentParser(add_help=False)
    budgets.add_argument("--budget-secs", type=_positive_float, default=1.0, help="internal time budget per step (default 1.0)")
    budgets.add_argument("--budget-clauses", type=_positive_int, default=50_000, help="kept-clause budget per step (default 50000)")
    budgets.add_argument("--max-domain", type=_positive_int, default=DEFAULT_MAX_DOMAIN, help="largest countermodel domain (default 4)")
    budgets.add_argument("--solvers", metavar="FILE", help="solver config file (default: $PROOFGATE_SOLVERS)")
    budgets.add_argument("--jobs", type=_positive_int, default=None, help="parallel obligation checks (default: CPU count)")
    budgets.add_argument("--json", action="store_true", help="print the JSON report instead of the summary")
    budgets.add_argument("--normalize", action="store_true", help="leave timing fields out of the JSON report")

    p = _Parser(prog="proofgate", description="Check refutation proofs step by step.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("emit", parents=[common], help="print one TPTP problem per inference step")
    e.add_argument("proof")
    e.add_argument("--out-dir", metavar="DIR", help="write <proof>.step<N>.p files instead of printing")
    e.add_argument("--emit-dimacs", action="store_true", help="emit the ground propositional abstraction as DIMACS")

    c = sub.add_parser("check", parents=[common, budgets], help="check every step of a proof")
    c.add_argument("proof")
    c.add_argument("--dot", metavar="FILE", help="write the proof DAG in DOT format")
    c.add_argument("--report", metavar="FILE", help="also write the JSON report to FILE")
    c.add_argument("--cross-check", action="store_true", help="consult external solvers on internally decided steps too")

    s = sub.add_parser("step", parents=[common, budgets], help="check a single step")
    s.add_argument("proof")
    s.add_argument("--node", required=True)

    m = sub.add_parser("model", help="search for a finite model of a TPTP problem")
    m.add_argument("problem")
    m.add_argument("--max-domain", type=_positive_int, default=DEFAULT_MAX_DOMAIN, help="largest domain tried (default 4)")
    m.add_argument("--budget-secs", type=_positive_float, default=10.0, help="time budget for the search (default 10.0)")
    return p


def _load_dag(path: str) -> ProofDag:
    return build_dag(read_derivation(path))


def _rule_table(args) -> RuleTable:
    return RuleTable.load(args.rule_table) if args.rule_table else RuleTable()


def _config(args) -> CheckConfig:
    return CheckConfig(
        budget_secs=args.budget_secs,
        budget_clauses=args.budget_clauses,
        max_domain=args.max_domain,
        solvers=tuple(configured_solvers(args.solvers)),
        jobs=args.jobs or default_jobs(),
        rule_table=_rule_table(args),
        cross_check=getattr(args, "cross_check", False),
        proof_name=Path(args.proof).stem,
    )


def _emit(args) -> int:
    dag = _load_dag(args.proof)
    obligations = emit_obligations(dag, _rule_table(args))
    stem = Path(args.proof).stem
    chunks = []
    for o in obligations:
        if args.emit_dimacs:
            ga = ground_abstraction(clausify(o.premise_formulas + [Not(o.conjecture)])[0])
            comments = [f"step {o.name}"] + [f"{i} {print_formula(a)}" for a, i in ga.atom_table().items()]
            chunks.append((f"{stem}.step{o.name}.cnf", ga.cnf.to_dimacs(comments)))
        else:
            chunks.append((f"{stem}.step{o.name}.p", render_obligation(o)))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in chunks:
            (out / name).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write("".join(text for _, text in chunks))
    return 0


def _check(args) -> int:
    dag = _load_dag(args.proof)
    if args.dot:
        Path(args.dot).write_text(dag.to_dot(), encoding="utf-8")
    report = check_proof(dag, _config(args))
    if args.report:
        Path(args.report).write_text(report.dumps(args.normalize), encoding="utf-8")
    sys.stdout.write(report.dumps(args.normalize) if args.json else report.summary())
    return report.exit_code


def _step(args) -> int:
    dag = _load_dag(args.proof)
    config = _config(args)
    if args.node not in dag.nodes:
        raise UsageError(f"no unit named {args.node}")
    if dag[args.node].kind is not NodeKind.DERIVED:
        raise UsageError(f"unit {args.node} is a leaf, not an inference step")
    o = next(o for o in emit_obligations(dag, config.rule_table) if o.name == args.node)
    verdict = None
    if o.inference_class is InferenceClass.SYMBOL_INTRODUCING:
        verdict = freshness_step(dag, o.name, o.inference_class, o.rule)
    if verdict is None:
        verdict = check_obligation(o, config)
    if args.json:
        sys.stdout.write(json.dumps(verdict.to_json(args.normalize), indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(f"step {o.name} [{o.rule}] {verdict.verdict.value}\n")
        if verdict.countermodel is not None:
            sys.stdout.write(verdict.countermodel.to_text() + "\n")
    if verdict.verdict in PASSING:
        return 0
    return 1 if verdict.verdict in FAILING else 2


def _model(args) -> int:
    units = read_derivation(args.problem)
    formulas = []
    for u in units:
        formulas.append(Not(u.formula) if u.role == "conjecture" else u.formula)
    clauses, _ = clausify(formulas)
    result = find_model(clauses, args.max_domain, max_seconds=args.budget_secs)
    if result.outcome is ModelOutcome.MODEL:
        sys.stdout.write(f"MODEL size {result.size}\n{result.model.to_text()}\n")
        return 0
    if result.outcome is ModelOutcome.NO_MODEL_UP_TO:
        sys.stdout.write(f"NO_MODEL_UP_TO {result.max_size}\n")
        return 1
    sys.stdout.write(f"BUDGET_EXHAUSTED at size {result.size}\n")
    return 2


COMMANDS = {"emit": _emit, "check": _check, "step": _step, "model": _model}


def run_cli(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="proofgate: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ProofDagError, UsageError, OSError, UnicodeError, ValueError) as exc:
        print(f"proofgate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ClauseBudgetExceeded, GroundingBudgetExceeded) as exc:
        print(f"proofgate: error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run_cli())
