"""External solver integration: subprocess runs with deadlines, SZS parsing.

Solver config lines have the form ``name|path|template|mode|timeout`` with
an optional sixth field ``weak`` for a solver that is only weakly
independent of the prover being checked (e.g. an older release of it).
``template`` must contain ``{problem}`` once and may contain ``{timeout}``.
``mode`` is ``szs``, ``smtlib`` or an exit-code map such as
``exit:0=THEOREM,1=COUNTER_SATISFIABLE``.
"""

from __future__ import annotations

import os
import re
import shlex
import shutil
import signal
import subprocess
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from proofgate.obligations import InferenceClass, Obligation, render_obligation
from proofgate.syntax import (
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
    signature_of,
)
from proofgate.tptp import ParseError

ENV_VAR = "PROOFGATE_SOLVERS"
OUTPUT_LIMIT = 1 << 20
GRACE_SECONDS = 1.0


class ExternalStatus(str, Enum):
    THEOREM = "THEOREM"
    COUNTER_SATISFIABLE = "COUNTER_SATISFIABLE"
    UNKNOWN = "UNKNOWN"
    TIMEOUT = "TIMEOUT"
    CRASH = "CRASH"
    UNPARSEABLE = "UNPARSEABLE"

    @property
    def conclusive(self) -> bool:
        return self in (ExternalStatus.THEOREM, ExternalStatus.COUNTER_SATISFIABLE)


@dataclass(frozen=True)
class SolverConfig:
    name: str
    path: str
    template: str
    mode: str = "szs"
    timeout: float = 10.0
    weak: bool = False

    def __post_init__(self):
        if self.template.count("{problem}") != 1:
            raise ValueError(f"solver {self.name}: template must contain {{problem}} exactly once")
        if self.timeout <= 0:
            raise ValueError(f"solver {self.name}: timeout must be positive")
        if not (self.mode in ("szs", "smtlib") or self.mode.startswith("exit:")):
            raise ValueError(f"solver {self.name}: unknown mode {self.mode!r}")
        if self.mode.startswith("exit:"):
            _exit_map(self.mode)

    @property
    def language(self) -> str:
        return "smtlib" if self.mode == "smtlib" else "tptp"

    def argv(self, problem: str) -> list[str]:
        args = [self.path]
        for part in shlex.split(self.template):
            args.append(part.replace("{problem}", problem).replace("{timeout}", str(int(self.timeout) or 1)))
        return args


def _exit_map(mode: str) -> dict[int, ExternalStatus]:
    out = {}
    for item in mode[len("exit:"):].split(","):
        code, _, status = item.partition("=")
        out[int(code)] = ExternalStatus(status.strip().upper())
    return out


def load_solver_configs(path: str | Path) -> list[SolverConfig]:
    configs = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split("|")]
        if len(fields) not in (5, 6):
            raise ParseError("expected name|path|template|mode|timeout[|weak]", lineno, 1, str(path))
        try:
            configs.append(
                SolverConfig(
                    fields[0], fields[1], fields[2], fields[3], float(fields[4]),
                    len(fields) == 6 and fields[5].lower() == "weak",
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), lineno, 1, str(path)) from None
    return configs


def configured_solvers(path: str | Path | None = None) -> list[SolverConfig]:
    """Configs from ``path``, else from $PROOFGATE_SOLVERS, else none."""
    path = path or os.environ.get(ENV_VAR)
    return load_solver_configs(path) if path else []


# --------------------------------------------------------------- parsing

_SZS = re.compile(r"SZS status\s+(\w+)")
_SZS_MAP = {
    "Theorem": ExternalStatus.THEOREM,
    "Unsatisfiable": ExternalStatus.THEOREM,
    "ContradictoryAxioms": ExternalStatus.THEOREM,
    "CounterSatisfiable": ExternalStatus.COUNTER_SATISFIABLE,
    "Satisfiable": ExternalStatus.COUNTER_SATISFIABLE,
    "Timeout": ExternalStatus.TIMEOUT,
    "GaveUp": ExternalStatus.UNKNOWN,
    "Unknown": ExternalStatus.UNKNOWN,
    "ResourceOut": ExternalStatus.UNKNOWN,
    "MemoryOut": ExternalStatus.UNKNOWN,
    "Inappropriate": ExternalStatus.UNKNOWN,
    "Incomplete": ExternalStatus.UNKNOWN,
}


def parse_szs(output: str) -> ExternalStatus:
    """Status from the first ``SZS status`` line; anything unrecognised is
    UNPARSEABLE rather than UNKNOWN."""
    m = _SZS.search(output)
    if m is None:
        return ExternalStatus.UNPARSEABLE
    return _SZS_MAP.get(m.group(1), ExternalStatus.UNPARSEABLE)


def parse_smtlib_answer(output: str) -> ExternalStatus:
    for line in output.splitlines():
        word = line.strip()
        if word == "unsat":
            return ExternalStatus.THEOREM
        if word == "sat":
            return ExternalStatus.COUNTER_SATISFIABLE
        if word in ("unknown", "timeout"):
            return ExternalStatus.UNKNOWN
    return ExternalStatus.UNPARSEABLE


# ----------------------------------------------------------- SMT-LIB text

_ARITH = {
    "$sum": "+", "$difference": "-", "$product": "*", "$uminus": "-",
    "$quotient": "/", "$quotient_e": "div", "$quotient_t": "div", "$quotient_f": "div",
    "$remainder_e": "mod", "$remainder_t": "mod", "$remainder_f": "mod",
    "$less": "<", "$lesseq": "<=", "$greater": ">", "$greatereq": ">=",
}
_DIVISIONS = {"$quotient", "$quotient_e", "$quotient_t", "$quotient_f", "$remainder_e", "$remainder_t", "$remainder_f"}


def _smt_name(name: str) -> str:
    return "|" + name.strip("'").replace("|", "_").replace("\\", "_") + "|"


def render_smtlib(o: Obligation) -> str:
    """Best-effort SMT-LIB reading of an obligation.

    Numerals select Int (or Real when a rational occurs); otherwise an
    uninterpreted sort is used. Every atom containing a division is
    conjoined with its divisors being nonzero, so no verdict can depend
    on the solver's choice for ``t/0``.
    """
    formulas = [f for _, f in o.premises] + [o.conjecture]
    sig = signature_of(*formulas)
    numerals = [n for n in sig.functions if is_numeral(n)]
    arith = any(n in _ARITH for n in list(sig.functions) + list(sig.predicates))
    if any("/" in n for n in numerals):
        sort = "Real"
    elif numerals or arith:
        sort = "Int"
    else:
        sort = "U"
    lines = ["(set-logic ALL)"]
    if sort == "U":
        lines.append("(declare-sort U 0)")
    for name, arity in sorted(sig.functions.items()):
        if name in _ARITH or is_numeral(name):
            continue
        lines.append(f"(declare-fun {_smt_name(name)} ({' '.join([sort] * arity)}) {sort})")
    for name, arity in sorted(sig.predicates.items()):
        if name in _ARITH:
            continue
        lines.append(f"(declare-fun {_smt_name(name)} ({' '.join([sort] * arity)}) Bool)")
    for name, f in o.premises:
        lines.append(f"; premise {name}")
        lines.append(f"(assert {_smt_formula(f, sort)})")
    lines.append(f"; negated conclusion {o.name}")
    lines.append(f"(assert (not {_smt_formula(o.conjecture, sort)}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _smt_term(t: Term, sort: str, divisors: list[str]) -> str:
    if isinstance(t, Var):
        return t.name
    if is_numeral(t.name):
        neg = t.name.startswith("-")
        body = t.name.lstrip("-")
        if "/" in body:
            n, d = body.split("/")
            body = f"(/ {n}.0 {d}.0)"
        elif sort == "Real":
            body = f"{body}.0"
        return f"(- {body})" if neg else body
    args = [_smt_term(a, sort, divisors) for a in t.args]
    if t.name in _ARITH:
        op = _ARITH[t.name]
        if t.name in _DIVISIONS:
            divisors.append(args[1])
        return f"({op} {' '.join(args)})"
    if not args:
        return _smt_name(t.name)
    return f"({_smt_name(t.name)} {' '.join(args)})"


def _guard(atom: str, divisors: list[str], sort: str) -> str:
    if not divisors:
        return atom
    zero = "0.0" if sort == "Real" else "0"
    guards = " ".join(f"(not (= {d} {zero}))" for d in dict.fromkeys(divisors))
    return f"(and {guards} {atom})"


def _smt_formula(f: Formula, sort: str) -> str:
    if isinstance(f, Atom):
        divisors: list[str] = []
        args = [_smt_term(a, sort, divisors) for a in f.args]
        if f.pred in _ARITH:
            atom = f"({_ARITH[f.pred]} {' '.join(args)})"
        else:
            atom = f"({_smt_name(f.pred)} {' '.join(args)})" if args else _smt_name(f.pred)
        return _guard(atom, divisors, sort)
    if isinstance(f, Eq):
        divisors = []
        atom = f"(= {_smt_term(f.lhs, sort, divisors)} {_smt_term(f.rhs, sort, divisors)})"
        return _guard(atom, divisors, sort)
    if isinstance(f, Not):
        return f"(not {_smt_formula(f.arg, sort)})"
    if isinstance(f, (And, Or)):
        if not f.args:
            return "true" if isinstance(f, And) else "false"
        op = "and" if isinstance(f, And) else "or"
        return f"({op} {' '.join(_smt_formula(a, sort) for a in f.args)})"
    if isinstance(f, Implies):
        return f"(=> {_smt_formula(f.lhs, sort)} {_smt_formula(f.rhs, sort)})"
    if isinstance(f, Iff):
        return f"(= {_smt_formula(f.lhs, sort)} {_smt_formula(f.rhs, sort)})"
    if isinstance(f, (Forall, Exists)):
        q = "forall" if isinstance(f, Forall) else "exists"
        binders = " ".join(f"({v} {sort})" for v in f.vars)
        return f"({q} ({binders}) {_smt_formula(f.body, sort)})"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    raise TypeError(f"not a formula: {f!r}")


# ------------------------------------------------------------ processes


@dataclass(frozen=True)
class ExternalVerdict:
    status: ExternalStatus
    solver: str
    excerpt: str = ""
    wall_time: float = 0.0
    problem_file: str | None = None
    weak: bool = False
    returncode: int | None = None
    language: str = "tptp"

    def to_json(self) -> dict:
        return {
            "solver": self.solver,
            "status": self.status.value,
            "independent": "weak" if self.weak else "strong",
            "rendering": "smtlib-best-effort" if self.language == "smtlib" else "tptp",
            "wall_time": round(self.wall_time, 3),
            "problem_file": self.problem_file,
            "excerpt": self.excerpt,
        }


def _excerpt(text: str, limit: int = 2000) -> str:
    return text if len(text) <= limit else text[:limit] + "\n...[truncated]"


def _problem_name(o: Obligation) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", o.name)


def check_external(
    o: Obligation,
    cfg: SolverConfig,
    workdir: str | Path | None = None,
    proof_name: str = "proof",
) -> ExternalVerdict:
    """Run one solver on one obligation and classify its answer."""
    tmp = Path(tempfile.mkdtemp(prefix="proofgate-", dir=workdir))
    suffix = ".smt2" if cfg.language == "smtlib" else ".p"
    problem = tmp / f"{proof_name}.step{_problem_name(o)}{suffix}"
    problem.write_text(render_smtlib(o) if cfg.language == "smtlib" else render_obligation(o), encoding="utf-8")
    out_path = tmp / "solver.out"

    start = time.monotonic()
    exe = shutil.which(cfg.path) or cfg.path
    with open(out_path, "wb") as out:
        try:
            proc = subprocess.Popen(
                [exe] + cfg.argv(str(problem))[1:],
                stdout=out,
                stderr=subprocess.STDOUT,
                stdin=subprocess.DEVNULL,
                start_new_session=True,
            )
        except OSError as exc:
            return ExternalVerdict(
                ExternalStatus.CRASH, cfg.name, f"spawn failed: {exc}", 0.0, str(problem), cfg.weak, None, cfg.language
            )
        timed_out = False
        try:
            proc.wait(timeout=cfg.timeout + GRACE_SECONDS)
        except subprocess.TimeoutExpired:
            timed_out = True
        _kill_group(proc)
    elapsed = time.monotonic() - start
    with open(out_path, "rb") as fh:
        raw = fh.read(OUTPUT_LIMIT)
    out_path.unlink(missing_ok=True)
    text = raw.decode("utf-8", errors="replace")

    if timed_out:
        status = ExternalStatus.TIMEOUT
    elif cfg.mode == "szs":
        status = parse_szs(text)
    elif cfg.mode == "smtlib":
        status = parse_smtlib_answer(text)
    else:
        status = _exit_map(cfg.mode).get(proc.returncode, ExternalStatus.UNPARSEABLE)
    if status is ExternalStatus.UNPARSEABLE and proc.returncode is not None and proc.returncode < 0:
        status = ExternalStatus.CRASH

    kept: str | None = str(problem)
    if status is ExternalStatus.THEOREM:
        problem.unlink(missing_ok=True)
        _rmdir(tmp)
        kept = None
    return ExternalVerdict(status, cfg.name, _excerpt(text), elapsed, kept, cfg.weak, proc.returncode, cfg.language)


def _kill_group(proc: subprocess.Popen) -> None:
    """Kill the solver's whole process group and reap the direct child."""
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass
    proc.wait()


def _rmdir(path: Path) -> None:
    try:
        path.rmdir()
    except OSError:
        pass


def check_with_solvers(
    o: Obligation,
    configs: list[SolverConfig],
    workdir: str | Path | None = None,
    proof_name: str = "proof",
) -> list[ExternalVerdict]:
    """Consult solvers in order, stopping at the first conclusive answer.

    SMT-delegated steps go only to SMT-LIB solvers, all others only to
    TPTP solvers.
    """
    want = "smtlib" if o.inference_class is InferenceClass.SMT_DELEGATED else "tptp"
    verdicts = []
    for cfg in configs:
        if cfg.language != want:
            continue
        v = check_external(o, cfg, workdir, proof_name)
        verdicts.append(v)
        if v.status.conclusive:
            break
    return verdicts
