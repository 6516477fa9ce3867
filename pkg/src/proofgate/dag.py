"""Derivation DAG construction and structural validation."""

from __future__ import annotations

import heapq
import logging
import re
from dataclasses import dataclass, field
from enum import Enum

from proofgate.syntax import Bottom
from proofgate.tptp import AnnotatedUnit, print_formula

log = logging.getLogger(__name__)


class ProofDagError(Exception):
    pass


class DanglingReferenceError(ProofDagError):
    def __init__(self, node: str, missing: str):
        super().__init__(f"unit {node} cites undefined premise {missing}")
        self.node = node
        self.missing = missing


class CycleError(ProofDagError):
    def __init__(self, cycle: list[str]):
        super().__init__("derivation contains a cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class NodeKind(str, Enum):
    INPUT_LEAF = "input-leaf"
    INTRODUCED_LEAF = "introduced-leaf"
    DERIVED = "derived"


@dataclass
class ProofNode:
    unit: AnnotatedUnit
    kind: NodeKind
    children: tuple[str, ...] = ()
    parents: list[str] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.unit.name

    @property
    def formula(self):
        return self.unit.formula

    @property
    def rule(self) -> str | None:
        inf = self.unit.inference
        return inf.rule if inf else None


def name_key(name: str) -> tuple:
    """Natural ordering: numeric names by value, then the rest lexically."""
    parts = re.split(r"(\d+)", name)
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in parts if p)


@dataclass
class ProofDag:
    nodes: dict[str, ProofNode]
    order: list[str]
    refutation: str | None
    warnings: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> ProofNode:
        return self.nodes[name]

    def __iter__(self):
        return (self.nodes[n] for n in self.order)

    def __len__(self) -> int:
        return len(self.nodes)

    def ancestors(self, name: str) -> set[str]:
        """Transitive premises of ``name`` (the node itself excluded)."""
        seen: set[str] = set()
        stack = list(self.nodes[name].children)
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self.nodes[n].children)
        return seen

    def descendants(self, name: str) -> set[str]:
        """Nodes that transitively cite ``name``."""
        seen: set[str] = set()
        stack = list(self.nodes[name].parents)
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self.nodes[n].parents)
        return seen

    def to_dot(self) -> str:
        lines = ["digraph proof {"]
        for node in self:
            label = f"{node.name}: {print_formula(node.formula)}"
            label += f" [{node.rule}]" if node.rule else " [input]" if node.kind is NodeKind.INPUT_LEAF else ""
            label = label.replace("\\", "\\\\").replace('"', '\\"')
            lines.append(f'  "{node.name}" [label="{label}"];')
        for node in self:
            for c in node.children:
                lines.append(f'  "{c}" -> "{node.name}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_dag(units: list[AnnotatedUnit]) -> ProofDag:
    """Resolve premise references and classify nodes.

    Raises DanglingReferenceError or CycleError; a derivation without
    ``$false`` is accepted with a warning.
    """
    nodes: dict[str, ProofNode] = {}
    for u in units:
        if u.name in nodes:
            raise ProofDagError(f"duplicate unit name {u.name}")
        inf = u.inference
        if inf is None:
            kind, children = NodeKind.INPUT_LEAF, ()
        elif not inf.premises:
            kind, children = NodeKind.INTRODUCED_LEAF, ()
        else:
            kind, children = NodeKind.DERIVED, inf.premises
        nodes[u.name] = ProofNode(u, kind, children)
    for node in nodes.values():
        for c in node.children:
            if c not in nodes:
                raise DanglingReferenceError(node.name, c)
            if node.name not in nodes[c].parents:
                nodes[c].parents.append(node.name)
    for node in nodes.values():
        node.parents.sort(key=name_key)

    order = _topological(nodes)
    # file order decides between several $false units
    refutation = next((u.name for u in units if isinstance(u.formula, Bottom)), None)
    warnings = []
    if refutation is None:
        warnings.append("no $false unit: checking a partial derivation")
        log.warning("derivation has no $false unit")
    return ProofDag(nodes, order, refutation, warnings)


def _topological(nodes: dict[str, ProofNode]) -> list[str]:
    pending = {n: len(set(node.children)) for n, node in nodes.items()}
    ready = [(name_key(n), n) for n, k in pending.items() if k == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, n = heapq.heappop(ready)
        order.append(n)
        for p in nodes[n].parents:
            pending[p] -= 1
            if pending[p] == 0:
                heapq.heappush(ready, (name_key(p), p))
    if len(order) != len(nodes):
        raise CycleError(_find_cycle(nodes, set(nodes) - set(order)))
    return order


def _find_cycle(nodes: dict[str, ProofNode], candidates: set[str]) -> list[str]:
    start = min(candidates, key=name_key)
    path: list[str] = []
    on_path: dict[str, int] = {}
    n = start
    # every node left over by Kahn's algorithm has a leftover premise
    while n not in on_path:
        on_path[n] = len(path)
        path.append(n)
        n = next(c for c in nodes[n].children if c in candidates)
    return path[on_path[n]:] + [n]


def topological_order(dag: ProofDag) -> list[ProofNode]:
    """Premises first; ties broken by ascending (natural) unit name."""
    return [dag.nodes[n] for n in dag.order]


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class StructuralIssue:
    code: str
    node: str | None
    message: str
    severity: Severity

    def to_json(self) -> dict:
        return {"code": self.code, "node": self.node, "severity": self.severity.value, "message": self.message}


def reachable_from_refutation(dag: ProofDag) -> set[str]:
    """Nodes used by the refutation; without one, everything under a sink."""
    if dag.refutation is not None:
        roots = [dag.refutation]
    else:
        roots = [n.name for n in dag if not n.parents]
    seen: set[str] = set()
    for r in roots:
        seen.add(r)
        seen |= dag.ancestors(r)
    return seen


def validate_dag(dag: ProofDag) -> list[StructuralIssue]:
    issues: list[StructuralIssue] = []
    if dag.refutation is None:
        issues.append(StructuralIssue("MISSING_REFUTATION", None, "no unit derives $false", Severity.WARNING))
    else:
        support = dag.ancestors(dag.refutation) | {dag.refutation}
        if not any(dag.nodes[n].kind is NodeKind.INPUT_LEAF for n in support):
            issues.append(
                StructuralIssue(
                    "NO_INPUT_ANCESTOR",
                    dag.refutation,
                    "the contradiction is derived without using any input formula",
                    Severity.ERROR,
                )
            )
    used = reachable_from_refutation(dag)
    for node in dag:
        if node.name not in used:
            issues.append(
                StructuralIssue("UNUSED_NODE", node.name, f"unit {node.name} does not contribute to the refutation", Severity.WARNING)
            )
    return issues
