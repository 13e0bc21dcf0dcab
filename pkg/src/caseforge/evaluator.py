"""Collective assurance case evaluation.

Runs every cited artifact's embedded constraints (dispatching theory-kind
artifacts to a verification backend), then propagates validity bottom-up
through the argument graph and across modules through away references.
Evaluation never aborts on a failure: every node receives exactly one
verdict and all failures are collected with reasons.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

from . import cql
from .artifact_store import ArtifactLoadError, ArtifactMissingError, ArtifactStore
from .case_model import (
    AWAY_KINDS,
    ArgumentNode,
    ArtifactKind,
    ArtifactRecord,
    AssuranceCase,
    ConnectorKind,
    Declaration,
    NodeKind,
    check_wellformed,
    resolve_away,
)
from .formal_export import BackendTransportError, LocalBackend, RemoteBackend

logger = logging.getLogger(__name__)


class VerdictStatus(str, Enum):
    VALID = "valid"
    INVALID = "invalid"
    NEEDS_SUPPORT = "needsSupport"
    NOT_EVALUATED = "notEvaluated"


class ReasonCode(str, Enum):
    R_CONSTRAINT_FAILED = "R_CONSTRAINT_FAILED"
    R_CONSTRAINT_ERROR = "R_CONSTRAINT_ERROR"
    R_ARTIFACT_MISSING = "R_ARTIFACT_MISSING"
    R_CHILD_INVALID = "R_CHILD_INVALID"
    R_UNDEVELOPED = "R_UNDEVELOPED"
    R_AWAY_INVALID = "R_AWAY_INVALID"
    R_NO_SUPPORT = "R_NO_SUPPORT"


@dataclass(frozen=True)
class NodeVerdict:
    node_id: str
    status: VerdictStatus
    reasons: tuple[tuple[ReasonCode, str], ...] = ()


@dataclass(frozen=True)
class ArtifactResult:
    """Outcome for one artifact: load status plus per-constraint results.

    ``constraint_results`` maps constraint id to True/False or an error
    message string; theory artifacts carry their backend diagnostics under
    the pseudo-constraint id ``backend``.
    """

    artifact_id: str
    passed: bool
    load_error: str | None = None
    missing: bool = False
    constraint_results: tuple[tuple[str, object], ...] = ()


@dataclass(frozen=True)
class EvaluationReport:
    case_id: str
    case_valid: bool
    evaluated_at: str
    verdicts: dict[str, NodeVerdict]
    artifact_results: dict[str, ArtifactResult]
    module_valid: dict[str, bool]


class EvaluationPreconditionError(Exception):
    """The case has well-formedness errors and cannot be evaluated."""


def _resolve_backend(backend) -> object:
    if backend is None:
        return LocalBackend()
    if isinstance(backend, str):
        return RemoteBackend(backend)
    return backend


def evaluate_artifact(record: ArtifactRecord, store: ArtifactStore,
                      backend=None) -> ArtifactResult:
    """Evaluate one artifact: load it and run its checks; never raises.

    Tabular, tree, and text artifacts run every embedded constraint through
    the query engine and pass iff all return Boolean true. Theory artifacts
    are delegated to the verification backend (the bundled in-process one by
    default, or an HTTP endpoint).
    """
    backend = _resolve_backend(backend)
    if record.kind is ArtifactKind.THEORY:
        try:
            raw = store.load(record).raw_bytes
        except ArtifactMissingError as exc:
            return ArtifactResult(record.artifact_id, passed=False,
                                  load_error=str(exc), missing=True)
        except ArtifactLoadError as exc:
            return ArtifactResult(record.artifact_id, passed=False, load_error=str(exc))
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            return ArtifactResult(record.artifact_id, passed=False,
                                  load_error=f"theory document is not UTF-8: {exc}")
        try:
            diagnostics = backend.check(text)
        except BackendTransportError as exc:
            return ArtifactResult(record.artifact_id, passed=False,
                                  constraint_results=(("backend", f"transport error: {exc}"),))
        if diagnostics.ok:
            return ArtifactResult(record.artifact_id, passed=True,
                                  constraint_results=(("backend", True),))
        problems = "; ".join(f"{e.id}: {e.message}" for e in diagnostics.entries
                             if e.severity == "error")
        return ArtifactResult(record.artifact_id, passed=False,
                              constraint_results=(("backend", f"check failed: {problems}"),))

    try:
        view = store.load(record)
    except ArtifactMissingError as exc:
        return ArtifactResult(record.artifact_id, passed=False, load_error=str(exc), missing=True)
    except ArtifactLoadError as exc:
        return ArtifactResult(record.artifact_id, passed=False, load_error=str(exc))

    results: list[tuple[str, object]] = []
    passed = True
    for constraint in record.constraints:
        try:
            program = cql.parse_query(constraint.body)
        except cql.CqlParseError as exc:
            results.append((constraint.constraint_id, f"parse error: {exc}"))
            passed = False
            continue
        value, diag = cql.eval_query(program, view)
        if not diag.ok:
            results.append((constraint.constraint_id, f"runtime error: {diag.message}"))
            passed = False
        elif not isinstance(value, bool):
            results.append((constraint.constraint_id,
                            "constraint must yield a Boolean verdict"))
            passed = False
        else:
            results.append((constraint.constraint_id, value))
            passed = passed and value
    return ArtifactResult(record.artifact_id, passed=passed,
                          constraint_results=tuple(results))


def _artifact_reason(result: ArtifactResult) -> tuple[ReasonCode, str]:
    if result.missing:
        return (ReasonCode.R_ARTIFACT_MISSING, f"artifact {result.artifact_id!r}: {result.load_error}")
    if result.load_error is not None:
        return (ReasonCode.R_CONSTRAINT_ERROR,
                f"artifact {result.artifact_id!r}: {result.load_error}")
    for cid, value in result.constraint_results:
        if value is False:
            return (ReasonCode.R_CONSTRAINT_FAILED,
                    f"artifact {result.artifact_id!r}: constraint {cid!r} returned false")
        if value is not True:
            return (ReasonCode.R_CONSTRAINT_ERROR,
                    f"artifact {result.artifact_id!r}: constraint {cid!r}: {value}")
    return (ReasonCode.R_CONSTRAINT_ERROR, f"artifact {result.artifact_id!r} failed")


TERMINATING = frozenset({Declaration.ASSUMED, Declaration.AXIOMATIC})
_EVIDENCE_KINDS = frozenset({NodeKind.SOLUTION, NodeKind.CONTEXT, NodeKind.ASSUMPTION,
                             NodeKind.JUSTIFICATION})


class _Propagator:
    """Bottom-up verdict computation over the case-wide node graph."""

    def __init__(self, case: AssuranceCase, artifact_results: dict[str, ArtifactResult],
                 subset: set[str] | None = None,
                 frozen: dict[str, NodeVerdict] | None = None):
        self.case = case
        self.artifact_results = artifact_results
        self.subset = subset
        self.frozen = frozen or {}
        self.nodes = case.all_nodes()
        self.memo: dict[str, NodeVerdict] = {}
        self.children: dict[str, list[tuple[ConnectorKind, str]]] = {}
        for module in case.modules:
            for conn in sorted(module.connectors, key=lambda c: c.connector_id):
                self.children.setdefault(conn.source, []).append((conn.kind, conn.target))

    def verdict(self, node_id: str) -> NodeVerdict:
        if node_id in self.memo:
            return self.memo[node_id]
        if self.subset is not None and node_id not in self.subset:
            out = self.frozen.get(node_id,
                                  NodeVerdict(node_id, VerdictStatus.NOT_EVALUATED))
            self.memo[node_id] = out
            return out
        # Well-formedness guarantees acyclicity, so plain recursion terminates.
        _, node = self.nodes[node_id]
        out = self._compute(node)
        self.memo[node_id] = out
        return out

    def _compute(self, node: ArgumentNode) -> NodeVerdict:
        if node.kind in AWAY_KINDS:
            return self._away(node)
        if node.kind in _EVIDENCE_KINDS:
            return self._evidence(node)
        if node.kind is NodeKind.STRATEGY:
            return self._structural(node, require_support=True)
        return self._goal(node)

    def _away(self, node: ArgumentNode) -> NodeVerdict:
        try:
            _, target_id = resolve_away(self.case, node.node_id)
        except Exception as exc:
            return NodeVerdict(node.node_id, VerdictStatus.INVALID,
                               ((ReasonCode.R_AWAY_INVALID, str(exc)),))
        resolved = self.verdict(target_id)
        if resolved.status is VerdictStatus.VALID:
            return NodeVerdict(node.node_id, VerdictStatus.VALID)
        status = (VerdictStatus.INVALID if resolved.status is VerdictStatus.INVALID
                  else VerdictStatus.NEEDS_SUPPORT)
        return NodeVerdict(node.node_id, status,
                           ((ReasonCode.R_AWAY_INVALID,
                             f"referenced node {target_id!r} is {resolved.status.value}"),))

    def _evidence(self, node: ArgumentNode) -> NodeVerdict:
        if node.citations:
            reasons = []
            for artifact_id in sorted(node.citations):
                result = self.artifact_results.get(artifact_id)
                if result is None:
                    reasons.append((ReasonCode.R_CONSTRAINT_ERROR,
                                    f"artifact {artifact_id!r} was not evaluated"))
                elif not result.passed:
                    reasons.append(_artifact_reason(result))
            if reasons:
                return NodeVerdict(node.node_id, VerdictStatus.INVALID, tuple(reasons))
            return NodeVerdict(node.node_id, VerdictStatus.VALID)
        if node.declaration in TERMINATING or node.declaration is Declaration.ASSERTED:
            return NodeVerdict(node.node_id, VerdictStatus.VALID)
        return NodeVerdict(node.node_id, VerdictStatus.NEEDS_SUPPORT,
                           ((ReasonCode.R_NO_SUPPORT,
                             "no citations and no terminating declaration"),))

    def _goal(self, node: ArgumentNode) -> NodeVerdict:
        if node.undeveloped:
            return NodeVerdict(node.node_id, VerdictStatus.NEEDS_SUPPORT,
                               ((ReasonCode.R_UNDEVELOPED, "goal is undeveloped"),))
        if node.declaration is Declaration.NEEDS_SUPPORT:
            return NodeVerdict(node.node_id, VerdictStatus.NEEDS_SUPPORT,
                               ((ReasonCode.R_NO_SUPPORT, "goal is declared needsSupport"),))
        return self._structural(node, require_support=node.declaration not in TERMINATING)

    def _structural(self, node: ArgumentNode, require_support: bool) -> NodeVerdict:
        children = self.children.get(node.node_id, [])
        supports = [target for kind, target in children if kind is ConnectorKind.SUPPORTED_BY]
        contexts = [target for kind, target in children if kind is ConnectorKind.IN_CONTEXT_OF]
        reasons: list[tuple[ReasonCode, str]] = []
        worst = VerdictStatus.VALID
        for target in contexts + supports:
            child = self.verdict(target)
            if child.status is VerdictStatus.VALID:
                continue
            if child.status is VerdictStatus.INVALID:
                worst = VerdictStatus.INVALID
            elif worst is not VerdictStatus.INVALID:
                worst = VerdictStatus.NEEDS_SUPPORT
            reasons.append((ReasonCode.R_CHILD_INVALID,
                            f"{target!r} is {child.status.value}"))
        if require_support and not supports:
            if worst is not VerdictStatus.INVALID:
                worst = VerdictStatus.NEEDS_SUPPORT
            reasons.append((ReasonCode.R_NO_SUPPORT, "no SupportedBy target"))
        if worst is VerdictStatus.VALID:
            return NodeVerdict(node.node_id, VerdictStatus.VALID)
        return NodeVerdict(node.node_id, worst, tuple(reasons))


def cited_artifact_ids(case: AssuranceCase) -> set[str]:
    out: set[str] = set()
    for module in case.modules:
        for node in module.nodes:
            out.update(node.citations)
    return out


def evaluate_artifacts(case: AssuranceCase, store: ArtifactStore, backend=None,
                       only: set[str] | None = None) -> dict[str, ArtifactResult]:
    """Evaluate the case's cited artifacts (optionally restricted to a subset)."""
    backend = _resolve_backend(backend)
    cited = cited_artifact_ids(case)
    results: dict[str, ArtifactResult] = {}
    for artifact_id, record in sorted(case.all_artifacts().items()):
        if artifact_id not in cited:
            continue
        if only is not None and artifact_id not in only:
            continue
        results[artifact_id] = evaluate_artifact(record, store, backend)
    return results


def propagate(case: AssuranceCase, artifact_results: dict[str, ArtifactResult],
              subset: set[str] | None = None,
              frozen: dict[str, NodeVerdict] | None = None) -> dict[str, NodeVerdict]:
    """Compute verdicts for every node (or a subset, reusing frozen verdicts)."""
    propagator = _Propagator(case, artifact_results, subset, frozen)
    verdicts: dict[str, NodeVerdict] = {}
    for module in sorted(case.modules, key=lambda m: m.module_id):
        for node in sorted(module.nodes, key=lambda n: n.node_id):
            verdicts[node.node_id] = propagator.verdict(node.node_id)
    return verdicts


def module_validity(case: AssuranceCase, verdicts: dict[str, NodeVerdict]) -> dict[str, bool]:
    """A module is valid iff all its public goals are valid."""
    out: dict[str, bool] = {}
    for module in case.modules:
        public_goals = [n for n in module.nodes if n.public and n.kind is NodeKind.GOAL]
        out[module.module_id] = all(
            verdicts[n.node_id].status is VerdictStatus.VALID for n in public_goals)
    return out


def evaluate_case(case: AssuranceCase, store: ArtifactStore,
                  backend=None) -> EvaluationReport:
    """Evaluate the whole case; requires a case with no well-formedness errors.

    Artifact evaluations are independent and failures never abort the run;
    the case is valid iff every public goal of every module is valid.
    """
    errors = [f for f in check_wellformed(case) if f.code.is_error]
    if errors:
        raise EvaluationPreconditionError(
            "case has well-formedness errors: "
            + "; ".join(f"{f.code.value} {f.subject_id}" for f in errors))
    artifact_results = evaluate_artifacts(case, store, backend)
    verdicts = propagate(case, artifact_results)
    modules = module_validity(case, verdicts)
    return EvaluationReport(
        case_id=case.case_id,
        case_valid=all(modules.values()),
        evaluated_at=datetime.now(timezone.utc).isoformat(),
        verdicts=verdicts,
        artifact_results=artifact_results,
        module_valid=modules,
    )


def report_to_json(report: EvaluationReport) -> dict:
    """Mirror an evaluation report into the documented JSON shape."""
    return {
        "caseId": report.case_id,
        "caseValid": report.case_valid,
        "evaluatedAt": report.evaluated_at,
        "moduleValid": dict(sorted(report.module_valid.items())),
        "verdicts": {
            node_id: {
                "status": v.status.value,
                "reasons": [{"code": code.value, "message": message}
                            for code, message in v.reasons],
            }
            for node_id, v in sorted(report.verdicts.items())
        },
        "artifactResults": {
            artifact_id: {
                "passed": r.passed,
                "loadError": r.load_error,
                "constraints": {
                    cid: (value if isinstance(value, bool) else {"error": value})
                    for cid, value in r.constraint_results
                },
            }
            for artifact_id, r in sorted(report.artifact_results.items())
        },
    }
