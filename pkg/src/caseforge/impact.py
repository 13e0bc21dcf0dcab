"""Change impact analysis from artifact edits to argument nodes.

A baseline snapshots every artifact's fingerprint; impact compares the
current tree against a baseline and closes the set of affected nodes upward
through the argument graph, across modules through away references. Impact
is purely structural, so it over-approximates: every node whose evaluation
verdict could change is flagged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .artifact_store import ArtifactStore
from .case_model import AssuranceCase, ConnectorKind, resolve_away


@dataclass(frozen=True)
class Baseline:
    case_id: str
    created_at: str
    fingerprints: dict[str, str]


@dataclass(frozen=True)
class ImpactReport:
    case_id: str
    changed_artifacts: tuple[str, ...]
    added_artifacts: tuple[str, ...]
    removed_artifacts: tuple[str, ...]
    impacted_nodes: tuple[str, ...]  # deduplicated, child before parent


class SnapshotError(Exception):
    def __init__(self, offenders: dict[str, str]):
        self.offenders = dict(offenders)
        listed = "; ".join(f"{k}: {v}" for k, v in sorted(offenders.items()))
        super().__init__(f"cannot snapshot artifact(s): {listed}")


def snapshot(case: AssuranceCase, store: ArtifactStore) -> Baseline:
    """Fingerprint every artifact record in the case."""
    fingerprints: dict[str, str] = {}
    offenders: dict[str, str] = {}
    for artifact_id, record in sorted(case.all_artifacts().items()):
        try:
            fingerprints[artifact_id] = store.fingerprint(record).digest
        except Exception as exc:
            offenders[artifact_id] = str(exc)
    if offenders:
        raise SnapshotError(offenders)
    return Baseline(case.case_id, datetime.now(timezone.utc).isoformat(), fingerprints)


def baseline_to_json(baseline: Baseline) -> dict:
    return {
        "caseId": baseline.case_id,
        "createdAt": baseline.created_at,
        "fingerprints": dict(sorted(baseline.fingerprints.items())),
    }


def save_baseline(baseline: Baseline, path: Path | str) -> None:
    Path(path).write_text(json.dumps(baseline_to_json(baseline), indent=2) + "\n",
                          encoding="utf-8")


def load_baseline(path: Path | str) -> Baseline:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, dict) or not isinstance(obj.get("caseId"), str) \
            or not isinstance(obj.get("createdAt"), str) \
            or not isinstance(obj.get("fingerprints"), dict):
        raise ValueError(f"{path}: not a baseline file")
    fingerprints = {}
    for key, value in obj["fingerprints"].items():
        if not isinstance(value, str):
            raise ValueError(f"{path}: fingerprint for {key!r} must be a string")
        fingerprints[str(key)] = value
    return Baseline(obj["caseId"], obj["createdAt"], fingerprints)


def citing_nodes(case: AssuranceCase, artifact_ids: set[str]) -> set[str]:
    out: set[str] = set()
    for module in case.modules:
        for node in module.nodes:
            if any(cited in artifact_ids for cited in node.citations):
                out.add(node.node_id)
    return out


def upward_closure(case: AssuranceCase, seeds: set[str]) -> set[str]:
    """Close a node set upward: connector parents plus away nodes resolving in.

    A node supporting (or contextualizing) an affected node affects its
    parent; an away node whose resolution target is affected is itself
    affected. Inter-module support follows the away references that realize
    it.
    """
    parents: dict[str, set[str]] = {}
    for module in case.modules:
        for conn in module.connectors:
            parents.setdefault(conn.target, set()).add(conn.source)
    away_in: dict[str, set[str]] = {}
    for module in case.modules:
        for node in module.nodes:
            if node.away_target is not None:
                try:
                    _, target_id = resolve_away(case, node.node_id)
                except Exception:
                    continue
                away_in.setdefault(target_id, set()).add(node.node_id)

    closed = set(seeds)
    frontier = list(seeds)
    while frontier:
        node_id = frontier.pop()
        for upper in parents.get(node_id, set()) | away_in.get(node_id, set()):
            if upper not in closed:
                closed.add(upper)
                frontier.append(upper)
    return closed


def _topological_child_first(case: AssuranceCase, node_ids: set[str]) -> tuple[str, ...]:
    """Order nodes children-before-parents; ties broken by node id."""
    children: dict[str, set[str]] = {}
    for module in case.modules:
        for conn in module.connectors:
            children.setdefault(conn.source, set()).add(conn.target)
    for module in case.modules:
        for node in module.nodes:
            if node.away_target is not None:
                try:
                    _, target_id = resolve_away(case, node.node_id)
                except Exception:
                    continue
                children.setdefault(node.node_id, set()).add(target_id)

    order: list[str] = []
    state: dict[str, int] = {}

    def visit(node_id: str) -> None:
        if state.get(node_id) is not None:
            return
        state[node_id] = 1
        for child in sorted(children.get(node_id, ())):
            visit(child)
        state[node_id] = 2
        if node_id in node_ids:
            order.append(node_id)

    for node_id in sorted(case.all_nodes()):
        visit(node_id)
    return tuple(order)


def impact_of(case: AssuranceCase, baseline: Baseline, store: ArtifactStore) -> ImpactReport:
    """Compare the artifact tree against a baseline and flag affected nodes.

    An unreadable current artifact counts as changed (the conservative
    choice for an over-approximation).
    """
    if baseline.case_id != case.case_id:
        raise ValueError(
            f"baseline is for case {baseline.case_id!r}, not {case.case_id!r}")
    records = case.all_artifacts()
    changed: list[str] = []
    for artifact_id, record in sorted(records.items()):
        if artifact_id not in baseline.fingerprints:
            continue
        try:
            digest = store.fingerprint(record).digest
        except Exception:
            changed.append(artifact_id)
            continue
        if digest != baseline.fingerprints[artifact_id]:
            changed.append(artifact_id)
    added = sorted(set(records) - set(baseline.fingerprints))
    removed = sorted(set(baseline.fingerprints) - set(records))

    seeds = citing_nodes(case, set(changed))
    impacted = _topological_child_first(case, upward_closure(case, seeds)) if seeds else ()
    return ImpactReport(
        case_id=case.case_id,
        changed_artifacts=tuple(changed),
        added_artifacts=tuple(added),
        removed_artifacts=tuple(removed),
        impacted_nodes=impacted,
    )


def impact_to_json(report: ImpactReport) -> dict:
    return {
        "caseId": report.case_id,
        "changedArtifacts": list(report.changed_artifacts),
        "addedArtifacts": list(report.added_artifacts),
        "removedArtifacts": list(report.removed_artifacts),
        "impactedNodes": list(report.impacted_nodes),
    }
