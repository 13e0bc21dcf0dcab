"""Assurance case data model: parsing, serialization, and well-formedness.

The model is a GSN view layered over structured-assurance-case concepts:
argument modules hold nodes and connectors, artifact packages hold typed
references to engineering documents together with embedded constraint
programs, and away nodes bridge modules by referencing public nodes
elsewhere. All types are immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping


class NodeKind(str, Enum):
    GOAL = "Goal"
    STRATEGY = "Strategy"
    SOLUTION = "Solution"
    CONTEXT = "Context"
    ASSUMPTION = "Assumption"
    JUSTIFICATION = "Justification"
    AWAY_GOAL = "AwayGoal"
    AWAY_CONTEXT = "AwayContext"
    AWAY_SOLUTION = "AwaySolution"


AWAY_KINDS = frozenset({NodeKind.AWAY_GOAL, NodeKind.AWAY_CONTEXT, NodeKind.AWAY_SOLUTION})

#: What an away node must resolve to in its target module.
AWAY_RESOLUTION_KIND = {
    NodeKind.AWAY_GOAL: NodeKind.GOAL,
    NodeKind.AWAY_CONTEXT: NodeKind.CONTEXT,
    NodeKind.AWAY_SOLUTION: NodeKind.SOLUTION,
}

CONTEXTUAL_KINDS = frozenset(
    {NodeKind.CONTEXT, NodeKind.ASSUMPTION, NodeKind.JUSTIFICATION, NodeKind.AWAY_CONTEXT}
)


class ConnectorKind(str, Enum):
    SUPPORTED_BY = "SupportedBy"
    IN_CONTEXT_OF = "InContextOf"


class Declaration(str, Enum):
    NONE = "none"
    AXIOMATIC = "axiomatic"
    ASSUMED = "assumed"
    NEEDS_SUPPORT = "needsSupport"
    ASSERTED = "asserted"


class ArtifactKind(str, Enum):
    TABULAR = "tabular"
    TREE = "tree"
    TEXT = "text"
    THEORY = "theory"


# Connector well-formedness matrix. A (connector kind, source kind) pair maps
# to the set of permitted target kinds; pairs absent from the matrix admit no
# target at all. The direction convention is source = supported/contextualized
# element, target = supporting/contextual element.
CONNECTOR_MATRIX: dict[tuple[ConnectorKind, NodeKind], frozenset[NodeKind]] = {
    (ConnectorKind.SUPPORTED_BY, NodeKind.GOAL): frozenset(
        {NodeKind.GOAL, NodeKind.STRATEGY, NodeKind.SOLUTION, NodeKind.AWAY_GOAL, NodeKind.AWAY_SOLUTION}
    ),
    (ConnectorKind.SUPPORTED_BY, NodeKind.AWAY_GOAL): frozenset(
        {NodeKind.GOAL, NodeKind.STRATEGY, NodeKind.SOLUTION, NodeKind.AWAY_GOAL, NodeKind.AWAY_SOLUTION}
    ),
    (ConnectorKind.SUPPORTED_BY, NodeKind.STRATEGY): frozenset(
        {NodeKind.GOAL, NodeKind.AWAY_GOAL, NodeKind.SOLUTION, NodeKind.AWAY_SOLUTION}
    ),
    (ConnectorKind.IN_CONTEXT_OF, NodeKind.GOAL): frozenset(
        {NodeKind.CONTEXT, NodeKind.ASSUMPTION, NodeKind.JUSTIFICATION, NodeKind.AWAY_CONTEXT}
    ),
    (ConnectorKind.IN_CONTEXT_OF, NodeKind.AWAY_GOAL): frozenset(
        {NodeKind.CONTEXT, NodeKind.ASSUMPTION, NodeKind.JUSTIFICATION, NodeKind.AWAY_CONTEXT}
    ),
    (ConnectorKind.IN_CONTEXT_OF, NodeKind.STRATEGY): frozenset(
        {NodeKind.CONTEXT, NodeKind.ASSUMPTION, NodeKind.JUSTIFICATION, NodeKind.AWAY_CONTEXT}
    ),
}


def connector_permitted(kind: ConnectorKind, source: NodeKind, target: NodeKind) -> bool:
    """Classify a (connector kind, source kind, target kind) triple. Total."""
    return target in CONNECTOR_MATRIX.get((kind, source), frozenset())


class FindingCode(str, Enum):
    E_CONN_TYPE = "E_CONN_TYPE"
    E_CYCLE = "E_CYCLE"
    E_DANGLING_REF = "E_DANGLING_REF"
    E_AWAY_UNRESOLVED = "E_AWAY_UNRESOLVED"
    E_DUP_ID = "E_DUP_ID"
    W_UNDEVELOPED = "W_UNDEVELOPED"

    @property
    def is_error(self) -> bool:
        return self.value.startswith("E_")


@dataclass(frozen=True)
class WellformednessFinding:
    code: FindingCode
    subject_id: str
    message: str


@dataclass(frozen=True)
class AwayTarget:
    module: str
    node: str


@dataclass(frozen=True)
class ArgumentNode:
    node_id: str
    kind: NodeKind
    description: str = ""
    undeveloped: bool = False
    public: bool = False
    declaration: Declaration = Declaration.NONE
    citations: tuple[str, ...] = ()
    away_target: AwayTarget | None = None


@dataclass(frozen=True)
class Connector:
    connector_id: str
    kind: ConnectorKind
    source: str
    target: str


@dataclass(frozen=True)
class ArgumentModule:
    module_id: str
    nodes: tuple[ArgumentNode, ...] = ()
    connectors: tuple[Connector, ...] = ()

    def node(self, node_id: str) -> ArgumentNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)


@dataclass(frozen=True)
class ConstraintRecord:
    constraint_id: str
    language: str
    body: str


@dataclass(frozen=True)
class ArtifactRecord:
    artifact_id: str
    kind: ArtifactKind
    document_path: str
    metadata: tuple[tuple[str, str], ...] = ()
    constraints: tuple[ConstraintRecord, ...] = ()

    def metadata_map(self) -> dict[str, str]:
        return dict(self.metadata)


@dataclass(frozen=True)
class ArtifactPackage:
    package_id: str
    artifacts: tuple[ArtifactRecord, ...] = ()


@dataclass(frozen=True)
class AssuranceCase:
    case_id: str
    modules: tuple[ArgumentModule, ...] = ()
    artifact_packages: tuple[ArtifactPackage, ...] = ()
    inter_module_supports: tuple[tuple[str, str], ...] = ()

    def module(self, module_id: str) -> ArgumentModule:
        for m in self.modules:
            if m.module_id == module_id:
                return m
        raise KeyError(module_id)

    def all_nodes(self) -> dict[str, tuple[str, ArgumentNode]]:
        """Map node id -> (owning module id, node). Node ids are case-wide unique."""
        out: dict[str, tuple[str, ArgumentNode]] = {}
        for m in self.modules:
            for n in m.nodes:
                out[n.node_id] = (m.module_id, n)
        return out

    def all_artifacts(self) -> dict[str, ArtifactRecord]:
        out: dict[str, ArtifactRecord] = {}
        for p in self.artifact_packages:
            for a in p.artifacts:
                out[a.artifact_id] = a
        return out


class CaseParseError(Exception):
    """Raised when a case document cannot be parsed or resolved.

    ``line``/``column`` are set for document syntax errors; ``code`` is set
    when the failure maps onto a well-formedness code (dangling reference,
    duplicate id).
    """

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None,
                 code: FindingCode | None = None):
        self.line = line
        self.column = column
        self.code = code
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class AwayResolutionError(Exception):
    """An away node whose target is missing, non-public, or kind-mismatched."""

    code = FindingCode.E_AWAY_UNRESOLVED

    def __init__(self, node_id: str, message: str):
        self.node_id = node_id
        super().__init__(f"{node_id}: {message}")


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_NODE_KEYS = {"id", "kind", "description", "undeveloped", "public", "declaration",
              "citations", "awayTarget"}
_CONNECTOR_KEYS = {"id", "kind", "source", "target"}
_MODULE_KEYS = {"id", "nodes", "connectors"}
_PACKAGE_KEYS = {"id", "artifacts"}
_ARTIFACT_KEYS = {"id", "kind", "document", "metadata", "constraints"}
_CONSTRAINT_KEYS = {"id", "language", "body"}
_TOP_KEYS = {"caseId", "modules", "artifactPackages", "interModuleSupports"}


def _reject_unknown(obj: Mapping, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise CaseParseError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _expect(obj, typ, where: str):
    if not isinstance(obj, typ) or isinstance(obj, bool) and typ is not bool:
        raise CaseParseError(f"{where}: expected {typ.__name__}")
    return obj


def _enum_value(enum_cls, raw, where: str):
    try:
        return enum_cls(raw)
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise CaseParseError(f"{where}: {raw!r} is not one of {valid}") from None


def _parse_node(obj, where: str) -> ArgumentNode:
    _expect(obj, dict, where)
    _reject_unknown(obj, _NODE_KEYS, where)
    node_id = _expect(obj.get("id"), str, f"{where}.id")
    kind = _enum_value(NodeKind, obj.get("kind"), f"{where}.kind")
    description = _expect(obj.get("description", ""), str, f"{where}.description")
    undeveloped = _expect(obj.get("undeveloped", False), bool, f"{where}.undeveloped")
    public = _expect(obj.get("public", False), bool, f"{where}.public")
    declaration = _enum_value(Declaration, obj.get("declaration", "none"), f"{where}.declaration")
    citations = tuple(
        _expect(c, str, f"{where}.citations[{i}]")
        for i, c in enumerate(_expect(obj.get("citations", []), list, f"{where}.citations"))
    )
    away_target = None
    if "awayTarget" in obj:
        at = _expect(obj["awayTarget"], dict, f"{where}.awayTarget")
        _reject_unknown(at, {"module", "node"}, f"{where}.awayTarget")
        away_target = AwayTarget(
            module=_expect(at.get("module"), str, f"{where}.awayTarget.module"),
            node=_expect(at.get("node"), str, f"{where}.awayTarget.node"),
        )
    node = ArgumentNode(node_id, kind, description, undeveloped, public,
                        declaration, citations, away_target)
    _check_node_invariants(node, where)
    return node


def _check_node_invariants(node: ArgumentNode, where: str) -> None:
    if node.undeveloped and node.kind not in (NodeKind.GOAL, NodeKind.STRATEGY):
        raise CaseParseError(f"{where}: only goals and strategies may be undeveloped")
    if (node.away_target is not None) != (node.kind in AWAY_KINDS):
        raise CaseParseError(f"{where}: awayTarget present iff the node is an away kind")


def _parse_connector(obj, where: str) -> Connector:
    _expect(obj, dict, where)
    _reject_unknown(obj, _CONNECTOR_KEYS, where)
    return Connector(
        connector_id=_expect(obj.get("id"), str, f"{where}.id"),
        kind=_enum_value(ConnectorKind, obj.get("kind"), f"{where}.kind"),
        source=_expect(obj.get("source"), str, f"{where}.source"),
        target=_expect(obj.get("target"), str, f"{where}.target"),
    )


def _parse_constraint(obj, where: str) -> ConstraintRecord:
    _expect(obj, dict, where)
    _reject_unknown(obj, _CONSTRAINT_KEYS, where)
    language = _expect(obj.get("language"), str, f"{where}.language")
    if language != "cql":
        raise CaseParseError(f"{where}.language: only 'cql' is supported, got {language!r}")
    return ConstraintRecord(
        constraint_id=_expect(obj.get("id"), str, f"{where}.id"),
        language=language,
        body=_expect(obj.get("body"), str, f"{where}.body"),
    )


def _parse_artifact(obj, where: str) -> ArtifactRecord:
    _expect(obj, dict, where)
    _reject_unknown(obj, _ARTIFACT_KEYS, where)
    document = _expect(obj.get("document"), str, f"{where}.document")
    if not document:
        raise CaseParseError(f"{where}.document: must be non-empty")
    metadata_obj = _expect(obj.get("metadata", {}), dict, f"{where}.metadata")
    metadata = tuple(
        (str(k), _expect(v, str, f"{where}.metadata[{k!r}]")) for k, v in sorted(metadata_obj.items())
    )
    constraints = tuple(
        _parse_constraint(c, f"{where}.constraints[{i}]")
        for i, c in enumerate(_expect(obj.get("constraints", []), list, f"{where}.constraints"))
    )
    return ArtifactRecord(
        artifact_id=_expect(obj.get("id"), str, f"{where}.id"),
        kind=_enum_value(ArtifactKind, obj.get("kind"), f"{where}.kind"),
        document_path=document,
        metadata=metadata,
        constraints=constraints,
    )


def parse_case(data: bytes) -> AssuranceCase:
    """Parse a UTF-8 case document into a fully resolved assurance case.

    All id references (connector endpoints, citations, inter-module support
    endpoints) are checked; duplicates and unknown keys are rejected. Away
    target resolution is deferred to :func:`check_wellformed` /
    :func:`resolve_away`, which report it as a finding rather than a parse
    failure.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CaseParseError(f"document is not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc

    _expect(doc, dict, "document")
    missing = sorted(_TOP_KEYS - set(doc))
    if missing:
        raise CaseParseError(f"document: missing key(s) {', '.join(missing)}")
    _reject_unknown(doc, _TOP_KEYS, "document")

    case_id = _expect(doc["caseId"], str, "caseId")
    modules = []
    for i, mobj in enumerate(_expect(doc["modules"], list, "modules")):
        where = f"modules[{i}]"
        _expect(mobj, dict, where)
        _reject_unknown(mobj, _MODULE_KEYS, where)
        module_id = _expect(mobj.get("id"), str, f"{where}.id")
        nodes = tuple(
            _parse_node(n, f"{where}.nodes[{j}]")
            for j, n in enumerate(_expect(mobj.get("nodes", []), list, f"{where}.nodes"))
        )
        connectors = tuple(
            _parse_connector(c, f"{where}.connectors[{j}]")
            for j, c in enumerate(_expect(mobj.get("connectors", []), list, f"{where}.connectors"))
        )
        modules.append(ArgumentModule(module_id, nodes, connectors))

    packages = []
    for i, pobj in enumerate(_expect(doc["artifactPackages"], list, "artifactPackages")):
        where = f"artifactPackages[{i}]"
        _expect(pobj, dict, where)
        _reject_unknown(pobj, _PACKAGE_KEYS, where)
        packages.append(ArtifactPackage(
            package_id=_expect(pobj.get("id"), str, f"{where}.id"),
            artifacts=tuple(
                _parse_artifact(a, f"{where}.artifacts[{j}]")
                for j, a in enumerate(_expect(pobj.get("artifacts", []), list, f"{where}.artifacts"))
            ),
        ))

    supports = []
    for i, pair in enumerate(_expect(doc["interModuleSupports"], list, "interModuleSupports")):
        where = f"interModuleSupports[{i}]"
        _expect(pair, dict, where)
        _reject_unknown(pair, {"source", "target"}, where)
        supports.append((
            _expect(pair.get("source"), str, f"{where}.source"),
            _expect(pair.get("target"), str, f"{where}.target"),
        ))

    case = AssuranceCase(case_id, tuple(modules), tuple(packages), tuple(supports))
    _resolve_references(case)
    return case


def _resolve_references(case: AssuranceCase) -> None:
    """Fail-fast reference and uniqueness checks for a freshly parsed case."""
    seen_modules: set[str] = set()
    for m in case.modules:
        if m.module_id in seen_modules:
            raise CaseParseError(f"duplicate module id {m.module_id!r}", code=FindingCode.E_DUP_ID)
        seen_modules.add(m.module_id)

    seen_nodes: set[str] = set()
    for m in case.modules:
        for n in m.nodes:
            if n.node_id in seen_nodes:
                raise CaseParseError(f"duplicate node id {n.node_id!r}", code=FindingCode.E_DUP_ID)
            seen_nodes.add(n.node_id)
            if n.away_target is not None and n.away_target.module == m.module_id:
                raise CaseParseError(
                    f"away node {n.node_id!r} targets its own module {m.module_id!r}")

    seen_connectors: set[str] = set()
    for m in case.modules:
        local = {n.node_id for n in m.nodes}
        for c in m.connectors:
            if c.connector_id in seen_connectors:
                raise CaseParseError(
                    f"duplicate connector id {c.connector_id!r}", code=FindingCode.E_DUP_ID)
            seen_connectors.add(c.connector_id)
            for endpoint in (c.source, c.target):
                if endpoint not in local:
                    raise CaseParseError(
                        f"connector {c.connector_id!r} references unknown node {endpoint!r} "
                        f"in module {m.module_id!r}",
                        code=FindingCode.E_DANGLING_REF)

    seen_packages: set[str] = set()
    seen_artifacts: set[str] = set()
    for p in case.artifact_packages:
        if p.package_id in seen_packages:
            raise CaseParseError(f"duplicate package id {p.package_id!r}", code=FindingCode.E_DUP_ID)
        seen_packages.add(p.package_id)
        for a in p.artifacts:
            if a.artifact_id in seen_artifacts:
                raise CaseParseError(
                    f"duplicate artifact id {a.artifact_id!r}", code=FindingCode.E_DUP_ID)
            seen_artifacts.add(a.artifact_id)

    for m in case.modules:
        for n in m.nodes:
            for cited in n.citations:
                if cited not in seen_artifacts:
                    raise CaseParseError(
                        f"node {n.node_id!r} cites unknown artifact {cited!r}",
                        code=FindingCode.E_DANGLING_REF)

    for src, tgt in case.inter_module_supports:
        for endpoint in (src, tgt):
            if endpoint not in seen_modules:
                raise CaseParseError(
                    f"interModuleSupports references unknown module {endpoint!r}",
                    code=FindingCode.E_DANGLING_REF)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _node_to_obj(n: ArgumentNode) -> dict:
    obj: dict = {"id": n.node_id, "kind": n.kind.value, "description": n.description}
    if n.undeveloped:
        obj["undeveloped"] = True
    if n.public:
        obj["public"] = True
    if n.declaration is not Declaration.NONE:
        obj["declaration"] = n.declaration.value
    if n.citations:
        obj["citations"] = sorted(n.citations)
    if n.away_target is not None:
        obj["awayTarget"] = {"module": n.away_target.module, "node": n.away_target.node}
    return obj


def _artifact_to_obj(a: ArtifactRecord) -> dict:
    obj: dict = {"id": a.artifact_id, "kind": a.kind.value, "document": a.document_path}
    if a.metadata:
        obj["metadata"] = {k: v for k, v in sorted(a.metadata)}
    if a.constraints:
        obj["constraints"] = [
            {"id": c.constraint_id, "language": c.language, "body": c.body}
            for c in sorted(a.constraints, key=lambda c: c.constraint_id)
        ]
    return obj


def serialize_case(case: AssuranceCase) -> bytes:
    """Serialize to canonical UTF-8 bytes: elements sorted by id, stable keys.

    Requires the case to be well-formed (no error findings); the canonical
    ordering makes serialization deterministic regardless of construction
    order, so parse(serialize(c)) is structurally equal to c.
    """
    errors = [f for f in check_wellformed(case) if f.code.is_error]
    if errors:
        raise ValueError(
            "cannot serialize an ill-formed case: "
            + "; ".join(f"{f.code.value} {f.subject_id}" for f in errors))
    doc = {
        "caseId": case.case_id,
        "modules": [
            {
                "id": m.module_id,
                "nodes": [_node_to_obj(n) for n in sorted(m.nodes, key=lambda n: n.node_id)],
                "connectors": [
                    {"id": c.connector_id, "kind": c.kind.value, "source": c.source, "target": c.target}
                    for c in sorted(m.connectors, key=lambda c: c.connector_id)
                ],
            }
            for m in sorted(case.modules, key=lambda m: m.module_id)
        ],
        "artifactPackages": [
            {
                "id": p.package_id,
                "artifacts": [
                    _artifact_to_obj(a) for a in sorted(p.artifacts, key=lambda a: a.artifact_id)
                ],
            }
            for p in sorted(case.artifact_packages, key=lambda p: p.package_id)
        ],
        "interModuleSupports": [
            {"source": s, "target": t} for s, t in sorted(case.inter_module_supports)
        ],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def structurally_equal(a: AssuranceCase, b: AssuranceCase) -> bool:
    """Order-insensitive structural equality over element sets."""
    def module_key(m: ArgumentModule):
        return (m.module_id, frozenset(m.nodes), frozenset(m.connectors))

    def package_key(p: ArtifactPackage):
        return (p.package_id, frozenset(p.artifacts))

    return (
        a.case_id == b.case_id
        and {module_key(m) for m in a.modules} == {module_key(m) for m in b.modules}
        and {package_key(p) for p in a.artifact_packages} == {package_key(p) for p in b.artifact_packages}
        and set(a.inter_module_supports) == set(b.inter_module_supports)
    )


# --------------------------------------------------------------------------
# Well-formedness
# --------------------------------------------------------------------------


def _find_cycle(edges: Mapping[str, Iterable[str]], vertices: Iterable[str]) -> list[str] | None:
    """Return one cycle as a vertex list, or None. Deterministic DFS order."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {v: WHITE for v in vertices}
    stack: list[str] = []

    def visit(v: str) -> list[str] | None:
        color[v] = GRAY
        stack.append(v)
        for w in sorted(edges.get(v, ())):
            if color.get(w, WHITE) == GRAY:
                return stack[stack.index(w):] + [w]
            if color.get(w, WHITE) == WHITE:
                found = visit(w)
                if found:
                    return found
        stack.pop()
        color[v] = BLACK
        return None

    for v in sorted(color):
        if color[v] == WHITE:
            found = visit(v)
            if found:
                return found
    return None


def resolve_away(case: AssuranceCase, node_id: str) -> tuple[str, str]:
    """Resolve an away node to its referenced (module id, node id).

    The referenced node must exist, be public, and have the kind the away
    kind promises (AwayGoal -> Goal, and so on).
    """
    nodes = case.all_nodes()
    if node_id not in nodes:
        raise KeyError(node_id)
    _, node = nodes[node_id]
    if node.kind not in AWAY_KINDS:
        raise ValueError(f"{node_id} is not an away node (kind {node.kind.value})")
    target = node.away_target
    assert target is not None
    try:
        module = case.module(target.module)
    except KeyError:
        raise AwayResolutionError(node_id, f"target module {target.module!r} does not exist") from None
    try:
        resolved = module.node(target.node)
    except KeyError:
        raise AwayResolutionError(
            node_id, f"target node {target.node!r} does not exist in module {target.module!r}") from None
    if not resolved.public:
        raise AwayResolutionError(node_id, f"target node {target.node!r} is not public")
    expected = AWAY_RESOLUTION_KIND[node.kind]
    if resolved.kind is not expected:
        raise AwayResolutionError(
            node_id,
            f"target node {target.node!r} has kind {resolved.kind.value}, expected {expected.value}")
    return (target.module, target.node)


def check_wellformed(case: AssuranceCase) -> list[WellformednessFinding]:
    """Check the full well-formedness rule set; findings are the result.

    Error findings: duplicate ids, dangling references, connector type-matrix
    violations, unresolved away references, and support cycles (per-module
    SupportedBy and the cross-module graph over inter-module supports plus
    away references). Undeveloped nodes yield warnings.
    """
    findings: list[WellformednessFinding] = []

    def add(code: FindingCode, subject: str, message: str) -> None:
        findings.append(WellformednessFinding(code, subject, message))

    module_ids: set[str] = set()
    for m in case.modules:
        if m.module_id in module_ids:
            add(FindingCode.E_DUP_ID, m.module_id, f"duplicate module id {m.module_id!r}")
        module_ids.add(m.module_id)

    node_owner: dict[str, str] = {}
    for m in case.modules:
        for n in m.nodes:
            if n.node_id in node_owner:
                add(FindingCode.E_DUP_ID, n.node_id, f"duplicate node id {n.node_id!r}")
            else:
                node_owner[n.node_id] = m.module_id

    package_ids: set[str] = set()
    artifact_ids: set[str] = set()
    for p in case.artifact_packages:
        if p.package_id in package_ids:
            add(FindingCode.E_DUP_ID, p.package_id, f"duplicate package id {p.package_id!r}")
        package_ids.add(p.package_id)
        for a in p.artifacts:
            if a.artifact_id in artifact_ids:
                add(FindingCode.E_DUP_ID, a.artifact_id, f"duplicate artifact id {a.artifact_id!r}")
            artifact_ids.add(a.artifact_id)

    connector_ids: set[str] = set()
    for m in case.modules:
        local = {n.node_id: n for n in m.nodes}
        for c in m.connectors:
            if c.connector_id in connector_ids:
                add(FindingCode.E_DUP_ID, c.connector_id,
                    f"duplicate connector id {c.connector_id!r}")
            connector_ids.add(c.connector_id)
            dangling = False
            for endpoint in (c.source, c.target):
                if endpoint not in local:
                    dangling = True
                    add(FindingCode.E_DANGLING_REF, c.connector_id,
                        f"connector {c.connector_id!r} references unknown node {endpoint!r} "
                        f"in module {m.module_id!r}")
            if not dangling and not connector_permitted(c.kind, local[c.source].kind, local[c.target].kind):
                add(FindingCode.E_CONN_TYPE, c.connector_id,
                    f"{c.kind.value} from {local[c.source].kind.value} to "
                    f"{local[c.target].kind.value} is not permitted")

        for n in m.nodes:
            for cited in n.citations:
                if cited not in artifact_ids:
                    add(FindingCode.E_DANGLING_REF, n.node_id,
                        f"node {n.node_id!r} cites unknown artifact {cited!r}")
            if n.undeveloped:
                add(FindingCode.W_UNDEVELOPED, n.node_id,
                    f"{n.kind.value} {n.node_id!r} is undeveloped")
            if n.kind in AWAY_KINDS:
                try:
                    resolve_away(case, n.node_id)
                except AwayResolutionError as exc:
                    add(FindingCode.E_AWAY_UNRESOLVED, n.node_id, str(exc))

    for src, tgt in case.inter_module_supports:
        for endpoint in (src, tgt):
            if endpoint not in module_ids:
                add(FindingCode.E_DANGLING_REF, endpoint,
                    f"interModuleSupports references unknown module {endpoint!r}")

    # Per-module SupportedBy acyclicity.
    for m in case.modules:
        edges: dict[str, list[str]] = {}
        local = {n.node_id for n in m.nodes}
        for c in m.connectors:
            if c.kind is ConnectorKind.SUPPORTED_BY and c.source in local and c.target in local:
                edges.setdefault(c.source, []).append(c.target)
        cycle = _find_cycle(edges, local)
        if cycle:
            add(FindingCode.E_CYCLE, cycle[0],
                f"SupportedBy cycle in module {m.module_id!r}: {' -> '.join(cycle)}")

    # Cross-module acyclicity over declared supports plus away references;
    # away edges are included so cross-module evaluation stays well-founded.
    cross: dict[str, set[str]] = {mid: set() for mid in module_ids}
    for src, tgt in case.inter_module_supports:
        if src in module_ids and tgt in module_ids:
            cross[src].add(tgt)
    for m in case.modules:
        for n in m.nodes:
            if n.away_target is not None and n.away_target.module in module_ids:
                if n.away_target.module != m.module_id:
                    cross[m.module_id].add(n.away_target.module)
    cycle = _find_cycle({k: sorted(v) for k, v in cross.items()}, module_ids)
    if cycle:
        add(FindingCode.E_CYCLE, cycle[0],
            f"cross-module support cycle: {' -> '.join(cycle)}")

    findings.sort(key=lambda f: (f.code.value, f.subject_id, f.message))
    return findings
