"""Formal rendering of argument modules, and the checking wire protocol.

An argument module exports to a flat formal document: every goal and
contextual element becomes a Claim, every solution an ArtifactReference,
and every connector an Inference or Context statement wiring named
references together. The document syntax is line-based ASCII (``<<`` ``>>``
delimit descriptions, ``<{ }>`` delimit reference sets) so it can be parsed
back and checked for logical integrity, either locally or through the HTTP
backend protocol this module's client speaks.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass

from .case_model import (
    AWAY_KINDS,
    ArgumentModule,
    AssuranceCase,
    Connector,
    ConnectorKind,
    Declaration,
    NodeKind,
    _find_cycle,
)

DECLARATION_KEYWORDS = ("axiomatic", "assumed", "needsSupport", "asserted")

_NAME_RE = r"[A-Za-z0-9_.\-]+"


@dataclass(frozen=True)
class Ref:
    kind: str  # "Claim" | "ArtifactReference"
    name: str

    def render(self) -> str:
        return f"@{{{self.kind} {self.name}}}"


@dataclass(frozen=True)
class ClaimStmt:
    name: str
    declaration: str  # "" or one of DECLARATION_KEYWORDS
    description: str


@dataclass(frozen=True)
class ArtifactReferenceStmt:
    name: str
    description: str


@dataclass(frozen=True)
class InferenceStmt:
    name: str
    sources: tuple[Ref, ...]
    target: Ref
    description: str


@dataclass(frozen=True)
class ContextStmt:
    name: str
    source: Ref
    target: Ref
    description: str


Statement = ClaimStmt | ArtifactReferenceStmt | InferenceStmt | ContextStmt


@dataclass(frozen=True)
class FormalDocument:
    statements: tuple[Statement, ...]


@dataclass(frozen=True)
class DiagnosticEntry:
    id: str
    severity: str  # "error" | "warning"
    message: str
    line: int | None = None


@dataclass(frozen=True)
class BackendDiagnostics:
    ok: bool
    entries: tuple[DiagnosticEntry, ...]

    @classmethod
    def from_entries(cls, entries) -> "BackendDiagnostics":
        entries = tuple(entries)
        return cls(ok=not any(e.severity == "error" for e in entries), entries=entries)


class FormalExportError(Exception):
    pass


class FormalParseError(Exception):
    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class BackendTransportError(Exception):
    """Could not reach the backend or it answered outside the wire contract."""


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------

_CLAIM_KINDS = frozenset(
    {NodeKind.GOAL, NodeKind.AWAY_GOAL, NodeKind.CONTEXT, NodeKind.ASSUMPTION,
     NodeKind.JUSTIFICATION, NodeKind.AWAY_CONTEXT, NodeKind.AWAY_SOLUTION}
)


def _claim_declaration(node) -> str:
    if node.kind in AWAY_KINDS:
        return "assumed"
    if node.kind is NodeKind.GOAL and node.undeveloped:
        return "needsSupport"
    if node.declaration is Declaration.NONE:
        return ""
    return node.declaration.value


def _claim_description(node) -> str:
    if node.kind in AWAY_KINDS and node.away_target is not None:
        suffix = f"assumed from module {node.away_target.module}"
        return f"{node.description} ({suffix})" if node.description else suffix
    return node.description


def _node_ref(node) -> Ref:
    kind = "ArtifactReference" if node.kind is NodeKind.SOLUTION else "Claim"
    return Ref(kind, node.node_id)


def _supported_by_description(parent_name: str, sources: tuple[Ref, ...]) -> str:
    listed = ", ".join(r.render() for r in sources)
    return f"@{{Claim {parent_name}}} is supported by {listed}."


def _strategy_parent(module: ArgumentModule, strategy_id: str) -> str:
    incoming = [c for c in module.connectors
                if c.kind is ConnectorKind.SUPPORTED_BY and c.target == strategy_id]
    if not incoming:
        raise FormalExportError(f"strategy {strategy_id!r} has no incoming SupportedBy")
    if len(incoming) > 1:
        ids = ", ".join(sorted(c.connector_id for c in incoming))
        raise FormalExportError(
            f"strategy {strategy_id!r} has multiple incoming SupportedBy connectors ({ids})")
    return incoming[0].source


def export_module(case: AssuranceCase, module_id: str) -> FormalDocument:
    """Render one module into a formal document, deterministically.

    Phases, each ordered by element id: claims (goals and contextual
    elements; away nodes become assumed claims noting their source module),
    artifact references (solutions), strategy inferences (incoming
    SupportedBy becomes the target, outgoing the sources), remaining
    SupportedBy connectors as single-source inferences, and InContextOf
    connectors as context statements. A context attached to a strategy is
    re-anchored to the strategy's parent claim, since strategies render as
    inferences rather than named claims.
    """
    try:
        module = case.module(module_id)
    except KeyError:
        raise FormalExportError(f"module {module_id!r} does not exist") from None

    nodes = {n.node_id: n for n in module.nodes}
    for node in module.nodes:
        if ">>" in node.description or "\n" in node.description:
            raise FormalExportError(
                f"node {node.node_id!r}: description may not contain '>>' or newlines")

    statements: list[Statement] = []
    for node in sorted(module.nodes, key=lambda n: n.node_id):
        if node.kind in _CLAIM_KINDS:
            statements.append(ClaimStmt(node.node_id, _claim_declaration(node),
                                        _claim_description(node)))
    for node in sorted(module.nodes, key=lambda n: n.node_id):
        if node.kind is NodeKind.SOLUTION:
            statements.append(ArtifactReferenceStmt(node.node_id, node.description))

    consumed: set[str] = set()
    for node in sorted(module.nodes, key=lambda n: n.node_id):
        if node.kind is not NodeKind.STRATEGY:
            continue
        parent_id = _strategy_parent(module, node.node_id)
        incoming = [c for c in module.connectors
                    if c.kind is ConnectorKind.SUPPORTED_BY and c.target == node.node_id]
        outgoing = sorted(
            (c for c in module.connectors
             if c.kind is ConnectorKind.SUPPORTED_BY and c.source == node.node_id),
            key=lambda c: c.connector_id)
        consumed.update(c.connector_id for c in incoming)
        consumed.update(c.connector_id for c in outgoing)
        sources = tuple(_node_ref(nodes[c.target]) for c in outgoing)
        statements.append(InferenceStmt(
            node.node_id, sources, Ref("Claim", parent_id),
            _supported_by_description(parent_id, sources)))

    remaining = sorted(
        (c for c in module.connectors
         if c.kind is ConnectorKind.SUPPORTED_BY and c.connector_id not in consumed),
        key=lambda c: c.connector_id)
    for conn in remaining:
        supporting = nodes[conn.target]
        supported = nodes[conn.source]
        source_ref = _node_ref(supporting)
        statements.append(InferenceStmt(
            conn.connector_id, (source_ref,), Ref("Claim", supported.node_id),
            _supported_by_description(supported.node_id, (source_ref,))))

    contexts = sorted(
        (c for c in module.connectors if c.kind is ConnectorKind.IN_CONTEXT_OF),
        key=lambda c: c.connector_id)
    for conn in contexts:
        ctx_node = nodes[conn.target]
        claim_side = nodes[conn.source]
        claim_name = claim_side.node_id
        if claim_side.kind is NodeKind.STRATEGY:
            claim_name = _strategy_parent(module, claim_side.node_id)
        statements.append(ContextStmt(
            conn.connector_id,
            Ref("Claim", ctx_node.node_id),
            Ref("Claim", claim_name),
            f"@{{Claim {claim_name}}} is context for @{{Claim {ctx_node.node_id}}}."))

    return FormalDocument(tuple(statements))


def render_statement(stmt: Statement) -> str:
    if isinstance(stmt, ClaimStmt):
        decl = f" {stmt.declaration}" if stmt.declaration else ""
        return f"Claim {stmt.name}{decl} <<{stmt.description}>>"
    if isinstance(stmt, ArtifactReferenceStmt):
        return f"ArtifactReference {stmt.name} <<{stmt.description}>>"
    if isinstance(stmt, InferenceStmt):
        sources = ", ".join(r.render() for r in stmt.sources)
        return (f"Inference {stmt.name} src <{{{sources}}}> "
                f"tgt <{{{stmt.target.render()}}}> <<{stmt.description}>>")
    sources = stmt.source.render()
    return (f"Context {stmt.name} src <{{{sources}}}> "
            f"tgt <{{{stmt.target.render()}}}> <<{stmt.description}>>")


def render_document(doc: FormalDocument) -> str:
    return "".join(render_statement(s) + "\n" for s in doc.statements)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_CLAIM_LINE = re.compile(
    rf"^Claim\s+(?P<name>{_NAME_RE})(?:\s+(?P<decl>axiomatic|assumed|needsSupport|asserted))?"
    r"\s+<<(?P<desc>.*)>>$")
_ARTREF_LINE = re.compile(rf"^ArtifactReference\s+(?P<name>{_NAME_RE})\s+<<(?P<desc>.*)>>$")
_INFERENCE_LINE = re.compile(
    rf"^Inference\s+(?P<name>{_NAME_RE})\s+src\s+<\{{(?P<src>.*?)\}}>"
    r"\s+tgt\s+<\{(?P<tgt>.*?)\}>\s+<<(?P<desc>.*)>>$")
_CONTEXT_LINE = re.compile(
    rf"^Context\s+(?P<name>{_NAME_RE})\s+src\s+<\{{(?P<src>.*?)\}}>"
    r"\s+tgt\s+<\{(?P<tgt>.*?)\}>\s+<<(?P<desc>.*)>>$")
_REF_RE = re.compile(rf"^@\{{(?P<kind>Claim|ArtifactReference)\s+(?P<name>{_NAME_RE})\}}$")


def _parse_refs(raw: str, lineno: int, *, exactly_one: bool = False) -> tuple[Ref, ...]:
    raw = raw.strip()
    if not raw:
        if exactly_one:
            raise FormalParseError("expected exactly one reference", lineno)
        return ()
    refs = []
    for part in raw.split(","):
        part = part.strip()
        m = _REF_RE.match(part)
        if not m:
            raise FormalParseError(f"malformed reference {part!r}", lineno)
        refs.append(Ref(m.group("kind"), m.group("name")))
    if exactly_one and len(refs) != 1:
        raise FormalParseError("expected exactly one reference", lineno)
    return tuple(refs)


def parse_formal(text: str) -> FormalDocument:
    """Parse a rendered formal document; inverse of :func:`render_document`.

    Lines starting with ``#`` are skipped (machine-verdict attachments use
    ``#!``; see :func:`parse_verdict_attachments`). Duplicate names and
    dangling references parse fine; integrity checking flags them.
    """
    statements: list[Statement] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        keyword = line.split(None, 1)[0]
        if keyword == "Claim":
            m = _CLAIM_LINE.match(line)
            if not m:
                raise FormalParseError("malformed Claim statement", lineno)
            statements.append(ClaimStmt(m.group("name"), m.group("decl") or "", m.group("desc")))
        elif keyword == "ArtifactReference":
            m = _ARTREF_LINE.match(line)
            if not m:
                raise FormalParseError("malformed ArtifactReference statement", lineno)
            statements.append(ArtifactReferenceStmt(m.group("name"), m.group("desc")))
        elif keyword == "Inference":
            m = _INFERENCE_LINE.match(line)
            if not m:
                raise FormalParseError(
                    "malformed Inference statement (expected 'Inference <name> src <{...}> "
                    "tgt <{...}> <<...>>')", lineno)
            statements.append(InferenceStmt(
                m.group("name"),
                _parse_refs(m.group("src"), lineno),
                _parse_refs(m.group("tgt"), lineno, exactly_one=True)[0],
                m.group("desc")))
        elif keyword == "Context":
            m = _CONTEXT_LINE.match(line)
            if not m:
                raise FormalParseError("malformed Context statement", lineno)
            statements.append(ContextStmt(
                m.group("name"),
                _parse_refs(m.group("src"), lineno, exactly_one=True)[0],
                _parse_refs(m.group("tgt"), lineno, exactly_one=True)[0],
                m.group("desc")))
        else:
            raise FormalParseError(f"unknown statement keyword {keyword!r}", lineno)
    return FormalDocument(tuple(statements))


# --------------------------------------------------------------------------
# Integrity checking
# --------------------------------------------------------------------------


def check_integrity(doc: FormalDocument) -> BackendDiagnostics:
    """Logical integrity of a formal document; diagnostics are the result.

    Errors: duplicate statement names, references to undeclared statements,
    and claim-to-claim inference cycles. Warnings: claims declared
    needsSupport, and claims that are never an inference target while not
    being terminated by an axiomatic/assumed declaration nor serving as a
    context source.
    """
    entries: list[DiagnosticEntry] = []

    names_seen: set[str] = set()
    duplicates: set[str] = set()
    for stmt in doc.statements:
        if stmt.name in names_seen:
            duplicates.add(stmt.name)
        names_seen.add(stmt.name)
    for name in sorted(duplicates):
        entries.append(DiagnosticEntry(name, "error", f"duplicate statement name {name!r}"))

    claims = {s.name: s for s in doc.statements if isinstance(s, ClaimStmt)}
    artrefs = {s.name for s in doc.statements if isinstance(s, ArtifactReferenceStmt)}

    def check_ref(owner: str, ref: Ref) -> None:
        known = claims if ref.kind == "Claim" else artrefs
        if ref.name not in known:
            entries.append(DiagnosticEntry(
                ref.name, "error",
                f"{owner} references unknown {ref.kind} {ref.name!r}"))

    inference_targets: set[str] = set()
    context_sources: set[str] = set()
    claim_edges: dict[str, list[str]] = {}
    for stmt in doc.statements:
        if isinstance(stmt, InferenceStmt):
            for ref in stmt.sources:
                check_ref(f"Inference {stmt.name}", ref)
            check_ref(f"Inference {stmt.name}", stmt.target)
            if stmt.target.kind == "Claim":
                inference_targets.add(stmt.target.name)
                for ref in stmt.sources:
                    if ref.kind == "Claim":
                        claim_edges.setdefault(stmt.target.name, []).append(ref.name)
        elif isinstance(stmt, ContextStmt):
            check_ref(f"Context {stmt.name}", stmt.source)
            check_ref(f"Context {stmt.name}", stmt.target)
            if stmt.source.kind == "Claim":
                context_sources.add(stmt.source.name)

    cycle = _find_cycle(claim_edges, claims.keys())
    if cycle:
        entries.append(DiagnosticEntry(
            cycle[0], "error", f"inference cycle: {' -> '.join(cycle)}"))

    for name in sorted(claims):
        claim = claims[name]
        if claim.declaration == "needsSupport":
            entries.append(DiagnosticEntry(
                name, "warning", f"claim {name!r} is declared needsSupport"))
        elif (name not in inference_targets
              and claim.declaration not in ("axiomatic", "assumed")
              and name not in context_sources):
            entries.append(DiagnosticEntry(
                name, "warning", f"claim {name!r} is never the target of an inference"))

    return BackendDiagnostics.from_entries(entries)


# --------------------------------------------------------------------------
# Machine-verdict attachments and the reference document check
# --------------------------------------------------------------------------

_VERDICT_PREFIX = "#! verdict:"


def render_verdict_attachment(check: str, ok: bool, detail: str) -> str:
    return _VERDICT_PREFIX + " " + json.dumps(
        {"check": check, "ok": ok, "detail": detail}, sort_keys=True)


def parse_verdict_attachments(text: str) -> list[tuple[int, dict]]:
    """Extract ``#! verdict: {...}`` attachment lines as (line number, payload)."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(_VERDICT_PREFIX):
            out.append((lineno, stripped[len(_VERDICT_PREFIX):].strip()))
    parsed = []
    for lineno, payload in out:
        try:
            obj = json.loads(payload)
        except json.JSONDecodeError:
            parsed.append((lineno, {"malformed": payload}))
            continue
        parsed.append((lineno, obj))
    return parsed


def check_document(text: str) -> BackendDiagnostics:
    """The bundled reference check: parse, integrity, verdict attachments.

    A syntax failure is a checking failure (ok = False with a positioned
    entry), never an exception: transport and checking outcomes stay
    distinct for callers.
    """
    try:
        doc = parse_formal(text)
    except FormalParseError as exc:
        return BackendDiagnostics(ok=False, entries=(
            DiagnosticEntry("syntax", "error", str(exc), line=exc.line),))
    entries = list(check_integrity(doc).entries)
    for lineno, verdict in parse_verdict_attachments(text):
        if not isinstance(verdict, dict) or not isinstance(verdict.get("check"), str) \
                or not isinstance(verdict.get("ok"), bool):
            entries.append(DiagnosticEntry(
                "verdict", "error", "malformed machine-verdict attachment", line=lineno))
            continue
        if not verdict["ok"]:
            detail = verdict.get("detail", "")
            entries.append(DiagnosticEntry(
                verdict["check"], "error",
                f"machine verdict failed: {detail}" if detail else "machine verdict failed",
                line=lineno))
    return BackendDiagnostics.from_entries(entries)


# --------------------------------------------------------------------------
# Backend client
# --------------------------------------------------------------------------


def _diagnostics_from_wire(payload: object) -> BackendDiagnostics:
    if not isinstance(payload, dict) or not isinstance(payload.get("ok"), bool) \
            or not isinstance(payload.get("entries"), list):
        raise BackendTransportError("response does not match the diagnostics wire schema")
    entries = []
    for item in payload["entries"]:
        if not isinstance(item, dict) or not isinstance(item.get("id"), str) \
                or item.get("severity") not in ("error", "warning") \
                or not isinstance(item.get("message"), str):
            raise BackendTransportError("response entry does not match the wire schema")
        line = item.get("line")
        if line is not None and not isinstance(line, int):
            raise BackendTransportError("response entry line must be an integer")
        entries.append(DiagnosticEntry(item["id"], item["severity"], item["message"], line))
    diagnostics = BackendDiagnostics(ok=payload["ok"], entries=tuple(entries))
    if diagnostics.ok != BackendDiagnostics.from_entries(entries).ok:
        raise BackendTransportError("response 'ok' flag is inconsistent with its entries")
    return diagnostics


def diagnostics_to_wire(diagnostics: BackendDiagnostics) -> dict:
    entries = []
    for e in diagnostics.entries:
        item = {"id": e.id, "severity": e.severity, "message": e.message}
        if e.line is not None:
            item["line"] = e.line
        entries.append(item)
    return {"ok": diagnostics.ok, "entries": entries}


def submit_to_backend(endpoint: str, text: str, timeout: float = 10.0) -> BackendDiagnostics:
    """POST a document to a verification service and parse its diagnostics.

    ``endpoint`` is the service base URL; the check route is ``/check``.
    Network failures, non-200 statuses, and non-conforming responses raise
    :class:`BackendTransportError`; a checking failure comes back as
    ok = False diagnostics.
    """
    url = endpoint.rstrip("/") + "/check"
    request = urllib.request.Request(
        url, data=text.encode("utf-8"), method="POST",
        headers={"Content-Type": "text/plain; charset=utf-8"})
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            if response.status != 200:
                raise BackendTransportError(f"backend returned HTTP {response.status}")
            body = response.read()
    except urllib.error.HTTPError as exc:
        raise BackendTransportError(f"backend returned HTTP {exc.code}") from exc
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise BackendTransportError(f"backend unreachable: {exc}") from exc
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BackendTransportError(f"backend response is not valid JSON: {exc}") from exc
    return _diagnostics_from_wire(payload)


class LocalBackend:
    """In-process reference backend sharing the bundled service's behaviour."""

    def check(self, text: str) -> BackendDiagnostics:
        return check_document(text)


class RemoteBackend:
    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def check(self, text: str) -> BackendDiagnostics:
        return submit_to_backend(self.endpoint, text, timeout=self.timeout)
