"""Loading engineering artifacts into a uniform queryable view.

Tabular documents (CSV) become one element per data row; tree documents
(JSON with a ``$type`` convention) become nested elements; text and theory
documents stay opaque byte sequences. Views are read-only after load and a
SHA-256 fingerprint supports change detection.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .case_model import ArtifactKind, ArtifactRecord


class ArtifactLoadError(Exception):
    """The document exists but cannot be loaded (malformed, path escape)."""

    def __init__(self, artifact_id: str, message: str):
        self.artifact_id = artifact_id
        super().__init__(f"{artifact_id}: {message}")


class ArtifactMissingError(ArtifactLoadError):
    """The referenced document file does not exist."""


@dataclass
class Element:
    """Uniform query surface over heterogeneous models.

    ``attributes`` maps names to scalars (text, real, boolean); ``children``
    maps names to a nested element or a list of elements.
    """

    type_name: str
    attributes: dict[str, object] = field(default_factory=dict)
    children: dict[str, object] = field(default_factory=dict)


@dataclass
class ArtifactView:
    artifact_id: str
    kind: ArtifactKind
    elements: tuple[Element, ...]
    raw_bytes: bytes


@dataclass(frozen=True)
class Fingerprint:
    artifact_id: str
    digest: str  # SHA-256 of raw bytes, hex


def _resolve_document(record: ArtifactRecord, root_dir: Path) -> Path:
    root = Path(root_dir).resolve()
    rel = Path(record.document_path)
    if rel.is_absolute():
        raise ArtifactLoadError(record.artifact_id,
                                f"document path {record.document_path!r} must be relative")
    path = (root / rel).resolve()
    if root != path and root not in path.parents:
        raise ArtifactLoadError(record.artifact_id,
                                f"document path {record.document_path!r} escapes the root directory")
    return path


def _read_bytes(record: ArtifactRecord, root_dir: Path) -> bytes:
    path = _resolve_document(record, root_dir)
    if not path.is_file():
        raise ArtifactMissingError(record.artifact_id, f"document {record.document_path!r} not found")
    return path.read_bytes()


def _load_tabular(record: ArtifactRecord, raw: bytes) -> tuple[Element, ...]:
    meta = record.metadata_map()
    row_type = meta.get("rowType") or Path(record.document_path).stem
    fill_down = [c.strip() for c in meta.get("fillDown", "").split(",") if c.strip()]
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ArtifactLoadError(record.artifact_id, f"CSV is not valid UTF-8: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ArtifactLoadError(record.artifact_id, "CSV has no header row")
    header = rows[0]
    unknown_fill = sorted(set(fill_down) - set(header))
    if unknown_fill:
        raise ArtifactLoadError(record.artifact_id,
                                f"fillDown names unknown column(s): {', '.join(unknown_fill)}")
    elements: list[Element] = []
    previous: dict[str, str] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ArtifactLoadError(
                record.artifact_id,
                f"ragged CSV row at line {lineno}: {len(row)} cells, expected {len(header)}")
        attrs = dict(zip(header, row))
        for column in fill_down:
            if attrs[column] == "" and column in previous:
                attrs[column] = previous[column]
        previous = attrs
        elements.append(Element(row_type, attributes=dict(attrs)))
    return tuple(elements)


def _tree_scalar(value: object) -> object:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    return value  # str


def _walk_tree(record: ArtifactRecord, obj: object, out: list[Element], where: str) -> Element:
    if not isinstance(obj, dict) or "$type" not in obj:
        raise ArtifactLoadError(record.artifact_id,
                                f"{where}: expected an object with a '$type' key")
    type_name = obj["$type"]
    if not isinstance(type_name, str):
        raise ArtifactLoadError(record.artifact_id, f"{where}: '$type' must be a string")
    element = Element(type_name)
    out.append(element)
    for key, value in obj.items():
        if key == "$type":
            continue
        if isinstance(value, (str, int, float, bool)):
            element.attributes[key] = _tree_scalar(value)
        elif isinstance(value, dict):
            element.children[key] = _walk_tree(record, value, out, f"{where}.{key}")
        elif isinstance(value, list):
            element.children[key] = tuple(
                _walk_tree(record, item, out, f"{where}.{key}[{i}]")
                for i, item in enumerate(value)
            )
        else:
            raise ArtifactLoadError(record.artifact_id,
                                    f"{where}.{key}: null is not a valid attribute value")
    return element


def _load_tree(record: ArtifactRecord, raw: bytes) -> tuple[Element, ...]:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArtifactLoadError(record.artifact_id, f"malformed tree document: {exc}") from exc
    out: list[Element] = []
    _walk_tree(record, doc, out, "$")
    return tuple(out)


def load_artifact(record: ArtifactRecord, root_dir: Path | str) -> ArtifactView:
    """Load the referenced document into a view; deterministic and read-only.

    Tabular rows become elements typed by the ``rowType`` metadata key (file
    stem when absent); blank cells in columns named by the ``fillDown``
    metadata key inherit the value above them, which handles spreadsheet
    layouts using merged/continuation rows. Tree documents yield one element
    per ``$type`` object in pre-order. Text and theory documents load raw
    bytes only.
    """
    raw = _read_bytes(record, Path(root_dir))
    if record.kind is ArtifactKind.TABULAR:
        elements = _load_tabular(record, raw)
    elif record.kind is ArtifactKind.TREE:
        elements = _load_tree(record, raw)
    else:
        elements = ()
    return ArtifactView(record.artifact_id, record.kind, elements, raw)


def fingerprint(record: ArtifactRecord, root_dir: Path | str) -> Fingerprint:
    """SHA-256 fingerprint of the document's raw bytes."""
    raw = _read_bytes(record, Path(root_dir))
    return Fingerprint(record.artifact_id, hashlib.sha256(raw).hexdigest())


@dataclass(frozen=True)
class ArtifactStore:
    """Binds a case's artifact records to the directory they resolve under."""

    root_dir: Path

    def load(self, record: ArtifactRecord) -> ArtifactView:
        return load_artifact(record, self.root_dir)

    def fingerprint(self, record: ArtifactRecord) -> Fingerprint:
        return fingerprint(record, self.root_dir)

    def document_path(self, record: ArtifactRecord) -> Path:
        return _resolve_document(record, Path(self.root_dir))
