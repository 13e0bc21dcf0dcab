"""Dynamic safety management: periodic runtime re-evaluation of the case.

The monitor ingests newline-delimited JSON obstacle readings (from a tailed
file or a TCP listener), applies each to the runtime model document by
atomic whole-document replacement, and re-evaluates the dynamic subset of
the argument every tick, publishing an atomically replaced status snapshot.
Static verdicts are computed once at startup and reused.

The monitor is strictly non-invasive: its write set is the runtime model
document and the status file, and it never issues commands. Every ingested
record is evaluated (a tick drains the queue of records received since the
last tick), so an out-of-range reading is reported even when a later
in-range reading has already superseded it on disk.
"""

from __future__ import annotations

import json
import logging
import os
import socket
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .artifact_store import ArtifactStore
from .case_model import ArtifactKind, ArtifactRecord, AssuranceCase, check_wellformed
from .evaluator import VerdictStatus, evaluate_artifacts, propagate
from .impact import citing_nodes, upward_closure

logger = logging.getLogger(__name__)

OBSTACLE_FIELDS = ("ns_rel_dist", "ew_rel_dist", "obs_depth",
                   "obs_ns_vel", "obs_ew_vel", "obs_roc")

RUNTIME_ELEMENT_TYPE = "ObstacleReading"


@dataclass(frozen=True)
class RuntimeRecord:
    seq: int
    received_at: str
    payload: dict[str, float]


@dataclass(frozen=True)
class StatusSnapshot:
    timestamp: str
    case_valid: bool
    failed_nodes: tuple[str, ...]
    last_seq: int
    evaluation_count: int
    degraded: bool = False
    rejected_count: int = 0


@dataclass(frozen=True)
class MonitorConfig:
    ingest: tuple[str, object]  # ("file", Path) | ("tcp", port)
    status_path: Path
    dynamic_artifact_ids: tuple[str, ...]
    interval_ms: int = 50

    def __post_init__(self):
        if self.interval_ms < 1:
            raise ValueError("interval_ms must be >= 1")
        mode = self.ingest[0]
        if mode not in ("file", "tcp"):
            raise ValueError(f"unknown ingest mode {mode!r}")
        if not self.dynamic_artifact_ids:
            raise ValueError("at least one dynamic artifact id is required")


class RecordRejected(Exception):
    pass


def parse_runtime_record(line: str, last_seq: int | None = None) -> RuntimeRecord:
    """Validate one NDJSON record; rejects are counted, never applied."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordRejected(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise RecordRejected("record must be a JSON object")
    unknown = sorted(set(obj) - {"seq", *OBSTACLE_FIELDS})
    if unknown:
        raise RecordRejected(f"unknown field(s): {', '.join(unknown)}")
    seq = obj.get("seq")
    if isinstance(seq, bool) or not isinstance(seq, int):
        raise RecordRejected("'seq' must be an integer")
    if last_seq is not None and seq <= last_seq:
        raise RecordRejected(f"seq {seq} does not increase past {last_seq}")
    payload: dict[str, float] = {}
    for name in OBSTACLE_FIELDS:
        value = obj.get(name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise RecordRejected(f"field {name!r} missing or not numeric")
        payload[name] = float(value)
    return RuntimeRecord(seq, datetime.now(timezone.utc).isoformat(), payload)


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def apply_driver(record: RuntimeRecord, target: ArtifactRecord,
                 store: ArtifactStore) -> None:
    """Replace the runtime model document with the record's reading.

    Write-then-rename whole-document replacement: a concurrent reader sees
    either the previous or the new version, never a torn one. Only the
    runtime model document is ever written.
    """
    if target.kind is not ArtifactKind.TREE:
        raise ValueError(f"runtime model artifact {target.artifact_id!r} must be a tree")
    doc = {"$type": RUNTIME_ELEMENT_TYPE}
    for name in OBSTACLE_FIELDS:
        doc[name] = record.payload[name]
    _atomic_write(store.document_path(target),
                  (json.dumps(doc, indent=2) + "\n").encode("utf-8"))


def snapshot_to_json(status: StatusSnapshot) -> dict:
    return {
        "timestamp": status.timestamp,
        "caseValid": status.case_valid,
        "failedNodes": list(status.failed_nodes),
        "lastSeq": status.last_seq,
        "evaluationCount": status.evaluation_count,
        "degraded": status.degraded,
        "rejectedCount": status.rejected_count,
    }


class Monitor:
    """Periodic evaluator with an ingest thread; query via current_status()."""

    def __init__(self, case: AssuranceCase, store: ArtifactStore,
                 config: MonitorConfig, backend=None):
        errors = [f for f in check_wellformed(case) if f.code.is_error]
        if errors:
            raise ValueError("case has well-formedness errors: "
                             + "; ".join(f.code.value + " " + f.subject_id for f in errors))
        artifacts = case.all_artifacts()
        for artifact_id in config.dynamic_artifact_ids:
            if artifact_id not in artifacts:
                raise ValueError(f"dynamic artifact {artifact_id!r} does not exist")
        cited = citing_nodes(case, set(config.dynamic_artifact_ids))
        if not cited:
            raise ValueError("no node cites any of the dynamic artifacts")

        self.case = case
        self.store = store
        self.config = config
        self.backend = backend
        self.driver_target = artifacts[config.dynamic_artifact_ids[0]]
        self.dynamic_nodes = upward_closure(case, cited)

        self._lock = threading.Lock()
        self._pending: list[RuntimeRecord] = []
        self._last_seq = 0
        self._rejected = 0
        self._degraded = False
        self._status: StatusSnapshot | None = None
        self._evaluations = 0
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._listener: socket.socket | None = None

        self._static_results = evaluate_artifacts(case, store, backend)
        self._static_verdicts = propagate(case, self._static_results)

    # -- lifecycle

    def start(self) -> None:
        if self.config.ingest[0] == "tcp":
            port = int(self.config.ingest[1])
            listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            listener.bind(("127.0.0.1", port))
            listener.listen()
            listener.settimeout(0.05)
            self._listener = listener
            ingest = threading.Thread(target=self._ingest_tcp, name="dsms-ingest", daemon=True)
        else:
            ingest = threading.Thread(target=self._ingest_file, name="dsms-ingest", daemon=True)
        evaluator = threading.Thread(target=self._evaluate_loop, name="dsms-eval", daemon=True)
        self._threads = [ingest, evaluator]
        for thread in self._threads:
            thread.start()

    def stop(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=5)
        if self._listener is not None:
            self._listener.close()
            self._listener = None

    def __enter__(self) -> "Monitor":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()

    def current_status(self) -> StatusSnapshot | None:
        with self._lock:
            return self._status

    # -- ingestion

    def _accept_line(self, line: str) -> None:
        line = line.strip()
        if not line:
            return
        with self._lock:
            last_seq = self._last_seq
        try:
            record = parse_runtime_record(line, last_seq or None)
        except RecordRejected as exc:
            logger.warning("record rejected: %s", exc)
            with self._lock:
                self._rejected += 1
            return
        with self._lock:
            self._pending.append(record)
            self._last_seq = record.seq

    def _ingest_file(self) -> None:
        path = Path(self.config.ingest[1])
        offset = 0
        buffer = b""
        try:
            while not self._stop.is_set():
                if not path.exists():
                    time.sleep(0.005)
                    continue
                with path.open("rb") as handle:
                    handle.seek(offset)
                    chunk = handle.read()
                if chunk:
                    offset += len(chunk)
                    buffer += chunk
                    while b"\n" in buffer:
                        line, buffer = buffer.split(b"\n", 1)
                        self._accept_line(line.decode("utf-8", errors="replace"))
                else:
                    time.sleep(0.005)
        except Exception:
            logger.exception("file ingest failed; continuing on last data")
            with self._lock:
                self._degraded = True

    def _ingest_tcp(self) -> None:
        assert self._listener is not None
        try:
            while not self._stop.is_set():
                try:
                    conn, _ = self._listener.accept()
                except socket.timeout:
                    continue
                with conn:
                    conn.settimeout(0.05)
                    buffer = b""
                    while not self._stop.is_set():
                        try:
                            chunk = conn.recv(4096)
                        except socket.timeout:
                            continue
                        except OSError:
                            break
                        if not chunk:
                            break
                        buffer += chunk
                        while b"\n" in buffer:
                            line, buffer = buffer.split(b"\n", 1)
                            self._accept_line(line.decode("utf-8", errors="replace"))
        except Exception:
            logger.exception("tcp ingest failed; continuing on last data")
            with self._lock:
                self._degraded = True

    # -- evaluation

    def _evaluate_dynamic(self) -> tuple[bool, tuple[str, ...]]:
        dynamic = evaluate_artifacts(self.case, self.store, self.backend,
                                     only=set(self.config.dynamic_artifact_ids))
        merged = dict(self._static_results)
        merged.update(dynamic)
        verdicts = propagate(self.case, merged, subset=self.dynamic_nodes,
                             frozen=self._static_verdicts)
        failed = tuple(sorted(
            node_id for node_id in self.dynamic_nodes
            if verdicts[node_id].status is not VerdictStatus.VALID))
        return (not failed), failed

    def _tick(self) -> None:
        with self._lock:
            batch = self._pending
            self._pending = []
        failed_union: set[str] = set()
        if batch:
            for record in batch:
                apply_driver(record, self.driver_target, self.store)
                _, failed = self._evaluate_dynamic()
                failed_union.update(failed)
        else:
            _, failed = self._evaluate_dynamic()
            failed_union.update(failed)
        with self._lock:
            self._evaluations += 1
            status = StatusSnapshot(
                timestamp=datetime.now(timezone.utc).isoformat(),
                case_valid=not failed_union,
                failed_nodes=tuple(sorted(failed_union)),
                last_seq=self._last_seq,
                evaluation_count=self._evaluations,
                degraded=self._degraded,
                rejected_count=self._rejected,
            )
            self._status = status
        _atomic_write(Path(self.config.status_path),
                      (json.dumps(snapshot_to_json(status), indent=2) + "\n").encode("utf-8"))

    def _evaluate_loop(self) -> None:
        interval = self.config.interval_ms / 1000.0
        deadline = time.monotonic()
        while not self._stop.is_set():
            try:
                self._tick()
            except Exception:
                logger.exception("evaluation tick failed")
            deadline += interval
            delay = deadline - time.monotonic()
            if delay > 0:
                self._stop.wait(delay)
            else:
                deadline = time.monotonic()


def run_monitor(case: AssuranceCase, store: ArtifactStore, config: MonitorConfig,
                backend=None) -> Monitor:
    """Build and start a monitor; the caller owns stop()."""
    monitor = Monitor(case, store, config, backend)
    monitor.start()
    return monitor
