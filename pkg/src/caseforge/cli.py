"""Command-line frontend.

Exit codes: 0 success (case valid, check ok, nothing changed), 1 evaluation
or checking findings (never a crash), 2 usage, I/O, or transport errors.
Human-readable summaries go to stdout; machine-readable reports are written
only through --report/-o paths using the documented schemas.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
from pathlib import Path

from . import __version__
from .artifact_store import ArtifactStore
from .backend_service import BackendServer, ServiceConfig
from .case_model import CaseParseError, check_wellformed, parse_case
from .dsms import Monitor, MonitorConfig
from .evaluator import (
    EvaluationPreconditionError,
    VerdictStatus,
    evaluate_case,
    report_to_json,
)
from .formal_export import (
    BackendTransportError,
    FormalExportError,
    FormalParseError,
    check_document,
    diagnostics_to_wire,
    export_module,
    render_document,
    submit_to_backend,
)
from .impact import impact_of, impact_to_json, load_baseline, save_baseline, snapshot
from .lre_fixture import generate_bundle

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2


class CliError(Exception):
    """Usage, I/O, or transport failure; maps to exit code 2."""


def _load_case(path: str):
    case_path = Path(path)
    try:
        data = case_path.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read case file: {exc}") from exc
    try:
        return parse_case(data)
    except CaseParseError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _root_dir(args, case_path: str) -> Path:
    if getattr(args, "root", None):
        return Path(args.root)
    env_root = os.environ.get("CASEFORGE_ROOT")
    if env_root:
        return Path(env_root)
    return Path(case_path).resolve().parent


def _write_json(path: str, payload: dict) -> None:
    try:
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write report: {exc}") from exc


def cmd_validate(args) -> int:
    case = _load_case(args.case)
    findings = check_wellformed(case)
    for finding in findings:
        print(f"{finding.code.value} {finding.subject_id}: {finding.message}")
    if args.report:
        _write_json(args.report, {
            "caseId": case.case_id,
            "findings": [{"code": f.code.value, "subjectId": f.subject_id,
                          "message": f.message} for f in findings],
        })
    if findings:
        return EXIT_FINDINGS
    print(f"{case.case_id}: well-formed, no findings")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    case = _load_case(args.case)
    store = ArtifactStore(_root_dir(args, args.case))
    try:
        report = evaluate_case(case, store, backend=args.backend)
    except EvaluationPreconditionError as exc:
        raise CliError(str(exc)) from exc
    print(f"{case.case_id}: {'VALID' if report.case_valid else 'NOT VALID'}")
    for module_id, valid in sorted(report.module_valid.items()):
        print(f"  module {module_id}: {'valid' if valid else 'not valid'}")
    for node_id, verdict in sorted(report.verdicts.items()):
        if verdict.status is not VerdictStatus.VALID:
            reasons = "; ".join(m for _, m in verdict.reasons)
            print(f"  {node_id}: {verdict.status.value} ({reasons})")
    if args.report:
        _write_json(args.report, report_to_json(report))
    return EXIT_OK if report.case_valid else EXIT_FINDINGS


def cmd_export_formal(args) -> int:
    case = _load_case(args.case)
    try:
        document = export_module(case, args.module)
    except FormalExportError as exc:
        raise CliError(str(exc)) from exc
    text = render_document(document)
    try:
        Path(args.output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write document: {exc}") from exc
    print(f"exported module {args.module} ({len(document.statements)} statements) "
          f"to {args.output}")
    return EXIT_OK


def cmd_check_formal(args) -> int:
    try:
        text = Path(args.document).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read document: {exc}") from exc
    if args.backend:
        try:
            diagnostics = submit_to_backend(args.backend, text)
        except BackendTransportError as exc:
            raise CliError(str(exc)) from exc
    else:
        diagnostics = check_document(text)
    for entry in diagnostics.entries:
        location = f" (line {entry.line})" if entry.line is not None else ""
        print(f"{entry.severity}: {entry.id}: {entry.message}{location}")
    print("ok" if diagnostics.ok else "not ok")
    if args.report:
        _write_json(args.report, diagnostics_to_wire(diagnostics))
    return EXIT_OK if diagnostics.ok else EXIT_FINDINGS


def cmd_snapshot(args) -> int:
    case = _load_case(args.case)
    store = ArtifactStore(_root_dir(args, args.case))
    try:
        baseline = snapshot(case, store)
    except Exception as exc:
        raise CliError(str(exc)) from exc
    save_baseline(baseline, args.output)
    print(f"baseline of {len(baseline.fingerprints)} artifact(s) written to {args.output}")
    return EXIT_OK


def cmd_impact(args) -> int:
    case = _load_case(args.case)
    store = ArtifactStore(_root_dir(args, args.case))
    try:
        baseline = load_baseline(args.baseline)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot load baseline: {exc}") from exc
    try:
        report = impact_of(case, baseline, store)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    changed = report.changed_artifacts + report.added_artifacts + report.removed_artifacts
    print(f"changed: {', '.join(report.changed_artifacts) or 'none'}")
    if report.added_artifacts:
        print(f"added: {', '.join(report.added_artifacts)}")
    if report.removed_artifacts:
        print(f"removed: {', '.join(report.removed_artifacts)}")
    print(f"impacted nodes: {', '.join(report.impacted_nodes) or 'none'}")
    if args.report:
        _write_json(args.report, impact_to_json(report))
    return EXIT_FINDINGS if changed else EXIT_OK


def _parse_ingest(spec: str) -> tuple[str, object]:
    kind, _, rest = spec.partition(":")
    if kind == "file" and rest:
        return ("file", Path(rest))
    if kind == "tcp" and rest:
        try:
            return ("tcp", int(rest))
        except ValueError:
            raise CliError(f"invalid TCP port {rest!r}") from None
    raise CliError(f"ingest must be file:PATH or tcp:PORT, got {spec!r}")


def cmd_monitor(args) -> int:
    case = _load_case(args.case)
    store = ArtifactStore(_root_dir(args, args.case))
    config = MonitorConfig(
        ingest=_parse_ingest(args.ingest),
        status_path=Path(args.status),
        dynamic_artifact_ids=tuple(args.dynamic),
        interval_ms=args.interval_ms,
    )
    try:
        monitor = Monitor(case, store, config, backend=args.backend)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    stop = {"requested": False}

    def handle_signal(signum, frame):
        stop["requested"] = True

    previous = signal.signal(signal.SIGINT, handle_signal)
    monitor.start()
    print(f"monitoring {case.case_id} every {config.interval_ms} ms; "
          f"status at {config.status_path}")
    try:
        import time
        deadline = (time.monotonic() + args.duration_ms / 1000.0
                    if args.duration_ms else None)
        while not stop["requested"]:
            if deadline is not None and time.monotonic() >= deadline:
                break
            time.sleep(0.05)
    finally:
        monitor.stop()
        signal.signal(signal.SIGINT, previous)
    status = monitor.current_status()
    if status is not None:
        print(f"last status: caseValid={status.case_valid} lastSeq={status.last_seq} "
              f"evaluations={status.evaluation_count}")
    return EXIT_OK


def cmd_serve_backend(args) -> int:
    config = ServiceConfig(bind_address=args.bind, max_body_bytes=args.max_body_bytes)
    try:
        server = BackendServer(config)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot bind {args.bind!r}: {exc}") from exc
    print(f"backend listening on {server.endpoint}")
    try:
        server._server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server._server.server_close()
    return EXIT_OK


def cmd_gen_example(args) -> int:
    if args.name != "auv":
        raise CliError(f"unknown example {args.name!r} (available: auv)")
    out = Path(args.directory)
    out.mkdir(parents=True, exist_ok=True)
    manifest = generate_bundle(out)
    for rel in manifest:
        print(rel)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caseforge",
        description="Model-based assurance case engine")
    parser.add_argument("--version", action="version", version=f"caseforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and well-formedness-check a case")
    p.add_argument("case")
    p.add_argument("--report", help="write findings as JSON")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="evaluate a case against its artifacts")
    p.add_argument("case")
    p.add_argument("--root", help="artifact root directory (default: case file directory "
                                  "or CASEFORGE_ROOT)")
    p.add_argument("--backend", help="verification service URL for theory artifacts")
    p.add_argument("--report", help="write the evaluation report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-formal", help="render a module as a formal document")
    p.add_argument("case")
    p.add_argument("--module", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_export_formal)

    p = sub.add_parser("check-formal", help="integrity-check a formal document")
    p.add_argument("document")
    p.add_argument("--backend", help="check remotely instead of in-process")
    p.add_argument("--report", help="write diagnostics as JSON")
    p.set_defaults(func=cmd_check_formal)

    p = sub.add_parser("snapshot", help="fingerprint all artifacts into a baseline")
    p.add_argument("case")
    p.add_argument("--root")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("impact", help="compute change impact against a baseline")
    p.add_argument("case")
    p.add_argument("--root")
    p.add_argument("--baseline", required=True)
    p.add_argument("--report", help="write the impact report as JSON")
    p.set_defaults(func=cmd_impact)

    p = sub.add_parser("monitor", help="run the periodic runtime monitor")
    p.add_argument("case")
    p.add_argument("--root")
    p.add_argument("--backend")
    p.add_argument("--interval-ms", type=int, default=50)
    p.add_argument("--ingest", required=True, help="file:PATH or tcp:PORT")
    p.add_argument("--status", required=True, help="status snapshot file")
    p.add_argument("--dynamic", action="append", required=True,
                   help="dynamic artifact id (repeatable; first receives the records)")
    p.add_argument("--duration-ms", type=int, default=0,
                   help="stop after this long (0 = run until interrupted)")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("serve-backend", help="serve the bundled verification backend")
    p.add_argument("--bind", default="127.0.0.1:8099")
    p.add_argument("--max-body-bytes", type=int, default=4 * 1024 * 1024)
    p.set_defaults(func=cmd_serve_backend)

    p = sub.add_parser("gen-example", help="generate a complete example bundle")
    p.add_argument("name", help="example name (auv)")
    p.add_argument("directory")
    p.set_defaults(func=cmd_gen_example)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("CASEFORGE_LOG", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
