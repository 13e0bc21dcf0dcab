"""Bundled local verification service speaking the backend wire protocol.

POST /check accepts a formal document as the request body and answers with
UTF-8 JSON diagnostics, reusing the in-process reference check, so the full
pipeline runs with no external prover. Unparseable documents are a checking
failure (200 with ok = false), not a transport failure; only an oversized
body is refused outright.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .formal_export import check_document, diagnostics_to_wire

logger = logging.getLogger(__name__)

DEFAULT_MAX_BODY_BYTES = 4 * 1024 * 1024


@dataclass(frozen=True)
class ServiceConfig:
    bind_address: str = "127.0.0.1:8099"
    max_body_bytes: int = DEFAULT_MAX_BODY_BYTES

    def host_port(self) -> tuple[str, int]:
        host, _, port_text = self.bind_address.rpartition(":")
        if not host:
            raise ValueError(f"bind address {self.bind_address!r} must be host:port")
        try:
            port = int(port_text)
        except ValueError:
            raise ValueError(f"invalid port {port_text!r}") from None
        if not 0 <= port <= 65535:
            raise ValueError(f"port {port} out of range")
        return host, port


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    max_body_bytes = DEFAULT_MAX_BODY_BYTES

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        logger.debug("%s - %s", self.address_string(), format % args)

    def _respond(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802
        if self.path == "/health":
            self._respond(200, b"ok", "text/plain; charset=utf-8")
        else:
            self._respond(404, b"not found", "text/plain; charset=utf-8")

    def do_POST(self) -> None:  # noqa: N802
        if self.path != "/check":
            self._respond(404, b"not found", "text/plain; charset=utf-8")
            return
        length_header = self.headers.get("Content-Length")
        try:
            length = int(length_header) if length_header is not None else 0
        except ValueError:
            self._respond(400, b"bad Content-Length", "text/plain; charset=utf-8")
            return
        if length > self.max_body_bytes:
            self._respond(413, b"document too large", "text/plain; charset=utf-8")
            return
        raw = self.rfile.read(length)
        text = raw.decode("utf-8", errors="replace")
        diagnostics = check_document(text)
        body = json.dumps(diagnostics_to_wire(diagnostics)).encode("utf-8")
        self._respond(200, body, "application/json; charset=utf-8")


class BackendServer:
    """Embeddable server handle with a bounded lifecycle for tests and the CLI."""

    def __init__(self, config: ServiceConfig | None = None):
        self.config = config or ServiceConfig()
        host, port = self.config.host_port()
        handler = type("_BoundHandler", (_Handler,),
                       {"max_body_bytes": self.config.max_body_bytes})
        self._server = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="caseforge-backend", daemon=True)
        self._thread.start()
        logger.info("backend listening on %s", self.endpoint)

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "BackendServer":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    server = BackendServer(config)
    logger.info("serving on %s", server.endpoint)
    try:
        server._server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server._server.server_close()
