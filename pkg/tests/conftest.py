"""Shared fixtures: canned wire-protocol servers for remote-client tests."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest


class CannedHandler(BaseHTTPRequestHandler):
    """Serves scripted responses; the server instance carries the script."""

    def log_message(self, *args):  # keep test output clean
        pass

    def _reply(self, status: int, payload):
        body = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        self.server.requests.append(("GET", self.path, None))
        status, payload = self.server.script.get(("GET", self.path), (404, {}))
        self._reply(status, payload)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else None
        self.server.requests.append(("POST", self.path, body))
        entry = self.server.script.get(("POST", self.path), (404, {}))
        if callable(entry):
            status, payload = entry(body)
        else:
            status, payload = entry
        self._reply(status, payload)


class CannedServer:
    def __init__(self, script: dict):
        self._httpd = HTTPServer(("127.0.0.1", 0), CannedHandler)
        self._httpd.script = script
        self._httpd.requests = []
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self._httpd.requests

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def canned_server():
    """Factory fixture: canned_server(script) -> running CannedServer."""
    servers = []

    def factory(script: dict) -> CannedServer:
        server = CannedServer(script)
        server.__enter__()
        servers.append(server)
        return server

    yield factory
    for server in servers:
        server.__exit__()
