"""HTTP surface for the generation wire protocol.

    GET  /v1/info      -> {name, context_length}
    POST /v1/generate  {id, input_text, num_candidates, max_new_tokens}
                       -> {candidates: [{text, log_prob}]}

Status codes: 400 malformed request, 422 input exceeds the model context
(with required and available lengths), 500 model failure. Requests are
handled sequentially; generation is not reentrant.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, HTTPServer

from .backends import GenerationBackend, load_backend
from .config import ServerConfig


class BadRequest(Exception):
    pass


def _validate_generate_request(obj) -> tuple[str, str, int, int]:
    if not isinstance(obj, dict):
        raise BadRequest("request body must be a JSON object")
    for field, kind in (("id", str), ("input_text", str),
                        ("num_candidates", int), ("max_new_tokens", int)):
        if field not in obj:
            raise BadRequest(f"missing field {field!r}")
        if not isinstance(obj[field], kind) or isinstance(obj[field], bool):
            raise BadRequest(f"field {field!r} must be {kind.__name__}")
    if obj["num_candidates"] <= 0:
        raise BadRequest("num_candidates must be positive")
    if obj["max_new_tokens"] <= 0:
        raise BadRequest("max_new_tokens must be positive")
    return obj["id"], obj["input_text"], obj["num_candidates"], obj["max_new_tokens"]


class ProtocolHandler(BaseHTTPRequestHandler):
    server_version = "servegen/0.1"

    @property
    def backend(self) -> GenerationBackend:
        return self.server.backend

    @property
    def config(self) -> ServerConfig:
        return self.server.config

    def log_message(self, format, *args):
        if self.server.verbose:
            super().log_message(format, *args)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path != "/v1/info":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        self._send(200, {"name": self.backend.name,
                         "context_length": self.backend.context_length})

    def do_POST(self):
        if self.path != "/v1/generate":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                obj = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise BadRequest(f"body is not valid JSON: {exc}") from exc
            _, input_text, num_candidates, max_new_tokens = _validate_generate_request(obj)
            if num_candidates > self.config.beam_width:
                raise BadRequest(
                    f"num_candidates {num_candidates} exceeds beam width {self.config.beam_width}"
                )
            required = self.backend.count_tokens(input_text)
            available = self.backend.context_length
            if required > available:
                self._send(422, {
                    "error": "input exceeds model context",
                    "required": required,
                    "available": available,
                })
                return
        except BadRequest as exc:
            self._send(400, {"error": str(exc)})
            return
        try:
            candidates = self.backend.generate(input_text, num_candidates, max_new_tokens)
            candidates = sorted(candidates, key=lambda c: -c[1])[:num_candidates]
            payload = {"candidates": [{"text": t, "log_prob": lp} for t, lp in candidates]}
        except Exception as exc:  # model failure is a 500, not a crash
            self._send(500, {"error": f"{type(exc).__name__}: {exc}"})
            return
        self._send(200, payload)


def make_server(config: ServerConfig, backend: GenerationBackend | None = None,
                verbose: bool = False) -> HTTPServer:
    """A bound, ready-to-serve HTTP server (callers drive serve_forever)."""
    httpd = HTTPServer((config.host, config.port), ProtocolHandler)
    httpd.config = config
    httpd.backend = backend if backend is not None else load_backend(config)
    httpd.verbose = verbose
    return httpd


def serve(config: ServerConfig, verbose: bool = True) -> None:
    """Load the configured model and answer requests until interrupted."""
    httpd = make_server(config, verbose=verbose)
    host, port = httpd.server_address
    print(f"servegen: {httpd.backend.name} (context {httpd.backend.context_length}) "
          f"on http://{host}:{port}")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
