"""HTTP client for the generation wire protocol.

Endpoints:
    POST /v1/generate  {id, input_text, num_candidates, max_new_tokens}
                       -> {candidates: [{text, log_prob}]}
    GET  /v1/info      -> {name, context_length}

Connection-level failures are retried with exponential backoff and surface
as TransportError; 5xx responses as ServerError; anything structurally wrong
with the payload as ProtocolError.
"""

from __future__ import annotations

import json
import math
import time
import urllib.error
import urllib.request

from ..errors import ProtocolError, ServerError, TransportError
from ..sgcodec import PatchCandidate, parse_patch

GENERATE_PATH = "/v1/generate"
INFO_PATH = "/v1/info"
MAX_ATTEMPTS = 3


def _request(
    url: str,
    body: dict | None,
    timeout: float,
    max_attempts: int,
    backoff: float,
) -> dict:
    data = json.dumps(body).encode("utf-8") if body is not None else None
    last_exc: Exception | None = None
    for attempt in range(max_attempts):
        if attempt > 0 and backoff > 0:
            time.sleep(backoff * 2 ** (attempt - 1))
        req = urllib.request.Request(
            url,
            data=data,
            headers={"Content-Type": "application/json"} if data else {},
            method="POST" if data is not None else "GET",
        )
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code >= 500:
                raise ServerError(exc.code, exc.reason or "") from exc
            detail = ""
            try:
                detail = exc.read().decode("utf-8", errors="replace")
            except Exception:
                pass
            raise ProtocolError(f"HTTP {exc.code} from {url}: {detail}".strip()) from exc
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            last_exc = exc
            continue
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"response from {url} is not valid JSON") from exc
        if not isinstance(obj, dict):
            raise ProtocolError(f"response from {url} is not an object")
        return obj
    raise TransportError(f"{url} unreachable after {max_attempts} attempts: {last_exc}")


def remote_info(endpoint: str, timeout: float = 30.0, backoff: float = 0.5) -> dict:
    """{name, context_length} of the model behind ``endpoint``."""
    obj = _request(endpoint.rstrip("/") + INFO_PATH, None, timeout, MAX_ATTEMPTS, backoff)
    if not isinstance(obj.get("name"), str) or not isinstance(obj.get("context_length"), int):
        raise ProtocolError("info response must carry string 'name' and int 'context_length'")
    return obj


def remote_generate(
    endpoint: str,
    input_text: str,
    num_candidates: int,
    max_new_tokens: int,
    request_id: str = "",
    timeout: float = 120.0,
    backoff: float = 0.5,
) -> list[PatchCandidate]:
    """Ranked patch candidates from a remote model server.

    The client re-sorts by log-probability (descending) and truncates to
    ``num_candidates`` regardless of server ordering.
    """
    if num_candidates <= 0:
        raise ValueError("num_candidates must be positive")
    if max_new_tokens <= 0:
        raise ValueError("max_new_tokens must be positive")
    body = {
        "id": request_id,
        "input_text": input_text,
        "num_candidates": num_candidates,
        "max_new_tokens": max_new_tokens,
    }
    obj = _request(endpoint.rstrip("/") + GENERATE_PATH, body, timeout, MAX_ATTEMPTS, backoff)
    raw = obj.get("candidates")
    if not isinstance(raw, list):
        raise ProtocolError("generate response lacks a 'candidates' array")
    parsed: list[PatchCandidate] = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ProtocolError(f"candidate {i} is not an object")
        text = item.get("text")
        log_prob = item.get("log_prob")
        if not isinstance(text, str) or not isinstance(log_prob, (int, float)) or isinstance(log_prob, bool):
            raise ProtocolError(f"candidate {i} must carry string 'text' and numeric 'log_prob'")
        log_prob = float(log_prob)
        if not math.isfinite(log_prob) or log_prob > 0.0:
            raise ProtocolError(f"candidate {i} log_prob {log_prob!r} is not a finite value <= 0")
        parsed.append(parse_patch(text, log_prob))
    parsed.sort(key=lambda c: -c.log_prob)
    return parsed[:num_candidates]
