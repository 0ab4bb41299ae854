"""Protocol conformance tests against the shared golden wire fixtures."""

from __future__ import annotations

import json
import math
import os
import threading
import urllib.error
import urllib.request
from pathlib import Path

import pytest

from servegen import EchoLinesBackend, ServerConfig, make_server

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "wire"


def _golden(name: str) -> dict:
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))


def _post(endpoint: str, path: str, body: dict | bytes):
    data = body if isinstance(body, bytes) else json.dumps(body).encode("utf-8")
    req = urllib.request.Request(
        endpoint + path, data=data, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode("utf-8")), resp.read
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode("utf-8")), None


def _get(endpoint: str, path: str):
    try:
        with urllib.request.urlopen(endpoint + path, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode("utf-8"))


@pytest.fixture(scope="module")
def live_server():
    config = ServerConfig(model_id="stub", port=0)
    httpd = make_server(config)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    host, port = httpd.server_address
    yield f"http://{host}:{port}", config
    httpd.shutdown()
    httpd.server_close()


def assert_valid_generate_response(obj: dict) -> None:
    """The response half of the shared schema fixture."""
    schema = _golden("schema.json")["generate_response"]
    assert set(schema["required"]) <= set(obj)
    assert isinstance(obj["candidates"], list)
    scores = []
    for cand in obj["candidates"]:
        assert isinstance(cand["text"], str)
        assert isinstance(cand["log_prob"], (int, float)) and not isinstance(cand["log_prob"], bool)
        assert math.isfinite(cand["log_prob"]) and cand["log_prob"] <= 0.0
        scores.append(cand["log_prob"])
    assert scores == sorted(scores, reverse=True)


class TestInfo:
    def test_info_matches_schema_and_config(self, live_server):
        endpoint, config = live_server
        status, obj = _get(endpoint, "/v1/info")
        assert status == 200
        schema = _golden("schema.json")["info_response"]
        assert set(schema["required"]) <= set(obj)
        assert isinstance(obj["name"], str) and obj["name"]
        assert obj["context_length"] == config.max_context

    def test_unknown_path_is_404(self, live_server):
        endpoint, _ = live_server
        status, _ = _get(endpoint, "/v1/nonsense")
        assert status == 404


class TestGenerate:
    def test_golden_request_produces_schema_valid_response(self, live_server):
        endpoint, _ = live_server
        status, obj, _ = _post(endpoint, "/v1/generate", _golden("generate_request.json"))
        assert status == 200
        assert_valid_generate_response(obj)
        assert len(obj["candidates"]) == 2

    def test_candidates_echo_known_line_numbers(self, live_server):
        endpoint, _ = live_server
        request = dict(_golden("generate_request.json"), num_candidates=3)
        status, obj, _ = _post(endpoint, "/v1/generate", request)
        assert status == 200
        heads = {c["text"].split("\t", 1)[0] for c in obj["candidates"]}
        assert heads <= {"1", "2", "3"}

    def test_deterministic_for_fixed_request(self, live_server):
        endpoint, _ = live_server
        request = _golden("generate_request.json")
        first = _post(endpoint, "/v1/generate", request)[1]
        second = _post(endpoint, "/v1/generate", request)[1]
        assert first == second

    def test_non_json_body_is_400(self, live_server):
        endpoint, _ = live_server
        status, obj, _ = _post(endpoint, "/v1/generate", b"not json at all")
        assert status == 400
        assert "error" in obj

    @pytest.mark.parametrize(
        "mutation",
        [
            lambda r: r.pop("id"),
            lambda r: r.pop("input_text"),
            lambda r: r.__setitem__("num_candidates", "five"),
            lambda r: r.__setitem__("num_candidates", 0),
            lambda r: r.__setitem__("max_new_tokens", -1),
            lambda r: r.__setitem__("num_candidates", True),
        ],
    )
    def test_malformed_fields_are_400(self, live_server, mutation):
        endpoint, _ = live_server
        request = _golden("generate_request.json")
        mutation(request)
        status, obj, _ = _post(endpoint, "/v1/generate", request)
        assert status == 400, obj

    def test_num_candidates_above_beam_width_is_400(self, live_server):
        endpoint, config = live_server
        request = dict(_golden("generate_request.json"), num_candidates=config.beam_width + 1)
        status, obj, _ = _post(endpoint, "/v1/generate", request)
        assert status == 400
        assert "beam width" in obj["error"]

    def test_oversized_input_is_422_with_lengths(self, live_server):
        endpoint, config = live_server
        request = dict(
            _golden("generate_request.json"),
            input_text="1\t" + "y" * (config.max_context + 100),
        )
        status, obj, _ = _post(endpoint, "/v1/generate", request)
        assert status == 422
        assert obj["required"] > obj["available"] == config.max_context

    def test_backend_failure_is_500(self):
        class ExplodingBackend:
            name = "boom"
            context_length = 1000

            def count_tokens(self, text):
                return len(text)

            def generate(self, *args):
                raise RuntimeError("model failure")

        httpd = make_server(ServerConfig(port=0), backend=ExplodingBackend())
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        try:
            host, port = httpd.server_address
            status, obj, _ = _post(
                f"http://{host}:{port}", "/v1/generate", _golden("generate_request.json")
            )
            assert status == 500
            assert "model failure" in obj["error"]
        finally:
            httpd.shutdown()
            httpd.server_close()


class TestEchoLinesBackend:
    def test_prefers_middle_lines_and_decreasing_scores(self):
        backend = EchoLinesBackend(ServerConfig())
        cands = backend.generate("1\ta\n2\tb\n3\tc\n4\td\n5\te", 5, 64)
        assert cands[0][0].startswith("3\t")
        scores = [lp for _, lp in cands]
        assert scores == sorted(scores, reverse=True)
        assert all(math.isfinite(lp) and lp <= 0 for lp in scores)

    def test_unnumbered_input_falls_back_to_positions(self):
        backend = EchoLinesBackend(ServerConfig())
        cands = backend.generate("alpha\nbeta\ngamma", 3, 64)
        heads = [c[0].split("\t", 1)[0] for c in cands]
        assert set(heads) == {"1", "2", "3"}


# --- smoke: a real pre-trained code model, when one is available ----------------


def _find_smoke_model() -> str | None:
    named = os.environ.get("SERVEGEN_SMOKE_MODEL")
    if named:
        return named
    try:
        from huggingface_hub import scan_cache_dir

        for repo in scan_cache_dir().repos:
            if repo.repo_type == "model":
                return repo.repo_id
    except Exception:
        pass
    return None


@pytest.mark.skipif(
    _find_smoke_model() is None,
    reason="no local model weights; set SERVEGEN_SMOKE_MODEL to a HF model name/path",
)
def test_real_model_smoke_corpus():
    model_name = _find_smoke_model()
    config = ServerConfig(model_id=f"hf:{model_name}", beam_width=4, max_context=512, port=0)
    httpd = make_server(config)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    try:
        host, port = httpd.server_address
        endpoint = f"http://{host}:{port}"
        for i in range(10):
            body = {
                "id": f"smoke-{i}",
                "input_text": f"1\tint f{i}(int a) {{\n2\t    return a - {i};\n3\t}}",
                "num_candidates": 2,
                "max_new_tokens": 16,
            }
            status, obj, _ = _post(endpoint, "/v1/generate", body)
            assert status == 200, obj
            assert_valid_generate_response(obj)
    finally:
        httpd.shutdown()
        httpd.server_close()
