"""Wire-protocol server for the scorer model.

Protocol (line-delimited JSON over stdio, or POST bodies over HTTP):
  request:  {"id": int, "kind": "relevance", "goal": str, "step": str, "lang": str}
            {"id": int, "kind": "order", "goal": str, "step_a": str, "step_b": str, "lang": str}
  response: {"id": int, "score": float}
  batch:    {"requests": [...]} -> {"responses": [...]}, order-preserving by id.

Malformed requests get {"id": ..., "error": ...} responses, never a
silent drop.
"""

from __future__ import annotations

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .model import PairClassifier


def _error(request, message: str) -> dict:
    req_id = request.get("id") if isinstance(request, dict) else None
    return {"id": req_id, "error": message}


def answer_batch(model: PairClassifier, requests: list) -> list[dict]:
    """Score a batch of protocol requests, preserving request order."""
    responses: list[dict | None] = [None] * len(requests)
    relevance: list[tuple[int, dict]] = []
    ordering: list[tuple[int, dict]] = []
    for i, req in enumerate(requests):
        if not isinstance(req, dict) or "id" not in req:
            responses[i] = _error(req, "missing id")
            continue
        kind = req.get("kind")
        if kind == "relevance":
            if not isinstance(req.get("goal"), str) or not isinstance(req.get("step"), str):
                responses[i] = _error(req, "relevance request needs goal and step")
            else:
                relevance.append((i, req))
        elif kind == "order":
            if not all(isinstance(req.get(k), str) for k in ("goal", "step_a", "step_b")):
                responses[i] = _error(req, "order request needs goal, step_a, step_b")
            else:
                ordering.append((i, req))
        else:
            responses[i] = _error(req, f"unknown kind {kind!r}")

    if relevance:
        scores = model.score_inference(
            [r["goal"] for _, r in relevance], [r["step"] for _, r in relevance])
        for (i, req), score in zip(relevance, scores):
            responses[i] = {"id": req["id"], "score": score}
    if ordering:
        scores = model.score_ordering(
            [r["goal"] for _, r in ordering],
            [r["step_a"] for _, r in ordering],
            [r["step_b"] for _, r in ordering])
        for (i, req), score in zip(ordering, scores):
            responses[i] = {"id": req["id"], "score": score}
    return responses  # type: ignore[return-value]


def answer_payload(model: PairClassifier, payload) -> dict:
    if isinstance(payload, dict) and "requests" in payload:
        if not isinstance(payload["requests"], list):
            return {"responses": [_error(payload, "requests must be a list")]}
        return {"responses": answer_batch(model, payload["requests"])}
    return answer_batch(model, [payload])[0]


def _make_handler(model: PairClassifier):
    lock = threading.Lock()

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError:
                body = json.dumps(_error(None, "invalid JSON")).encode("utf-8")
                self._reply(400, body)
                return
            with lock:  # model access is serialized, never interleaved mid-batch
                result = answer_payload(model, payload)
            self._reply(200, json.dumps(result, ensure_ascii=False).encode("utf-8"))

        def _reply(self, status: int, body: bytes):
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return Handler


class ScorerServer:
    """HTTP endpoint wrapping a loaded model."""

    def __init__(self, model: PairClassifier, host: str = "127.0.0.1", port: int = 0):
        self._server = ThreadingHTTPServer((host, port), _make_handler(model))
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/"

    def start(self) -> "ScorerServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self):
        self._server.serve_forever()

    def stop(self):
        self._server.shutdown()


def serve_stdio(model: PairClassifier, stdin=None, stdout=None):
    """Answer one JSON line (single request or batch) per input line."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError:
            result = _error(None, "invalid JSON")
        else:
            result = answer_payload(model, payload)
        stdout.write(json.dumps(result, ensure_ascii=False) + "\n")
        stdout.flush()
