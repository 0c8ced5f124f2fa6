import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from goalscripts.scorers import (
    ENDPOINT_ENV_VAR,
    RemoteScorer,
    ScorerProtocolError,
    ScorerTransportError,
)


def make_handler(score_fn, corrupt=False):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers["Content-Length"])
            payload = json.loads(self.rfile.read(length))
            responses = []
            for req in payload["requests"]:
                responses.append({"id": req["id"], "score": score_fn(req)})
            if corrupt:
                responses = responses[:-1]
            body = json.dumps({"responses": responses}).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return Handler


@pytest.fixture
def serve():
    servers = []

    def _serve(score_fn, corrupt=False):
        server = HTTPServer(("127.0.0.1", 0), make_handler(score_fn, corrupt))
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_port}/"

    yield _serve
    for server in servers:
        server.shutdown()


def relevance_by_length(req):
    if req["kind"] == "relevance":
        return min(1.0, len(req["step"]) / 100.0)
    return 0.75  # probability that step_a precedes step_b


class TestRemoteScorer:
    def test_relevance_roundtrip(self, serve):
        scorer = RemoteScorer(serve(relevance_by_length))
        assert scorer.score_relevance("g", "x" * 50) == pytest.approx(0.5)

    def test_batch_preserves_order(self, serve):
        scorer = RemoteScorer(serve(relevance_by_length), batch_size=3)
        steps = ["x" * n for n in (10, 30, 20, 40, 5)]
        scores = scorer.score_relevance_batch("g", steps)
        assert scores == pytest.approx([0.1, 0.3, 0.2, 0.4, 0.05])

    def test_order_antisymmetry_derived(self, serve):
        scorer = RemoteScorer(serve(relevance_by_length))
        ab = scorer.compare_order("g", "alpha", "beta")
        ba = scorer.compare_order("g", "beta", "alpha")
        assert ab + ba == pytest.approx(1.0)

    def test_unreachable_is_transport_error(self):
        scorer = RemoteScorer("http://127.0.0.1:1/", retries=0)
        with pytest.raises(ScorerTransportError):
            scorer.score_relevance("g", "s")

    def test_missing_response_is_protocol_error(self, serve):
        scorer = RemoteScorer(serve(relevance_by_length, corrupt=True))
        with pytest.raises(ScorerProtocolError):
            scorer.score_relevance_batch("g", ["a", "b"])

    def test_out_of_range_score_rejected(self, serve):
        scorer = RemoteScorer(serve(lambda req: 1.5))
        with pytest.raises(Exception):
            scorer.score_relevance("g", "s")

    def test_env_var_overrides_endpoint(self, serve, monkeypatch):
        good = serve(relevance_by_length)
        monkeypatch.setenv(ENDPOINT_ENV_VAR, good)
        scorer = RemoteScorer("http://127.0.0.1:1/")
        assert scorer.endpoint == good
        assert 0.0 <= scorer.score_relevance("g", "step") <= 1.0
