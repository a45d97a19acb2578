import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def protocol_fixtures():
    with open(DATA_DIR / "protocol_fixtures.json", encoding="utf-8") as fh:
        return json.load(fh)


class CannedHandler(BaseHTTPRequestHandler):
    """Serves pre-programmed responses, recording every request."""

    script = []  # list of (status, payload-dict-or-raw-str)
    requests = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        type(self).requests.append((self.path, json.loads(body) if body else None))
        if type(self).script:
            status, payload = type(self).script.pop(0)
        else:
            status, payload = 200, {}
        raw = payload if isinstance(payload, str) else json.dumps(payload)
        data = raw.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture()
def canned_server():
    """Yields (base_url, handler_class); program handler_class.script per test."""
    CannedHandler.script = []
    CannedHandler.requests = []
    server = HTTPServer(("127.0.0.1", 0), CannedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", CannedHandler
    finally:
        server.shutdown()
        thread.join(timeout=2)
