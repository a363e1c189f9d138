import json
import shutil
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from convrepair import load_corpus
from convrepair.engine import run_original_failure

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
MANIFEST = FIXTURES / "toy_corpus" / "manifest.json"
SCRIPTS = FIXTURES / "scripts"
PROMPTS = FIXTURES / "prompts"
TRANSCRIPTS = FIXTURES / "transcripts"


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(MANIFEST)


@pytest.fixture(scope="session")
def bugs_by_id(corpus):
    return {bug.id: bug for bug in corpus}


@pytest.fixture(scope="session")
def original_failures(corpus, tmp_path_factory):
    """One original failing run per toy bug, with test bodies extracted."""
    root = tmp_path_factory.mktemp("orig")
    failures = {}
    for bug in corpus:
        workspace = root / bug.id
        shutil.copytree(bug.project_root, workspace)
        failures[bug.id] = run_original_failure(bug, workspace, include_test_body=True)
    return failures


@pytest.fixture
def workspace_for(tmp_path):
    counter = iter(range(10**6))

    def make(bug):
        workspace = tmp_path / f"ws-{bug.id}-{next(counter)}"
        shutil.copytree(bug.project_root, workspace)
        return workspace

    return make


class RecordingBackend:
    """Delegating backend that keeps every query's message list."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    def complete(self, messages, session_id="default"):
        self.calls.append(list(messages))
        return self.inner.complete(messages, session_id=session_id)


@pytest.fixture
def recording():
    return RecordingBackend


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests.append((dict(self.headers), body))
        status, payload = self.server.script.pop(0)
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class StubServer:
    """Local chat-completions stub with a scripted list of (status, body)."""

    def __init__(self):
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self._server.requests = []
        self._server.script = []
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def endpoint(self):
        host, port = self._server.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    @property
    def requests(self):
        return self._server.requests

    def enqueue(self, payload, status=200):
        self._server.script.append((status, payload))

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    server = StubServer()
    yield server
    server.close()


def tree_digest(root: Path) -> dict:
    """Map of relative path -> content bytes for a directory tree."""
    return {
        str(path.relative_to(root)): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }
