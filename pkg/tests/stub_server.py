"""A local chat-completions endpoint for tests.

Behaviour is scripted: ``statuses`` is consumed one entry per request (then
200 forever), ``reply`` maps the prompt text to the assistant text, and
``delay`` holds each request open so concurrency can be observed.
"""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubState:
    def __init__(self):
        self.lock = threading.Lock()
        self.statuses = []
        self.retry_after = None
        self.reply = lambda prompt: "yes"
        self.delay = 0.0
        self.requests = []
        self.in_flight = 0
        self.max_in_flight = 0


def _handler(state: StubState):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            with state.lock:
                state.requests.append({"path": self.path, "body": body, "auth": self.headers.get("Authorization")})
                state.in_flight += 1
                state.max_in_flight = max(state.max_in_flight, state.in_flight)
                status = state.statuses.pop(0) if state.statuses else 200
            try:
                if state.delay:
                    time.sleep(state.delay)
                if status == 200:
                    text = state.reply(body["messages"][0]["content"])
                    payload = {"choices": [{"message": {"role": "assistant", "content": text}}]}
                else:
                    payload = {"error": {"message": f"status {status}"}}
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                if status != 200 and state.retry_after is not None:
                    self.send_header("Retry-After", str(state.retry_after))
                self.end_headers()
                self.wfile.write(data)
            finally:
                with state.lock:
                    state.in_flight -= 1

    return Handler


class StubServer:
    def __init__(self):
        self.state = StubState()
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _handler(self.state))
        self.httpd.daemon_threads = True
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def url(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/v1"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()
