# %% [markdown]
# # Running a language model through the pipeline
#
# Any chat-completions endpoint works. The API key is read from the
# environment variable named by `--key-env` (default `OPENAI_API_KEY`);
# it is never accepted on the command line.
#
#     export OPENAI_API_KEY=...
#     python demos/04_language_model_run.py https://api.example.com/v1 some-model
#
# Without arguments the script runs the same steps against a tiny local
# endpoint that answers yes for even queries, so the flow can be seen offline.

# %%
import json
import os
import sys
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from coincidence.cli import main


class EvenOracle(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        prompt = body["messages"][0]["content"]
        query = int(prompt.rsplit("produce ", 1)[1].split("?")[0])
        text = "Yes." if query % 2 == 0 else "No."
        data = json.dumps({"choices": [{"message": {"role": "assistant", "content": text}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


if len(sys.argv) == 3:
    endpoint, model = sys.argv[1:]
else:
    server = ThreadingHTTPServer(("127.0.0.1", 0), EvenOracle)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    endpoint, model = f"http://127.0.0.1:{server.server_address[1]}/v1", "even-oracle"
    os.environ.setdefault("OPENAI_API_KEY", "local")

out = Path(tempfile.mkdtemp(prefix="coincidence-"))
sets = out / "sets.jsonl"
sets.write_text(json.dumps({"id": "demo", "domain": "number", "elements": [16, 8, 2, 64]}) + "\n")

# %% [markdown]
# `respond` is resumable: rerunning it skips pairs already on disk, so an
# interrupted run only pays for what is missing.

# %%
for _ in range(2):
    code = main(["respond", "--domain", "number", "--sets", str(sets), "--responder", "llm",
                 "--endpoint", endpoint, "--model", model, "--out", str(out)])
    print("exit code", code)

# %%
judgments = sorted(out.glob("judgments-llm-*.jsonl"))
main(["score", "--domain", "number", "--sets", str(sets), "--out", str(out), "--judgments", *map(str, judgments)])
print((out / "report.csv").read_text())
