"""Deterministic stand-in for a chat-completion endpoint.

Used by the test suite and for offline runs of the pipeline: responses are
a pure function of the prompt, so cached and uncached runs agree. The
server also counts requests, which is how cache soundness is verified.

Run standalone with ``python -m cswitch.mockllm --port 8089``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

_JUDGE_MARKER = "criteria: Accuracy and Fluency"


def _stable_int(text: str, modulus: int) -> int:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % modulus


def respond(prompt: str, mode: str = "auto") -> str:
    """Deterministic completion for a prompt."""
    if mode == "echo":
        return prompt
    if _JUDGE_MARKER in prompt:
        accuracy = 1 + _stable_int("a" + prompt, 3)
        fluency = 1 + _stable_int("f" + prompt, 3)
        return json.dumps({"accuracy": accuracy, "fluency": fluency})
    lines = [l for l in prompt.splitlines() if l.strip()]
    wanted: list[str] = []
    input_line = lines[-1] if lines else ""
    for line in lines:
        if line.startswith("Words wanted:"):
            wanted = [w.strip() for w in line[len("Words wanted:"):].split(",") if w.strip()]
        else:
            input_line = line
    tokens = input_line.split()
    # splice the wanted words over the sentence at stable positions
    for idx, word in enumerate(wanted):
        if tokens:
            tokens[(idx * 2 + 1) % len(tokens)] = word
        else:
            tokens.append(word)
    suffix = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:6]
    return " ".join(tokens) + f" [{suffix}]"


class MockLLMServer:
    """Threaded local HTTP server implementing POST /chat/completions."""

    def __init__(
        self,
        mode: str = "auto",
        fail_statuses: list[int] | None = None,
        port: int = 0,
        fixed_response: str | None = None,
    ):
        self.mode = mode
        self.fixed_response = fixed_response
        self._fail_statuses = list(fail_statuses or [])
        self._count_lock = threading.Lock()
        self.request_count = 0
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep tests quiet
                pass

            def do_POST(self):
                with outer._count_lock:
                    outer.request_count += 1
                    fail = outer._fail_statuses.pop(0) if outer._fail_statuses else None
                if fail is not None:
                    self.send_response(fail)
                    self.end_headers()
                    return
                if not self.path.endswith("/chat/completions"):
                    self.send_response(404)
                    self.end_headers()
                    return
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    payload = json.loads(self.rfile.read(length))
                    prompt = payload["messages"][-1]["content"]
                except (ValueError, KeyError, IndexError):
                    self.send_response(400)
                    self.end_headers()
                    return
                content = (
                    outer.fixed_response
                    if outer.fixed_response is not None
                    else respond(prompt, outer.mode)
                )
                body = json.dumps(
                    {"choices": [{"message": {"role": "assistant", "content": content}}]}
                ).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockLLMServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockLLMServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Run the mock chat-completion server")
    parser.add_argument("--port", type=int, default=8089)
    parser.add_argument("--mode", choices=("auto", "echo"), default="auto")
    args = parser.parse_args(argv)
    server = MockLLMServer(mode=args.mode, port=args.port)
    print(f"mock LLM listening on {server.base_url}")
    try:
        server._server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
