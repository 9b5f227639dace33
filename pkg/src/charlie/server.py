"""HTTP face of an agent.

Endpoints (JSON unless noted):

    POST /chat {"prompt": ...}        -> {"conversationId"} | {"approvalId"}
    GET  /conversations               -> [{id, role, phase, counterparty}]
    GET  /conversations/{id}          -> {id, role, phase, transcript: [...]}
    GET  /pending                     -> [PendingApproval]
    POST /pending/{id}/answer {"choice": ...}
    GET  /profile                     -> text/turtle WebID profile
    POST /inbox  (envelope)           -> 202 / 400 / 409
    GET  /events                      -> server-sent events stream
    GET  /console/...                 -> static console bundle, if configured

The server binds loopback by default and performs no authentication; all
mutation is delegated to the agent's single-writer queue.
"""
from __future__ import annotations

import json
import mimetypes
import os
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .runtime import Agent, AlreadyAnswered, UnknownApproval


class AgentServer:
    def __init__(self, agent: Agent) -> None:
        self.agent = agent
        handler = _make_handler(agent)
        self.httpd = ThreadingHTTPServer(
            (agent.config.listen_host, agent.config.listen_port), handler
        )
        self.httpd.daemon_threads = True
        agent.config.listen_port = self.httpd.server_address[1]
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def start(self) -> None:
        self.agent.start()
        self._thread.start()

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        self.agent.close()


def _make_handler(agent: Agent):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        # helpers --------------------------------------------------------------

        def _json(self, status: int, body: object) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(data)

        def _body(self) -> bytes:
            length = int(self.headers.get("Content-Length") or 0)
            return self.rfile.read(length) if length else b""

        # routes ----------------------------------------------------------------

        def do_OPTIONS(self) -> None:
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self) -> None:
            path = self.path.split("?", 1)[0]
            if path == "/profile":
                data = agent.profile_turtle().encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "text/turtle")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)
            elif path == "/pending":
                self._json(200, agent.list_pending())
            elif path == "/conversations":
                self._json(200, agent.list_conversations())
            elif path.startswith("/conversations/"):
                conversation = agent.get_conversation(path[len("/conversations/"):])
                if conversation is None:
                    self._json(404, {"error": "unknown conversation"})
                else:
                    self._json(200, conversation)
            elif path == "/events":
                self._serve_events()
            elif path.startswith("/console"):
                self._serve_console(path)
            else:
                self._json(404, {"error": "not found"})

        def do_POST(self) -> None:
            path = self.path.split("?", 1)[0]
            if path == "/chat":
                try:
                    body = json.loads(self._body() or b"{}")
                    prompt = body["prompt"]
                except (json.JSONDecodeError, KeyError):
                    self._json(400, {"error": "expected {\"prompt\": ...}"})
                    return
                self._json(200, agent.chat(prompt))
            elif path == "/inbox":
                status, body = agent.inbox(self._body())
                self._json(status, body)
            elif path.startswith("/pending/") and path.endswith("/answer"):
                approval_id = path[len("/pending/"):-len("/answer")]
                try:
                    body = json.loads(self._body() or b"{}")
                    choice = str(body["choice"])
                except (json.JSONDecodeError, KeyError):
                    self._json(400, {"error": "expected {\"choice\": ...}"})
                    return
                try:
                    self._json(200, agent.answer(approval_id, choice))
                except UnknownApproval:
                    self._json(404, {"error": "unknown approval"})
                except AlreadyAnswered:
                    self._json(409, {"error": "already answered"})
            else:
                self._json(404, {"error": "not found"})

        # server-sent events -------------------------------------------------------

        def _serve_events(self) -> None:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            events = agent.subscribe()
            try:
                while True:
                    try:
                        event = events.get(timeout=15)
                        payload = json.dumps(event)
                        self.wfile.write(
                            f"event: {event['type']}\ndata: {payload}\n\n".encode()
                        )
                    except queue.Empty:
                        self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                agent.unsubscribe(events)

        # static console --------------------------------------------------------------

        def _serve_console(self, path: str) -> None:
            root = agent.config.console_dir
            if not root or not os.path.isdir(root):
                self._json(404, {"error": "console not built"})
                return
            rel = path[len("/console"):].lstrip("/") or "index.html"
            target = os.path.realpath(os.path.join(root, rel))
            if not target.startswith(os.path.realpath(root) + os.sep) and target != os.path.realpath(
                os.path.join(root, "index.html")
            ):
                self._json(404, {"error": "not found"})
                return
            if not os.path.isfile(target):
                self._json(404, {"error": "not found"})
                return
            ctype = mimetypes.guess_type(target)[0] or "application/octet-stream"
            with open(target, "rb") as fh:
                data = fh.read()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    return Handler
