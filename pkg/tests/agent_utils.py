"""Helpers for runtime tests: a stub counterparty and agent builders."""
from __future__ import annotations

import base64
import os
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from charlie.config import AgentConfig, dump_config, load_config
from charlie.demo import calendar_graph_quads, free_port
from charlie.kb import KnowledgeBase
from charlie.policy import PolicyStore
from charlie.protocol import Envelope, decode, encode
from charlie.provenance import (
    generate_private_key,
    public_key_bytes,
    save_key_file,
    sign,
)
from charlie.runtime import Agent
from charlie.serializer import serialize
from charlie.server import AgentServer
from charlie.terms import Dataset
from charlie.trust import TrustStore

NOW = datetime(2024, 11, 4, 8, 0, tzinfo=timezone.utc)


class StubPeer:
    """A fake counterparty: serves a WebID profile, records /inbox posts."""

    def __init__(self, name: str = "Nigel", seed: bytes = b"\x77" * 32) -> None:
        self.name = name
        self.key = generate_private_key(seed)
        self.inbox: list[Envelope] = []
        self.inbox_event = threading.Event()
        peer = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):
                pass

            def do_GET(self):
                if self.path == "/profile":
                    body = peer.profile_turtle().encode()
                    self.send_response(200)
                    self.send_header("Content-Type", "text/turtle")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                else:
                    self.send_response(404)
                    self.send_header("Content-Length", "0")
                    self.end_headers()

            def do_POST(self):
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length)
                peer.inbox.append(decode(raw))
                peer.inbox_event.set()
                body = b'{"status": "queued"}'
                self.send_response(202)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.httpd.daemon_threads = True
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def endpoint(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    @property
    def webid(self) -> str:
        return f"{self.endpoint}/profile#me"

    @property
    def key_id(self) -> str:
        return f"{self.endpoint}/profile#key-1"

    def profile_turtle(self) -> str:
        key_b64 = base64.b64encode(public_key_bytes(self.key)).decode()
        return (
            "@prefix foaf: <http://xmlns.com/foaf/0.1/> .\n"
            "@prefix cv: <urn:charlie:vocab:> .\n"
            f'<#me> foaf:name "{self.name}" ;\n'
            f"    cv:agentEndpoint <{self.endpoint}> ;\n"
            "    cv:publicKey <#key-1> .\n"
            f'<#key-1> cv:keyValue "{key_b64}" .\n'
        )

    def wait_envelope(self, count: int = 1, timeout: float = 10.0) -> Envelope:
        import time

        deadline = time.monotonic() + timeout
        while len(self.inbox) < count:
            if time.monotonic() > deadline:
                raise TimeoutError(f"expected {count} envelopes, got {len(self.inbox)}")
            time.sleep(0.02)
        return self.inbox[count - 1]

    def signed_envelope(
        self,
        agent_webid: str,
        payload: Dataset,
        kind: str = "task-request",
        conversation_id: str = "conv-1",
        message_id: str = "msg-1",
        context: str = "Jun seeks to schedule a meeting for next week.",
        policies: str = "",
        tamper=None,
    ) -> bytes:
        record = sign(payload, self.key, self.webid, self.key_id, NOW)
        payload_to_send = tamper(payload) if tamper else payload
        env = Envelope(
            message_id=message_id,
            conversation_id=conversation_id,
            sender=self.webid,
            recipient=agent_webid,
            kind=kind,
            context=context,
            payload=serialize(payload_to_send, "trig"),
            policies=policies,
            provenance=record,
        )
        return encode(env)

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


def build_agent(
    tmp_path,
    name: str = "Jun",
    contacts: list[str] | None = None,
    policies=None,
    trust=None,
    events=None,
    auto_confirm: bool = True,
    uuid_seed: int = 4242,
    extra_graphs=None,
) -> AgentServer:
    directory = os.path.join(str(tmp_path), name.lower())
    os.makedirs(directory, exist_ok=True)
    port = free_port()
    key_path = os.path.join(directory, "agent.key")
    save_key_file(key_path, generate_private_key(bytes([len(name)]) * 32))

    calendar = f"urn:charlie:data:{name.lower()}-calendar"
    kb = KnowledgeBase()
    kb.add_quads(calendar_graph_quads(calendar, events or []))
    kb.describe(calendar, f"{name}'s calendar of events")
    for graph, description, quads in extra_graphs or []:
        kb.add_quads(quads)
        kb.describe(graph, description)
    kb.dataset = kb.dataset.union(PolicyStore(policies or []).to_dataset())
    kb.dataset = kb.dataset.union(TrustStore(trust or []).to_dataset())
    kb_path = os.path.join(directory, "agent.trig")
    kb.persist(kb_path)

    config = AgentConfig(
        webid=f"http://127.0.0.1:{port}/profile#me",
        display_name=name,
        listen_host="127.0.0.1",
        listen_port=port,
        key_file="agent.key",
        kb_file="agent.trig",
        auto_confirm=auto_confirm,
        clock="fixed:2024-11-04T08:00:00Z",
        contacts=contacts or [],
        uuid_seed=uuid_seed,
    )
    config_path = os.path.join(directory, "agent.cfg")
    with open(config_path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(config))
    server = AgentServer(Agent(load_config(config_path)))
    server.start()
    return server
