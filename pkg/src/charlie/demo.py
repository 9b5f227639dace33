"""Reproducible two-agent meeting-scheduling scenario.

Jun's agent and Nigel's agent run on loopback with a fixed clock
(2024-11-04T08:00:00Z), seeded ids, scripted interpreters, and fixture
KBs: Jun has 2 events and Nigel 3 in the demo week (2024-11-11..15).
With permissions and trust pre-granted the flow runs task-request ->
proposal -> accept without touching a human; the gating variant leaves
Jun's sharing permission and Nigel's trust in Jun ungranted so both
sides pause for an answer.
"""
from __future__ import annotations

import json
import os
import socket
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable, Optional

from .config import AgentConfig, dump_config, load_config
from .kb import KnowledgeBase
from .policy import Obligation, PolicyRule, PolicyStore
from .provenance import generate_private_key, save_key_file
from .runtime import Agent
from .server import AgentServer
from .terms import Quad, iri, literal
from .trust import TrustAssertion, TrustStore
from .vocab import (
    ALL_TOPICS,
    RDF_TYPE,
    SCHEMA_END,
    SCHEMA_EVENT,
    SCHEMA_NAME,
    SCHEMA_START,
    XSD_DATETIME,
)

DEMO_CLOCK = "fixed:2024-11-04T08:00:00Z"
DEMO_PROMPT = "Schedule a meeting with Nigel next week"

JUN_EVENTS = [
    ("Strategy offsite", "2024-11-11T09:00:00Z", "2024-11-11T12:00:00Z"),
    ("Design review", "2024-11-12T09:00:00Z", "2024-11-12T11:00:00Z"),
]
NIGEL_EVENTS = [
    ("Standup", "2024-11-11T09:00:00Z", "2024-11-11T10:30:00Z"),
    ("One-on-one", "2024-11-13T13:00:00Z", "2024-11-13T14:00:00Z"),
    ("Focus day", "2024-11-15T09:00:00Z", "2024-11-15T17:00:00Z"),
]


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def calendar_graph_quads(graph: str, events) -> list[Quad]:
    g = iri(graph)
    quads = []
    for index, (name, start, end) in enumerate(events):
        e = iri(f"{graph}:event:{index}")
        quads += [
            Quad(e, iri(RDF_TYPE), iri(SCHEMA_EVENT), g),
            Quad(e, iri(SCHEMA_NAME), literal(name), g),
            Quad(e, iri(SCHEMA_START), literal(start, XSD_DATETIME), g),
            Quad(e, iri(SCHEMA_END), literal(end, XSD_DATETIME), g),
        ]
    return quads


def write_agent_fixture(
    directory: str,
    name: str,
    display_name: str,
    port: int,
    contacts: list[str],
    events,
    key_seed: bytes,
    uuid_seed: int,
    policies: Optional[list[PolicyRule]] = None,
    trust: Optional[list[TrustAssertion]] = None,
    auto_confirm: bool = True,
) -> str:
    """Write key, KB, and config files; returns the config path."""
    os.makedirs(directory, exist_ok=True)
    key_path = os.path.join(directory, f"{name}.key")
    save_key_file(key_path, generate_private_key(key_seed))

    calendar = f"urn:charlie:data:{name}-calendar"
    kb = KnowledgeBase()
    kb.add_quads(calendar_graph_quads(calendar, events))
    kb.describe(calendar, f"{display_name}'s calendar of events")
    kb.dataset = kb.dataset.union(PolicyStore(policies or []).to_dataset())
    kb.dataset = kb.dataset.union(TrustStore(trust or []).to_dataset())
    kb_path = os.path.join(directory, f"{name}.trig")
    kb.persist(kb_path)

    config = AgentConfig(
        webid=f"http://127.0.0.1:{port}/profile#me",
        display_name=display_name,
        listen_host="127.0.0.1",
        listen_port=port,
        key_file=f"{name}.key",
        kb_file=f"{name}.trig",
        interpreter_kind="scripted",
        auto_confirm=auto_confirm,
        clock=DEMO_CLOCK,
        contacts=contacts,
        uuid_seed=uuid_seed,
    )
    config_path = os.path.join(directory, f"{name}.cfg")
    with open(config_path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(config))
    return config_path


@dataclass
class DemoPair:
    jun: AgentServer
    nigel: AgentServer

    @property
    def jun_base(self) -> str:
        return f"http://127.0.0.1:{self.jun.port}"

    @property
    def nigel_base(self) -> str:
        return f"http://127.0.0.1:{self.nigel.port}"

    def close(self) -> None:
        self.jun.close()
        self.nigel.close()


def build_demo(workdir: str, gating: bool = False) -> DemoPair:
    jun_port, nigel_port = free_port(), free_port()
    jun_webid = f"http://127.0.0.1:{jun_port}/profile#me"
    nigel_webid = f"http://127.0.0.1:{nigel_port}/profile#me"

    jun_policies = (
        []
        if gating
        else [
            PolicyRule(
                uid="urn:charlie:policy:jun-calendar-read",
                rule_kind="permission",
                action="read",
                target="urn:charlie:data:jun-calendar",
                assignee=nigel_webid,
                obligations=(Obligation("delete-after", "P30D"),),
            )
        ]
    )
    # Jun trusts Nigel in both variants; the gating run pauses on Jun's
    # sharing permission and on Nigel's trust in Jun only.
    jun_trust = [TrustAssertion(nigel_webid, ALL_TOPICS, "signed", True, "user")]
    nigel_trust = (
        [] if gating else [TrustAssertion(jun_webid, ALL_TOPICS, "signed", True, "user")]
    )

    jun_config = write_agent_fixture(
        os.path.join(workdir, "jun"),
        "jun",
        "Jun",
        jun_port,
        contacts=[nigel_webid],
        events=JUN_EVENTS,
        key_seed=b"\x01" * 32,
        uuid_seed=1101,
        policies=jun_policies,
        trust=jun_trust,
    )
    nigel_config = write_agent_fixture(
        os.path.join(workdir, "nigel"),
        "nigel",
        "Nigel",
        nigel_port,
        contacts=[jun_webid],
        events=NIGEL_EVENTS,
        key_seed=b"\x02" * 32,
        uuid_seed=1102,
        trust=nigel_trust,
    )

    jun = AgentServer(Agent(load_config(jun_config)))
    nigel = AgentServer(Agent(load_config(nigel_config)))
    jun.start()
    nigel.start()
    return DemoPair(jun, nigel)


# --- tiny HTTP client used by the driver and tests ----------------------------


def get_json(url: str):
    with urllib.request.urlopen(url, timeout=10) as response:
        return json.loads(response.read().decode("utf-8"))


def post_json(url: str, body: dict):
    request = urllib.request.Request(
        url,
        data=json.dumps(body).encode("utf-8"),
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(request, timeout=10) as response:
            return response.status, json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode("utf-8") or "{}")


def wait_until(predicate: Callable[[], Optional[object]], timeout: float = 10.0, step: float = 0.05):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(step)
    raise TimeoutError("demo step did not complete in time")


def wait_for_phase(base: str, conversation_id: str, phases, timeout: float = 10.0) -> dict:
    return wait_until(
        lambda: next(
            (
                c
                for c in [get_json(f"{base}/conversations/{conversation_id}")]
                if c and c["phase"] in phases
            ),
            None,
        ),
        timeout,
    )


def wait_for_approval(base: str, kind: str, timeout: float = 10.0) -> dict:
    return wait_until(
        lambda: next((a for a in get_json(f"{base}/pending") if a["kind"] == kind), None),
        timeout,
    )


def run_schedule_demo(
    gating: bool = False,
    refuse_trust: bool = False,
    workdir: Optional[str] = None,
    out: Callable[[str], None] = print,
) -> int:
    """Drive the six-step flow; returns 0 iff the meeting was accepted."""
    import tempfile

    own_dir = workdir is None
    if own_dir:
        workdir = tempfile.mkdtemp(prefix="charlie-demo-")
    pair = build_demo(workdir, gating=gating)
    try:
        out(f"Jun's agent:   {pair.jun_base}  (KB: {workdir}/jun)")
        out(f"Nigel's agent: {pair.nigel_base}  (KB: {workdir}/nigel)")
        out(f'> {DEMO_PROMPT}')
        status, reply = post_json(f"{pair.jun_base}/chat", {"prompt": DEMO_PROMPT})
        if gating:
            approval_id = reply["approvalId"]
            out(f"Jun is asked to grant sharing permissions ({approval_id})")
            post_json(
                f"{pair.jun_base}/pending/{approval_id}/answer", {"choice": "allow"}
            )
            trust_approval = wait_for_approval(pair.nigel_base, "confirm-trust")
            choice = "refuse" if refuse_trust else "grant"
            out(f"Nigel is asked to confirm trust in Jun -> {choice}")
            post_json(
                f"{pair.nigel_base}/pending/{trust_approval['id']}/answer",
                {"choice": choice},
            )
            conversation_id = wait_until(
                lambda: next(
                    (c["id"] for c in get_json(f"{pair.jun_base}/conversations")), None
                )
            )
        else:
            conversation_id = reply["conversationId"]
        conversation = wait_for_phase(
            pair.jun_base, conversation_id, ("accepted", "rejected", "failed")
        )
        for envelope in conversation["transcript"]:
            line = f"  {envelope['kind']:12s} {envelope['from']} -> {envelope['to']}"
            out(line)
            if envelope.get("context"):
                out(f"               {envelope['context']}")
        out(f"conversation phase: {conversation['phase']}")
        return 0 if conversation["phase"] == "accepted" else 1
    finally:
        pair.close()
