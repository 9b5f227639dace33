"""Two live agents end to end, including the counter-proposal round."""
from __future__ import annotations

import os

from charlie.config import load_config
from charlie.demo import (
    DEMO_PROMPT,
    build_demo,
    get_json,
    post_json,
    wait_for_approval,
    wait_for_phase,
    write_agent_fixture,
)
from charlie.kb import KnowledgeBase
from charlie.parser import parse
from charlie.policy import Obligation, PolicyRule
from charlie.runtime import Agent
from charlie.server import AgentServer
from charlie.terms import Dataset, isomorphic, iri
from charlie.trust import TrustAssertion
from charlie.vocab import ALL_TOPICS, SCHEMA_START, SCHEMA_END


def _transcript_kinds(conversation: dict) -> list[str]:
    return [e["kind"] for e in conversation["transcript"]]


def test_demo_pair_reaches_accepted(tmp_path):
    pair = build_demo(str(tmp_path))
    try:
        status, reply = post_json(f"{pair.jun_base}/chat", {"prompt": DEMO_PROMPT})
        conversation = wait_for_phase(
            pair.jun_base, reply["conversationId"], ("accepted", "rejected", "failed")
        )
        assert conversation["phase"] == "accepted"
        assert _transcript_kinds(conversation) == ["task-request", "proposal", "accept"]
        # the responder converged too
        nigel_conversations = get_json(f"{pair.nigel_base}/conversations")
        assert nigel_conversations[0]["phase"] == "accepted"
        # advisory context text never becomes ground truth
        from charlie.serializer import serialize

        context = conversation["transcript"][0]["context"]
        assert context
        for agent_server in (pair.jun.agent, pair.nigel.agent):
            kb_text = agent_server.run_sync(
                lambda a=agent_server: serialize(a.kb.dataset, "trig")
            )
            assert context not in kb_text
    finally:
        pair.close()


def test_counter_proposal_round(tmp_path):
    """Jun holds an unshared event that collides with the first proposal;
    the responder revises once and the second proposal is accepted."""
    from charlie.demo import free_port
    from charlie.terms import Quad, literal
    from charlie.vocab import RDF_TYPE, SCHEMA_EVENT, SCHEMA_NAME, XSD_DATETIME

    jun_port, nigel_port = free_port(), free_port()
    jun_webid = f"http://127.0.0.1:{jun_port}/profile#me"
    nigel_webid = f"http://127.0.0.1:{nigel_port}/profile#me"

    jun_config = write_agent_fixture(
        os.path.join(str(tmp_path), "jun"),
        "jun",
        "Jun",
        jun_port,
        contacts=[nigel_webid],
        events=[("Offsite", "2024-11-11T09:00:00Z", "2024-11-11T12:00:00Z")],
        key_seed=b"\x01" * 32,
        uuid_seed=1,
        policies=[
            PolicyRule(
                uid="urn:charlie:policy:jun-calendar-read",
                rule_kind="permission",
                action="read",
                target="urn:charlie:data:jun-calendar",
                assignee=nigel_webid,
                obligations=(Obligation("delete-after", "P30D"),),
            )
        ],
        trust=[TrustAssertion(nigel_webid, ALL_TOPICS, "signed", True, "user")],
    )
    # an unshared graph with a hidden conflict at the first free slot (Mon 12:00)
    config = load_config(jun_config)
    kb = KnowledgeBase.load(config.kb_file)
    hidden = "urn:charlie:data:jun-personal"
    g = iri(hidden)
    kb.add_quads(
        [
            Quad(iri("urn:ev:hidden"), iri(RDF_TYPE), iri(SCHEMA_EVENT), g),
            Quad(iri("urn:ev:hidden"), iri(SCHEMA_NAME), literal("Private"), g),
            Quad(iri("urn:ev:hidden"), iri(SCHEMA_START), literal("2024-11-11T12:00:00Z", XSD_DATETIME), g),
            Quad(iri("urn:ev:hidden"), iri(SCHEMA_END), literal("2024-11-11T13:00:00Z", XSD_DATETIME), g),
        ]
    )
    kb.describe(hidden, "personal notes")  # no calendar keyword: never shared
    kb.persist(config.kb_file)

    nigel_config = write_agent_fixture(
        os.path.join(str(tmp_path), "nigel"),
        "nigel",
        "Nigel",
        nigel_port,
        contacts=[jun_webid],
        events=[("Standup", "2024-11-11T09:00:00Z", "2024-11-11T10:30:00Z")],
        key_seed=b"\x02" * 32,
        uuid_seed=2,
        trust=[TrustAssertion(jun_webid, ALL_TOPICS, "signed", True, "user")],
    )
    jun = AgentServer(Agent(load_config(jun_config)))
    nigel = AgentServer(Agent(load_config(nigel_config)))
    jun.start()
    nigel.start()
    try:
        base = f"http://127.0.0.1:{jun.port}"
        status, reply = post_json(f"{base}/chat", {"prompt": DEMO_PROMPT})
        conversation = wait_for_phase(
            base, reply["conversationId"], ("accepted", "failed")
        )
        assert conversation["phase"] == "accepted"
        kinds = _transcript_kinds(conversation)
        assert kinds == ["task-request", "proposal", "reject", "proposal", "accept"]
        # the accepted slot is the revised one (13:00, after the hidden clash)
        final_payload = parse(conversation["transcript"][3]["payload"], "trig", "")
        start = next(q.object.value for q in final_payload.match(predicate=iri(SCHEMA_START)))
        assert start == "2024-11-11T13:00:00Z"
        # both calendars gained the same meeting
        jun_kb = jun.agent.run_sync(lambda: jun.agent.kb.graph("urn:charlie:data:jun-calendar"))
        nigel_kb = nigel.agent.run_sync(
            lambda: nigel.agent.kb.graph("urn:charlie:data:nigel-calendar")
        )
        jun_meeting = Dataset(q for q in jun_kb if q.subject.value.startswith("urn:charlie:meeting:"))
        nigel_meeting = Dataset(
            q for q in nigel_kb if q.subject.value.startswith("urn:charlie:meeting:")
        )
        stripped = lambda ds: Dataset(
            type(next(iter(ds)))(q.subject, q.predicate, q.object) for q in ds
        )
        assert len(jun_meeting) and isomorphic(stripped(jun_meeting), stripped(nigel_meeting))
    finally:
        jun.close()
        nigel.close()


def test_gating_pair_pauses_twice_then_accepts(tmp_path):
    pair = build_demo(str(tmp_path), gating=True)
    try:
        status, reply = post_json(f"{pair.jun_base}/chat", {"prompt": DEMO_PROMPT})
        assert "approvalId" in reply
        post_json(f"{pair.jun_base}/pending/{reply['approvalId']}/answer", {"choice": "allow"})
        trust = wait_for_approval(pair.nigel_base, "confirm-trust")
        post_json(f"{pair.nigel_base}/pending/{trust['id']}/answer", {"choice": "grant"})
        conversation_id = get_json(f"{pair.jun_base}/conversations")[0]["id"]
        conversation = wait_for_phase(
            pair.jun_base, conversation_id, ("accepted", "rejected", "failed")
        )
        assert conversation["phase"] == "accepted"
    finally:
        pair.close()


def test_gating_trust_refusal_rejects_without_jun_writes(tmp_path):
    pair = build_demo(str(tmp_path), gating=True)
    try:
        status, reply = post_json(f"{pair.jun_base}/chat", {"prompt": DEMO_PROMPT})
        post_json(f"{pair.jun_base}/pending/{reply['approvalId']}/answer", {"choice": "allow"})
        # snapshot right after the permission grant: the refusal path must
        # leave Jun's ground truth and beliefs exactly here
        jun_agent = pair.jun.agent
        calendar_before = jun_agent.run_sync(
            lambda: jun_agent.kb.graph("urn:charlie:data:jun-calendar")
        )
        trust = wait_for_approval(pair.nigel_base, "confirm-trust")
        post_json(f"{pair.nigel_base}/pending/{trust['id']}/answer", {"choice": "refuse"})
        conversation_id = get_json(f"{pair.jun_base}/conversations")[0]["id"]
        conversation = wait_for_phase(
            pair.jun_base, conversation_id, ("accepted", "rejected", "failed")
        )
        assert conversation["phase"] == "rejected"
        calendar_after = jun_agent.run_sync(
            lambda: jun_agent.kb.graph("urn:charlie:data:jun-calendar")
        )
        assert calendar_after == calendar_before
        assert jun_agent.run_sync(lambda: jun_agent.kb.belief_graphs()) == []
    finally:
        pair.close()


def test_run_twice_is_deterministic(tmp_path):
    """Identical transcripts across runs, modulo the ephemeral ports that
    the loopback WebIDs embed."""
    transcripts = []
    for run in ("a", "b"):
        pair = build_demo(os.path.join(str(tmp_path), run))
        try:
            status, reply = post_json(f"{pair.jun_base}/chat", {"prompt": DEMO_PROMPT})
            conversation = wait_for_phase(
                pair.jun_base, reply["conversationId"], ("accepted", "rejected", "failed")
            )

            def scrub(text: str) -> str:
                return text.replace(f":{pair.jun.port}/", ":JUN/").replace(
                    f":{pair.nigel.port}/", ":NIGEL/"
                )

            transcripts.append(
                [
                    (
                        e["kind"],
                        e["messageId"],
                        scrub(e["context"]),
                        sorted(scrub(e["payload"]).splitlines()),
                    )
                    for e in conversation["transcript"]
                ]
            )
        finally:
            pair.close()
    assert transcripts[0] == transcripts[1]
