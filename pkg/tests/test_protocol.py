"""Envelope wire format and the conversation state machine."""
from __future__ import annotations

import json
import random
from datetime import datetime, timezone

import pytest

from charlie.parser import parse
from charlie.policy import Agreement
from charlie.protocol import (
    CommitToKb,
    ConversationState,
    Envelope,
    InvariantViolation,
    MalformedEnvelope,
    PayloadSyntaxError,
    ProtocolViolation,
    RunTrustAdmission,
    RunValidationGates,
    TERMINAL_PHASES,
    decode,
    encode,
    mark_awaiting_user,
    mark_failed,
    mark_sent,
    on_receive,
    resume_from_user,
)
from charlie.provenance import generate_private_key, sign

UTC = timezone.utc
KEY = generate_private_key(b"\x55" * 32)
JUN = "https://jun.example/profile#me"
NIGEL = "https://nigel.example/profile#me"


def make_envelope(kind="task-request", **kw) -> Envelope:
    defaults = dict(
        message_id="m-1",
        conversation_id="c-1",
        sender=JUN,
        recipient=NIGEL,
        kind=kind,
        context="Jun seeks to schedule a meeting for next week.",
    )
    defaults.update(kw)
    return Envelope(**defaults)


def signed_payload() -> tuple[str, object]:
    ds = parse("<urn:ev:1> <urn:p:starts> '2024-11-11T09:00:00Z' .", "turtle", "")
    record = sign(ds, KEY, JUN, "urn:key:1", datetime(2024, 11, 4, tzinfo=UTC))
    from charlie.serializer import serialize

    return serialize(ds, "trig"), record


# --- encode/decode ------------------------------------------------------------


def test_minimal_task_request_round_trip():
    env = make_envelope()
    data = encode(env)
    obj = json.loads(data)
    assert obj["from"] == JUN and obj["to"] == NIGEL
    assert obj["payload"] == "" and obj["policies"] == "" and obj["provenance"] is None
    assert decode(data) == env


def test_full_proposal_round_trip():
    payload, record = signed_payload()
    env = make_envelope(
        kind="proposal",
        payload=payload,
        provenance=record,
        agreements=(Agreement("urn:pol:1", NIGEL, "ab" * 32, "2024-11-04T08:00:00Z"),),
        in_reply_to="m-0",
    )
    assert decode(encode(env)) == env


def test_payload_without_provenance_rejected():
    env = make_envelope(payload="<urn:s:1> <urn:p:1> <urn:o:1> .\n")
    with pytest.raises(InvariantViolation):
        encode(env)


def test_accept_requires_in_reply_to():
    env = make_envelope(kind="accept")
    with pytest.raises(InvariantViolation):
        encode(env)


def test_decode_missing_from():
    data = json.loads(encode(make_envelope()))
    del data["from"]
    with pytest.raises(MalformedEnvelope):
        decode(json.dumps(data).encode())


def test_decode_bad_payload_syntax():
    data = json.loads(encode(make_envelope()))
    data["payload"] = "<broken"
    data["provenance"] = {
        "signer": JUN,
        "keyId": "urn:key:1",
        "algorithm": "ed25519-rdfc-sha256",
        "canonicalHash": "00",
        "signature": "AA==",
        "issuedAt": "2024-11-04T08:00:00Z",
    }
    with pytest.raises(PayloadSyntaxError):
        decode(json.dumps(data).encode())


def test_decode_rejects_unknown_kind():
    data = json.loads(encode(make_envelope()))
    data["kind"] = "greeting"
    with pytest.raises(MalformedEnvelope):
        decode(json.dumps(data).encode())


def test_decode_rejects_non_json():
    with pytest.raises(MalformedEnvelope):
        decode(b"\xff\xfe not json")


# --- state machine ------------------------------------------------------------


def test_responder_receives_task_request():
    state = ConversationState("c-1", "responder")
    env = make_envelope()
    state2, actions = on_receive(state, env)
    assert state2.phase == "request-received"
    assert state2.transcript == ("m-1",)
    assert actions == [RunTrustAdmission(env)]


def test_initiator_receives_proposal_then_gates():
    state = ConversationState("c-1", "initiator", phase="request-sent")
    payload, record = signed_payload()
    env = make_envelope(kind="proposal", sender=NIGEL, recipient=JUN,
                        payload=payload, provenance=record, message_id="m-2")
    state2, actions = on_receive(state, env)
    assert state2.phase == "proposal-received"
    assert actions == [RunTrustAdmission(env), RunValidationGates(env)]


def test_out_of_order_proposal_raises():
    state = ConversationState("c-1", "initiator")  # created, nothing sent
    env = make_envelope(kind="proposal", message_id="m-9")
    with pytest.raises(ProtocolViolation):
        on_receive(state, env)


def test_accept_before_proposal_raises():
    state = ConversationState("c-1", "responder", phase="request-received")
    env = make_envelope(kind="accept", in_reply_to="m-1", message_id="m-3")
    with pytest.raises(ProtocolViolation):
        on_receive(state, env)


def test_replay_is_ignored():
    state = ConversationState("c-1", "responder")
    env = make_envelope()
    state2, _ = on_receive(state, env)
    state3, actions = on_receive(state2, env)
    assert state3 == state2 and actions == []


def test_responder_accept_commits():
    state = ConversationState("c-1", "responder", phase="proposal-sent",
                              proposal_rounds=1)
    env = make_envelope(kind="accept", sender=JUN, in_reply_to="m-2", message_id="m-3")
    state2, actions = on_receive(state, env)
    assert state2.phase == "accepted"
    assert actions == [CommitToKb(env)]


def test_one_counter_proposal_round():
    # responder: reject on round 1 allows a revision
    state = ConversationState("c-1", "responder", phase="proposal-sent", proposal_rounds=1)
    rej = make_envelope(kind="reject", sender=JUN, in_reply_to="m-2", message_id="m-3")
    state2, _ = on_receive(state, rej)
    assert state2.phase == "request-received"
    # after the revised proposal is sent and rejected again: failed
    state3 = mark_sent(state2, make_envelope(kind="proposal", sender=NIGEL, message_id="m-4"))
    assert state3.proposal_rounds == 2
    rej2 = make_envelope(kind="reject", sender=JUN, in_reply_to="m-4", message_id="m-5")
    state4, actions = on_receive(state3, rej2)
    assert state4.phase == "failed" and actions == []
    # initiator accepts a second proposal after rejecting the first
    init = ConversationState("c-1", "initiator", phase="rejected", proposal_rounds=1)
    payload, record = signed_payload()
    prop2 = make_envelope(kind="proposal", sender=NIGEL, payload=payload,
                          provenance=record, message_id="m-6")
    init2, actions = on_receive(init, prop2)
    assert init2.phase == "proposal-received" and init2.proposal_rounds == 2
    # a third proposal is a violation
    init3 = mark_sent(init2, make_envelope(kind="reject", in_reply_to="m-6", message_id="m-7"))
    prop3 = make_envelope(kind="proposal", sender=NIGEL, payload=payload,
                          provenance=record, message_id="m-8")
    with pytest.raises(ProtocolViolation):
        on_receive(init3, prop3)


def test_error_envelope_fails_conversation():
    state = ConversationState("c-1", "responder", phase="request-received")
    env = make_envelope(kind="error", message_id="m-9", context="protocol violation")
    state2, actions = on_receive(state, env)
    assert state2.phase == "failed" and actions == []


def test_awaiting_user_round_trip():
    state = ConversationState("c-1", "responder", phase="request-received")
    parked = mark_awaiting_user(state)
    assert parked.phase == "awaiting-user"
    resumed = resume_from_user(parked)
    assert resumed.phase == "request-received"
    with pytest.raises(ValueError):
        resume_from_user(resumed)


def test_termination_under_random_message_sequences():
    """Feeding arbitrary envelopes always lands in a terminal phase or keeps
    raising violations; no infinite non-terminal progress is possible."""
    rng = random.Random(13)
    payload, record = signed_payload()
    for _ in range(200):
        role = rng.choice(["initiator", "responder"])
        state = ConversationState("c-1", role)
        if role == "initiator":
            state = mark_sent(state, make_envelope(message_id="m-0"))
        transitions = 0
        for i in range(12):
            kind = rng.choice(["task-request", "proposal", "accept", "reject", "error"])
            env = make_envelope(
                kind=kind,
                message_id=f"m-{i + 1}",
                payload=payload if kind == "proposal" else "",
                provenance=record if kind == "proposal" else None,
                in_reply_to="m-0" if kind in ("accept", "reject") else "",
            )
            try:
                state, _ = on_receive(state, env)
                transitions += 1
            except ProtocolViolation:
                state = mark_failed(state)  # what the runtime does
            if state.phase in TERMINAL_PHASES and state.phase != "rejected":
                break
        assert transitions <= 6  # bounded progress: no livelock through phases
