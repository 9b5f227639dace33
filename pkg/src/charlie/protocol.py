"""Wire format and conversation state machine for agent negotiation.

Envelopes are UTF-8 JSON with fixed camelCase keys.  The natural-language
``context`` is advisory and never becomes ground truth; structured content
travels as TriG in ``payload``/``policies``, and any non-empty payload
must carry provenance.

The state machine is pure: `on_receive` returns the next state plus a list
of Action descriptions the runtime executes (run trust admission, raise an
approval, send an envelope, commit to the KB).  Out-of-order messages
raise ProtocolViolation and the runtime moves the conversation to failed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

from .parser import RdfSyntaxError, parse
from .policy import Agreement
from .provenance import ProvenanceRecord

KINDS = ("task-request", "proposal", "accept", "reject", "error")
PHASES = (
    "created",
    "request-sent",
    "request-received",
    "awaiting-user",
    "proposal-sent",
    "proposal-received",
    "accepted",
    "rejected",
    "failed",
)
TERMINAL_PHASES = ("accepted", "rejected", "failed")

# One counter-proposal round: a rejected responder may revise once.
MAX_PROPOSAL_ROUNDS = 2


class InvariantViolation(Exception):
    pass


class MalformedEnvelope(Exception):
    pass


class PayloadSyntaxError(Exception):
    pass


class ProtocolViolation(Exception):
    def __init__(self, phase: str, kind: str) -> None:
        super().__init__(f"envelope kind {kind!r} not acceptable in phase {phase!r}")
        self.phase = phase
        self.kind = kind


@dataclass(frozen=True)
class Envelope:
    message_id: str
    conversation_id: str
    sender: str  # wire key "from"
    recipient: str  # wire key "to"
    kind: str
    context: str = ""
    payload: str = ""  # TriG
    policies: str = ""  # TriG
    provenance: Optional[ProvenanceRecord] = None
    agreements: tuple[Agreement, ...] = ()
    in_reply_to: str = ""

    def check(self) -> None:
        if self.kind not in KINDS:
            raise InvariantViolation(f"unknown envelope kind {self.kind!r}")
        if not self.message_id or not self.conversation_id:
            raise InvariantViolation("message-id and conversation-id are required")
        if not self.sender or not self.recipient:
            raise InvariantViolation("from and to are required")
        if self.payload and self.provenance is None:
            raise InvariantViolation("non-empty payload requires provenance")
        if self.kind in ("accept", "reject") and not self.in_reply_to:
            raise InvariantViolation(f"{self.kind} must carry in-reply-to")


def encode(env: Envelope) -> bytes:
    env.check()
    data = {
        "messageId": env.message_id,
        "conversationId": env.conversation_id,
        "from": env.sender,
        "to": env.recipient,
        "kind": env.kind,
        "context": env.context,
        "payload": env.payload,
        "policies": env.policies,
        "provenance": env.provenance.to_json() if env.provenance else None,
        "agreements": [a.to_json() for a in env.agreements],
        "inReplyTo": env.in_reply_to,
    }
    return json.dumps(data, sort_keys=True).encode("utf-8")


_REQUIRED_KEYS = ("messageId", "conversationId", "from", "to", "kind")


def decode(data: bytes) -> Envelope:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedEnvelope(str(exc)) from None
    if not isinstance(obj, dict):
        raise MalformedEnvelope("envelope must be a JSON object")
    for key in _REQUIRED_KEYS:
        if not isinstance(obj.get(key), str) or not obj[key]:
            raise MalformedEnvelope(f"missing or invalid {key!r}")
    provenance = None
    if obj.get("provenance") is not None:
        try:
            provenance = ProvenanceRecord.from_json(obj["provenance"])
        except (KeyError, TypeError) as exc:
            raise MalformedEnvelope(f"bad provenance: {exc}") from None
    try:
        agreements = tuple(Agreement.from_json(a) for a in obj.get("agreements") or ())
    except (KeyError, TypeError) as exc:
        raise MalformedEnvelope(f"bad agreements: {exc}") from None
    env = Envelope(
        message_id=obj["messageId"],
        conversation_id=obj["conversationId"],
        sender=obj["from"],
        recipient=obj["to"],
        kind=obj["kind"],
        context=obj.get("context") or "",
        payload=obj.get("payload") or "",
        policies=obj.get("policies") or "",
        provenance=provenance,
        agreements=agreements,
        in_reply_to=obj.get("inReplyTo") or "",
    )
    for slot in ("payload", "policies"):
        text = getattr(env, slot)
        if text:
            try:
                parse(text, "trig", "")
            except RdfSyntaxError as exc:
                raise PayloadSyntaxError(f"{slot}: {exc}") from None
    try:
        env.check()
    except InvariantViolation as exc:
        raise MalformedEnvelope(str(exc)) from None
    return env


def payload_dataset(env: Envelope):
    return parse(env.payload, "trig", "") if env.payload else None


def policies_dataset(env: Envelope):
    return parse(env.policies, "trig", "") if env.policies else None


# ---------------------------------------------------------------------------
# Conversation state machine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConversationState:
    conversation_id: str
    role: str  # initiator | responder
    phase: str = "created"
    transcript: tuple[str, ...] = ()
    proposal_rounds: int = 0
    parked_phase: Optional[str] = None


# Actions are descriptions; the runtime interprets them.


@dataclass(frozen=True)
class RunTrustAdmission:
    envelope: Envelope


@dataclass(frozen=True)
class RunValidationGates:
    envelope: Envelope


@dataclass(frozen=True)
class RaiseApproval:
    kind: str
    envelope: Optional[Envelope] = None


@dataclass(frozen=True)
class SendEnvelope:
    kind: str
    in_reply_to: str = ""


@dataclass(frozen=True)
class CommitToKb:
    envelope: Envelope


Action = object


def _record(state: ConversationState, env: Envelope, **changes) -> ConversationState:
    return replace(state, transcript=state.transcript + (env.message_id,), **changes)


def on_receive(state: ConversationState, env: Envelope) -> tuple[ConversationState, list[Action]]:
    """Pure transition for an inbound envelope.

    Duplicate message-ids are replay-safe no-ops.  Raises ProtocolViolation
    for out-of-order kinds; the runtime then fails the conversation.
    """
    if env.conversation_id != state.conversation_id:
        raise ValueError("envelope belongs to a different conversation")
    if env.message_id in state.transcript:
        return state, []
    if env.kind == "error":
        return _record(state, env, phase="failed"), []

    key = (state.role, state.phase, env.kind)
    if key == ("responder", "created", "task-request"):
        next_state = _record(state, env, phase="request-received")
        return next_state, [RunTrustAdmission(env)]
    if key == ("initiator", "request-sent", "proposal") or (
        state.role == "initiator"
        and state.phase == "rejected"
        and env.kind == "proposal"
        and state.proposal_rounds < MAX_PROPOSAL_ROUNDS
    ):
        next_state = _record(
            state,
            env,
            phase="proposal-received",
            proposal_rounds=state.proposal_rounds + 1,
        )
        return next_state, [RunTrustAdmission(env), RunValidationGates(env)]
    if key == ("responder", "proposal-sent", "accept"):
        return _record(state, env, phase="accepted"), [CommitToKb(env)]
    if key == ("responder", "proposal-sent", "reject"):
        if state.proposal_rounds < MAX_PROPOSAL_ROUNDS:
            # one revision allowed: the runtime reproposes
            return _record(state, env, phase="request-received"), []
        return _record(state, env, phase="failed"), []
    if key == ("initiator", "request-sent", "reject"):
        # responder refused the task (e.g. trust or obligations declined)
        return _record(state, env, phase="rejected"), []
    raise ProtocolViolation(state.phase, env.kind)


# Runtime-driven transitions (still pure).


def mark_sent(state: ConversationState, env: Envelope) -> ConversationState:
    phase = {
        "task-request": "request-sent",
        "proposal": "proposal-sent",
        "accept": "accepted",
        "reject": "rejected",
        "error": "failed",
    }[env.kind]
    rounds = state.proposal_rounds + (1 if env.kind == "proposal" else 0)
    return _record(state, env, phase=phase, proposal_rounds=rounds)


def mark_awaiting_user(state: ConversationState) -> ConversationState:
    return replace(state, phase="awaiting-user", parked_phase=state.phase)


def resume_from_user(state: ConversationState) -> ConversationState:
    if state.phase != "awaiting-user" or state.parked_phase is None:
        raise ValueError("conversation is not awaiting the user")
    return replace(state, phase=state.parked_phase, parked_phase=None)


def mark_failed(state: ConversationState) -> ConversationState:
    return replace(state, phase="failed")
