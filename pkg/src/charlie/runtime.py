"""The agent: KB, approval queue, negotiation orchestration.

All state mutation funnels through a single-writer command queue: HTTP
handlers, user answers, and inbound envelopes submit closures that one
executor thread applies in order.  Outbound envelopes are posted from
separate sender threads so a slow counterparty never stalls the executor.

Human gating: permission grants, trust assertions, and meeting
confirmations enter the KB only through a recorded user answer or a
pre-existing stored decision (autoConfirm, fixture policies).  The
natural-language context of an envelope is never written to any
ground-truth graph.
"""
from __future__ import annotations

import base64
import json
import logging
import queue
import random
import threading
import urllib.error
import urllib.request
import uuid
from concurrent.futures import Future
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Optional

from . import protocol
from .config import AgentConfig
from .discovery import (
    FetchError,
    MissingAgentEndpoint,
    ProfileParseError,
    ProfileResolver,
    WebIDProfile,
    document_iri,
)
from .gates import conflict_rules, is_confirmed, meeting_conflicts
from .interpreter import (
    NoCounterpartyFound,
    NoFreeSlot,
    ProposedAction,
    RemoteInterpreter,
    ScriptedInterpreter,
    busy_intervals,
    next_week_window,
)
from .kb import KnowledgeBase
from .policy import (
    AccessRequest,
    Agreement,
    Obligation,
    PolicyRule,
    PolicyStore,
    agree,
    applicable_policies,
    evaluate,
    policy_hash,
)
from .protocol import (
    CommitToKb,
    ConversationState,
    Envelope,
    ProtocolViolation,
    RunTrustAdmission,
    RunValidationGates,
    decode,
    encode,
    mark_awaiting_user,
    mark_failed,
    mark_sent,
    on_receive,
    payload_dataset,
    policies_dataset,
    resume_from_user,
)
from .provenance import format_timestamp, load_key_file, public_key_bytes, sign, verify
from .rules import Rule, load_rules
from .serializer import serialize
from .terms import Dataset, Quad, Term, iri, literal
from .trust import TrustStore, admit, record_user_answer
from .vocab import (
    BELIEF_PREFIX,
    CV_CANONICAL_HASH,
    CV_ISSUED_AT,
    CV_SIGNER,
    DEFAULT_PURPOSE,
    META_GRAPH,
)

log = logging.getLogger("charlie.agent")

SEND_TIMEOUT = 10.0


class UnknownApproval(Exception):
    pass


class AlreadyAnswered(Exception):
    pass


@dataclass
class PendingApproval:
    id: str
    kind: str  # grant-permission | confirm-trust | confirm-meeting | pick-counterparty
    question: str
    options: dict
    conversation_id: str
    created_at: str
    answer: Optional[str] = None
    resume: Optional[Callable[[str], None]] = None  # runs on the executor

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "question": self.question,
            "options": self.options,
            "conversationId": self.conversation_id,
            "createdAt": self.created_at,
            "answer": self.answer,
        }


@dataclass
class Conversation:
    state: ConversationState
    counterparty: str
    prompt: str = ""
    context: str = ""
    envelopes: dict[str, Envelope] = field(default_factory=dict)
    shared_graphs: list[str] = field(default_factory=list)
    obligated_policy_uids: list[str] = field(default_factory=list)
    pending_agreements: tuple[Agreement, ...] = ()
    proposed: Optional[ProposedAction] = None
    rejected_slots: list[tuple[datetime, datetime]] = field(default_factory=list)
    calendar_graph: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.state.conversation_id,
            "role": self.state.role,
            "phase": self.state.phase,
            "counterparty": self.counterparty,
            "transcript": [
                json.loads(encode(self.envelopes[mid]))
                for mid in self.state.transcript
                if mid in self.envelopes
            ],
        }


def default_fetcher(doc_iri: str) -> tuple[int, bytes]:
    try:
        with urllib.request.urlopen(doc_iri, timeout=SEND_TIMEOUT) as response:
            return response.status, response.read()
    except urllib.error.HTTPError as exc:
        return exc.code, b""


class Agent:
    def __init__(
        self,
        config: AgentConfig,
        fetcher: Callable[[str], tuple[int, bytes]] = default_fetcher,
        interpreter=None,
    ) -> None:
        self.config = config
        self.key = load_key_file(config.key_file)
        self.key_id = document_iri(config.webid) + "#key-1"
        self.kb = KnowledgeBase.load(config.kb_file)
        self.policy_store = PolicyStore.from_dataset(self.kb.dataset)
        self.trust_store = TrustStore.from_dataset(self.kb.dataset)
        self.resolver = ProfileResolver(fetcher)
        self.clock = config.clock_fn()
        if interpreter is not None:
            self.interpreter = interpreter
        elif config.interpreter_kind == "remote":
            import os

            api_key = os.environ.get(config.interpreter_api_key_env or "", "")
            self.interpreter = RemoteInterpreter(config.interpreter_url, api_key)
        else:
            self.interpreter = ScriptedInterpreter()
        self.gate_rules: list[Rule] = (
            load_rules(config.rules_file) if config.rules_file else conflict_rules()
        )
        self._rng = random.Random(config.uuid_seed) if config.uuid_seed is not None else None

        self.conversations: dict[str, Conversation] = {}
        self.approvals: dict[str, PendingApproval] = {}

        self._commands: "queue.Queue[tuple[Callable, Future]]" = queue.Queue()
        self._executor = threading.Thread(target=self._run, daemon=True)
        self._running = False
        self._subscribers: list[queue.Queue] = []
        self._subscribers_lock = threading.Lock()

    # --- lifecycle -------------------------------------------------------------

    def start(self) -> None:
        self._running = True
        self._executor.start()

    def close(self) -> None:
        if self._running:
            self._running = False
            self._commands.put((None, None))  # type: ignore[arg-type]
            self._executor.join(timeout=5)

    def _run(self) -> None:
        while True:
            fn, future = self._commands.get()
            if fn is None:
                return
            try:
                result = fn()
                if future is not None:
                    future.set_result(result)
            except Exception as exc:  # surface to the waiting caller
                if future is not None:
                    future.set_exception(exc)
                else:
                    log.exception("command failed: %s", exc)

    def submit(self, fn: Callable) -> Future:
        future: Future = Future()
        self._commands.put((fn, future))
        return future

    def run_sync(self, fn: Callable, timeout: float = SEND_TIMEOUT):
        return self.submit(fn).result(timeout=timeout)

    # --- identity ---------------------------------------------------------------

    @property
    def webid(self) -> str:
        return self.config.webid

    def endpoint(self) -> str:
        return f"http://{self.config.listen_host}:{self.config.listen_port}"

    def profile_turtle(self) -> str:
        """Self-hosted WebID profile document (read-only; no queue involved)."""
        from .serializer import term_to_nquads

        key_b64 = base64.b64encode(public_key_bytes(self.key)).decode("ascii")
        name = term_to_nquads(literal(self.config.display_name))
        return (
            "@prefix foaf: <http://xmlns.com/foaf/0.1/> .\n"
            "@prefix cv: <urn:charlie:vocab:> .\n\n"
            f"<#me> foaf:name {name} ;\n"
            f"    cv:agentEndpoint <{self.endpoint()}> ;\n"
            "    cv:publicKey <#key-1> .\n\n"
            f'<#key-1> cv:keyValue "{key_b64}" .\n'
        )

    def _new_id(self) -> str:
        if self._rng is not None:
            return str(uuid.UUID(int=self._rng.getrandbits(128), version=4))
        return str(uuid.uuid4())

    # --- events ------------------------------------------------------------------

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._subscribers_lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._subscribers_lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _emit(self, event: dict) -> None:
        with self._subscribers_lock:
            targets = list(self._subscribers)
        for q in targets:
            q.put(event)

    def _conversation_updated(self, conv: Conversation) -> None:
        self._emit(
            {
                "type": "conversation-updated",
                "conversationId": conv.state.conversation_id,
                "phase": conv.state.phase,
            }
        )

    # --- public API (thread-safe wrappers) -----------------------------------------

    def chat(self, prompt: str) -> dict:
        return self.run_sync(lambda: self._handle_user_prompt(prompt))

    def inbox(self, raw: bytes) -> tuple[int, dict]:
        """Decode and queue an inbound envelope; 202 means queued+processed."""
        try:
            env = decode(raw)
        except (protocol.MalformedEnvelope, protocol.PayloadSyntaxError) as exc:
            return 400, {"error": str(exc)}
        conflict = self.run_sync(lambda: self._inbound_preflight(env))
        if conflict is not None:
            return 409, {"error": conflict}
        self.run_sync(lambda: self._handle_inbound(env))
        return 202, {"status": "queued"}

    def list_pending(self) -> list[dict]:
        return self.run_sync(
            lambda: [a.to_json() for a in self.approvals.values() if a.answer is None]
        )

    def list_conversations(self) -> list[dict]:
        def snapshot():
            return [
                {
                    "id": c.state.conversation_id,
                    "role": c.state.role,
                    "phase": c.state.phase,
                    "counterparty": c.counterparty,
                }
                for c in self.conversations.values()
            ]

        return self.run_sync(snapshot)

    def get_conversation(self, conversation_id: str) -> Optional[dict]:
        def snapshot():
            conv = self.conversations.get(conversation_id)
            return conv.to_json() if conv else None

        return self.run_sync(snapshot)

    def answer(self, approval_id: str, choice: str) -> dict:
        return self.run_sync(lambda: self._answer_approval(approval_id, choice))

    # --- executor-side: prompt flow ---------------------------------------------

    def _known_profiles(self) -> list[WebIDProfile]:
        profiles = []
        for contact in self.config.contacts:
            try:
                profiles.append(self.resolver.fetch_profile(contact))
            except (FetchError, ProfileParseError, MissingAgentEndpoint) as exc:
                log.warning("contact %s unavailable: %s", contact, exc)
        return profiles

    def _handle_user_prompt(self, prompt: str) -> dict:
        known = self._known_profiles()
        try:
            counterparties = self.interpreter.identify_counterparties(prompt, known)
            counterparty = next(
                (w for w in counterparties if w != self.webid), None
            )
            if counterparty is None:
                raise NoCounterpartyFound(prompt)
        except NoCounterpartyFound:
            approval = self._raise_approval(
                kind="pick-counterparty",
                question=f"Who should I negotiate with for: {prompt!r}?",
                options={
                    "candidates": [
                        {"webid": p.webid, "name": p.name}
                        for p in known
                        if p.webid != self.webid
                    ]
                },
                conversation_id="",
                resume=lambda choice: self._start_conversation(prompt, choice),
            )
            return {"approvalId": approval.id}
        return self._start_conversation(prompt, counterparty)

    def _start_conversation(self, prompt: str, counterparty: str) -> dict:
        conversation_id = self._new_id()
        conv = Conversation(
            state=ConversationState(conversation_id, "initiator"),
            counterparty=counterparty,
            prompt=prompt,
        )
        self.conversations[conversation_id] = conv
        graphs = self.interpreter.select_data_subset(
            prompt, self.kb.described_user_graphs()
        )
        conv.shared_graphs = graphs
        conv.calendar_graph = graphs[0] if graphs else ""

        applicable_policies(self.policy_store, graphs)  # the reasoning step
        now = self.clock()
        denied = [
            g
            for g in graphs
            if not evaluate(
                self.policy_store,
                AccessRequest(counterparty, "read", g, DEFAULT_PURPOSE, now),
            )
        ]
        if denied:
            profile_name = self._display_name_of(counterparty)
            obligations = self._default_obligations()
            approval = self._raise_approval(
                kind="grant-permission",
                question=(
                    f"Share {', '.join(denied)} with {profile_name} for scheduling?"
                ),
                options={
                    "graphs": denied,
                    "action": "read",
                    "assignee": counterparty,
                    "assigneeName": profile_name,
                    "obligations": [
                        {"kind": o.kind, "value": o.value} for o in obligations
                    ],
                },
                conversation_id=conversation_id,
                resume=lambda choice: self._permission_answered(
                    conversation_id, denied, choice
                ),
            )
            return {"approvalId": approval.id}
        return self._send_task_request(conv)

    def _default_obligations(self) -> tuple[Obligation, ...]:
        if self.config.share_obligation:
            return (Obligation("delete-after", self.config.share_obligation),)
        return ()

    def _permission_answered(self, conversation_id: str, graphs: list[str], choice: str) -> None:
        conv = self.conversations[conversation_id]
        if choice != "allow":
            conv.state = mark_failed(conv.state)
            self._conversation_updated(conv)
            return
        for g in graphs:
            policy = PolicyRule(
                uid=f"urn:charlie:policy:{self._new_id()}",
                rule_kind="permission",
                action="read",
                target=g,
                assignee=conv.counterparty,
                obligations=self._default_obligations(),
            )
            self.policy_store.upsert(policy)
        self._sync_stores_and_persist()
        self._send_task_request(conv)

    def _send_task_request(self, conv: Conversation) -> dict:
        counterparty = conv.counterparty
        try:
            profile = self.resolver.fetch_profile(counterparty)
        except (FetchError, ProfileParseError, MissingAgentEndpoint) as exc:
            conv.state = mark_failed(conv.state)
            self._conversation_updated(conv)
            return {
                "conversationId": conv.state.conversation_id,
                "error": f"counterparty unreachable: {exc}",
            }
        context = self.interpreter.compose_context(
            conv.prompt, self.config.display_name, profile.name
        )
        conv.context = context

        shared = Dataset()
        for g in conv.shared_graphs:
            shared = shared.union(self.kb.graph(g))
        policies = applicable_policies(self.policy_store, conv.shared_graphs)
        conv.obligated_policy_uids = [p.uid for p in policies if p.obligations]
        policy_ds = Dataset()
        for p in policies:
            policy_ds = policy_ds.union(self.policy_store.policy_dataset(p.uid))

        payload_text = serialize(shared, "trig") if len(shared) else ""
        record = (
            sign(shared, self.key, self.webid, self.key_id, self.clock())
            if payload_text
            else None
        )
        env = Envelope(
            message_id=self._new_id(),
            conversation_id=conv.state.conversation_id,
            sender=self.webid,
            recipient=counterparty,
            kind="task-request",
            context=context,
            payload=payload_text,
            policies=serialize(policy_ds, "trig") if len(policy_ds) else "",
            provenance=record,
        )
        self._dispatch(conv, env, profile.agent_endpoint)
        return {"conversationId": conv.state.conversation_id}

    # --- executor-side: inbound flow ------------------------------------------------

    def _inbound_preflight(self, env: Envelope) -> Optional[str]:
        known = env.conversation_id in self.conversations
        if env.kind == "task-request" and known:
            return "conversation already exists"
        if env.kind != "task-request" and not known:
            return "unknown conversation"
        return None

    def _handle_inbound(self, env: Envelope) -> None:
        conv = self.conversations.get(env.conversation_id)
        if conv is None:
            conv = Conversation(
                state=ConversationState(env.conversation_id, "responder"),
                counterparty=env.sender,
            )
            self.conversations[env.conversation_id] = conv
        try:
            conv.state, actions = on_receive(conv.state, env)
        except ProtocolViolation as exc:
            conv.state = mark_failed(conv.state)
            self._conversation_updated(conv)
            self._send_error(conv, env, str(exc))
            return
        conv.envelopes[env.message_id] = env
        self._conversation_updated(conv)

        if (
            conv.state.role == "responder"
            and env.kind == "reject"
            and conv.state.phase == "request-received"
        ):
            # one counter-proposal round: treat the rejected slot as busy
            if conv.proposed is not None:
                conv.rejected_slots.append((conv.proposed.start, conv.proposed.end))
            self._produce_proposal(conv)
            return

        for action in actions:
            if isinstance(action, RunTrustAdmission):
                if not self._run_admission(conv, action.envelope):
                    return  # parked or rejected
                if conv.state.role == "responder" and env.kind == "task-request":
                    self._produce_proposal(conv)
            elif isinstance(action, RunValidationGates):
                self._run_gates(conv, action.envelope)
            elif isinstance(action, CommitToKb):
                if conv.proposed is not None:
                    self._commit_meeting(conv, conv.proposed.payload)

    def _run_admission(self, conv: Conversation, env: Envelope) -> bool:
        """True when processing may continue; False when parked or rejected."""
        payload = payload_dataset(env)
        if payload is None:
            return True  # context-only envelope: nothing to admit
        try:
            profile = self.resolver.fetch_profile(env.sender)
        except (FetchError, ProfileParseError, MissingAgentEndpoint):
            self._reject(conv, env, "sender profile unavailable")
            return False
        decision = admit(payload, env.provenance, profile, self.trust_store)
        if decision.kind == "reject":
            self._reject(conv, env, f"admission failed: {decision.reason}")
            return False
        if decision.kind == "ask-user":
            conv.state = mark_awaiting_user(conv.state)
            self._conversation_updated(conv)
            topics = decision.topics
            self._raise_approval(
                kind="confirm-trust",
                question=decision.question,
                options={
                    "source": profile.webid,
                    "sourceName": profile.name,
                    "topics": list(topics),
                },
                conversation_id=conv.state.conversation_id,
                resume=lambda choice: self._trust_answered(
                    conv.state.conversation_id, env, topics, choice
                ),
            )
            return False
        self._believe(conv, env, payload)
        return True

    def _believe(self, conv: Conversation, env: Envelope, payload: Dataset) -> None:
        belief_graph = BELIEF_PREFIX + env.sender
        merged = self.kb.graph(belief_graph).union(
            Dataset(Quad(q.subject, q.predicate, q.object) for q in payload)
        )
        self.kb.replace_graph(belief_graph, merged)
        meta = iri(META_GRAPH)
        subject = iri(belief_graph)
        record = env.provenance
        stale = [
            q
            for q in self.kb.dataset.match(subject, graph=meta)
            if q.predicate.value in (CV_SIGNER, CV_CANONICAL_HASH, CV_ISSUED_AT)
        ]
        self.kb.dataset = self.kb.dataset.without(stale)
        self.kb.add_quads(
            [
                Quad(subject, iri(CV_SIGNER), iri(record.signer), meta),
                Quad(subject, iri(CV_CANONICAL_HASH), literal(record.canonical_hash), meta),
                Quad(subject, iri(CV_ISSUED_AT), literal(record.issued_at), meta),
            ]
        )
        # agree to any obligations attached to the shipment
        attached = policies_dataset(env)
        if attached is not None:
            store = PolicyStore.from_dataset(attached)
            agreements = {
                (a.policy_uid, a.policy_hash): a for a in conv.pending_agreements
            }
            for policy in store.policies():
                if policy.obligations:
                    agreement = agree(policy, self.webid, self.clock())
                    agreements.setdefault(
                        (agreement.policy_uid, agreement.policy_hash), agreement
                    )
            conv.pending_agreements = tuple(agreements.values())
        self._sync_stores_and_persist()

    def _retract_belief(self, sender: str, payload: Dataset) -> None:
        belief_graph = BELIEF_PREFIX + sender
        remaining = self.kb.graph(belief_graph).without(
            Quad(q.subject, q.predicate, q.object, iri(belief_graph)) for q in payload
        )
        self.kb.replace_graph(belief_graph, remaining)
        self._sync_stores_and_persist()

    def _trust_answered(
        self, conversation_id: str, env: Envelope, topics: tuple[str, ...], choice: str
    ) -> None:
        conv = self.conversations[conversation_id]
        granted = choice == "grant"
        for topic in topics:
            record_user_answer(self.trust_store, env.sender, topic, granted)
        self._sync_stores_and_persist()
        conv.state = resume_from_user(conv.state)
        if not granted:
            self._reject(conv, env, "trust refused")
            return
        if self._run_admission(conv, env):
            if conv.state.role == "responder" and env.kind == "task-request":
                self._produce_proposal(conv)
            elif conv.state.role == "initiator" and env.kind == "proposal":
                self._run_gates(conv, env)

    def _produce_proposal(self, conv: Conversation) -> None:
        request = next(
            (
                conv.envelopes[mid]
                for mid in reversed(conv.state.transcript)
                if mid in conv.envelopes
                and conv.envelopes[mid].kind == "task-request"
            ),
            None,
        )
        context = request.context if request else conv.context
        own_graphs = self.interpreter.select_data_subset(
            context, self.kb.described_user_graphs()
        )
        conv.calendar_graph = own_graphs[0] if own_graphs else ""
        ground = [self.kb.graph(g) for g in self.kb.belief_graphs()]
        ground += [self.kb.graph(g) for g in own_graphs]
        if conv.rejected_slots:
            ground.append(_slots_as_busy(conv.rejected_slots))
        window = next_week_window(self.clock())
        attendees = [conv.counterparty, self.webid]
        try:
            action = self.interpreter.propose_action(
                context, ground, window, self.clock(), attendees
            )
        except NoFreeSlot:
            self._reject(conv, request, "no free slot in the requested window")
            return
        scratch = Dataset().union(*ground, action.payload)
        if meeting_conflicts(scratch, action.meeting, self.gate_rules):
            self._reject(conv, request, "proposal conflicts with existing events")
            return
        conv.proposed = action

        if not self.config.auto_confirm:
            conv.state = mark_awaiting_user(conv.state)
            self._conversation_updated(conv)
            self._raise_approval(
                kind="confirm-meeting",
                question=(
                    f"Propose meeting {action.start:%Y-%m-%d %H:%M}"
                    f"-{action.end:%H:%M} UTC?"
                ),
                options=_meeting_options(action, attendees),
                conversation_id=conv.state.conversation_id,
                resume=lambda choice: self._meeting_confirmed(
                    conv.state.conversation_id, request, choice
                ),
            )
            return
        self._check_confirmation_and_send(conv, request)

    def _meeting_confirmed(self, conversation_id: str, request: Envelope, choice: str) -> None:
        conv = self.conversations[conversation_id]
        conv.state = resume_from_user(conv.state)
        if choice != "approve":
            self._reject(conv, request, "meeting declined by user")
            return
        self._check_confirmation_and_send(conv, request)

    def _check_confirmation_and_send(self, conv: Conversation, request: Optional[Envelope]) -> None:
        action = conv.proposed
        assert action is not None
        if not is_confirmed(action.payload, action.meeting, iri(self.webid)):
            self._reject(conv, request, "confirmation gate failed")
            return
        record = sign(action.payload, self.key, self.webid, self.key_id, self.clock())
        env = Envelope(
            message_id=self._new_id(),
            conversation_id=conv.state.conversation_id,
            sender=self.webid,
            recipient=conv.counterparty,
            kind="proposal",
            context=action.rationale,
            payload=serialize(action.payload, "trig"),
            provenance=record,
            agreements=conv.pending_agreements,
            in_reply_to=request.message_id if request else "",
        )
        self._dispatch_to_counterparty(conv, env)

    def _run_gates(self, conv: Conversation, env: Envelope) -> None:
        payload = payload_dataset(env)
        failure = None
        if payload is None:
            failure = "proposal carries no payload"
        if failure is None:
            meeting = _meeting_term(payload)
            ground = [self.kb.graph(g) for g in self.kb.user_graphs()]
            ground += [self.kb.graph(g) for g in self.kb.belief_graphs()]
            scratch = Dataset().union(*ground, payload) if ground else payload
            if meeting is None:
                failure = "proposal describes no event"
            elif meeting_conflicts(scratch, meeting, self.gate_rules):
                failure = "conflicting events"
        if failure is None:
            try:
                profile = self.resolver.fetch_profile(env.sender)
                key = next(
                    (
                        k
                        for key_id, k in profile.public_keys
                        if key_id == env.provenance.key_id
                    ),
                    None,
                )
                if key is None or not verify(payload, env.provenance, key).accepted:
                    failure = "provenance re-verification failed"
            except (FetchError, ProfileParseError, MissingAgentEndpoint):
                failure = "sender profile unavailable"
        if failure is None:
            agreed = {
                (a.policy_uid, a.policy_hash)
                for a in env.agreements
                if a.agent == conv.counterparty
            }
            for uid in conv.obligated_policy_uids:
                policy = self.policy_store.get(uid)
                if policy is None or (uid, policy_hash(policy)) not in agreed:
                    failure = f"obligations of {uid} not agreed"
                    break
        if failure is not None:
            if payload is not None:
                self._retract_belief(env.sender, payload)
            self._reject(conv, env, failure)
            return

        meeting = _meeting_action_from_payload(payload)
        conv.proposed = meeting
        if not self.config.auto_confirm:
            conv.state = mark_awaiting_user(conv.state)
            self._conversation_updated(conv)
            self._raise_approval(
                kind="confirm-meeting",
                question=(
                    f"Accept meeting {meeting.start:%Y-%m-%d %H:%M}"
                    f"-{meeting.end:%H:%M} UTC?"
                ),
                options=_meeting_options(meeting, [self.webid, conv.counterparty]),
                conversation_id=conv.state.conversation_id,
                resume=lambda choice: self._accept_confirmed(
                    conv.state.conversation_id, env, choice
                ),
            )
            return
        self._accept(conv, env)

    def _accept_confirmed(self, conversation_id: str, env: Envelope, choice: str) -> None:
        conv = self.conversations[conversation_id]
        conv.state = resume_from_user(conv.state)
        if choice != "approve":
            self._reject(conv, env, "meeting declined by user")
            return
        self._accept(conv, env)

    def _accept(self, conv: Conversation, env: Envelope) -> None:
        if not is_confirmed(conv.proposed.payload, conv.proposed.meeting, iri(self.webid)):
            self._reject(conv, env, "confirmation gate failed")
            return
        accept_env = Envelope(
            message_id=self._new_id(),
            conversation_id=conv.state.conversation_id,
            sender=self.webid,
            recipient=conv.counterparty,
            kind="accept",
            context="meeting confirmed",
            agreements=conv.pending_agreements,
            in_reply_to=env.message_id,
        )
        self._commit_meeting(conv, conv.proposed.payload)
        self._dispatch_to_counterparty(conv, accept_env)

    def _commit_meeting(self, conv: Conversation, payload: Dataset) -> None:
        graph = conv.calendar_graph or (
            self.kb.user_graphs()[0] if self.kb.user_graphs() else "urn:charlie:data:calendar"
        )
        self.kb.add_quads(
            Quad(q.subject, q.predicate, q.object, iri(graph)) for q in payload
        )
        self._sync_stores_and_persist()
        self._conversation_updated(conv)

    # --- approvals ---------------------------------------------------------------

    def _raise_approval(
        self,
        kind: str,
        question: str,
        options: dict,
        conversation_id: str,
        resume: Callable[[str], None],
    ) -> PendingApproval:
        approval = PendingApproval(
            id=self._new_id(),
            kind=kind,
            question=question,
            options=options,
            conversation_id=conversation_id,
            created_at=format_timestamp(self.clock()),
            resume=resume,
        )
        self.approvals[approval.id] = approval
        self._emit({"type": "approval-raised", "approval": approval.to_json()})
        return approval

    def _answer_approval(self, approval_id: str, choice: str) -> dict:
        approval = self.approvals.get(approval_id)
        if approval is None:
            raise UnknownApproval(approval_id)
        if approval.answer is not None:
            raise AlreadyAnswered(approval_id)
        approval.answer = choice
        resume = approval.resume
        approval.resume = None  # the parked flow resumes exactly once
        if resume is not None:
            resume(choice)
        return {"status": "answered", "approvalId": approval_id}

    # --- envelope dispatch ----------------------------------------------------------

    def _dispatch_to_counterparty(self, conv: Conversation, env: Envelope) -> None:
        try:
            profile = self.resolver.fetch_profile(conv.counterparty)
        except (FetchError, ProfileParseError, MissingAgentEndpoint):
            conv.state = mark_failed(conv.state)
            self._conversation_updated(conv)
            return
        self._dispatch(conv, env, profile.agent_endpoint)

    def _dispatch(self, conv: Conversation, env: Envelope, endpoint: str) -> None:
        conv.state = mark_sent(conv.state, env)
        conv.envelopes[env.message_id] = env
        self._conversation_updated(conv)
        data = encode(env)
        conversation_id = conv.state.conversation_id

        def send() -> None:
            url = endpoint.rstrip("/") + "/inbox"
            for attempt in (1, 2):  # one resend on connection error
                try:
                    request = urllib.request.Request(
                        url, data=data, headers={"Content-Type": "application/json"}
                    )
                    with urllib.request.urlopen(request, timeout=SEND_TIMEOUT):
                        return
                except urllib.error.HTTPError:
                    break  # delivered but refused; no retry
                except (urllib.error.URLError, OSError):
                    if attempt == 2:
                        break
            self.submit(lambda: self._send_failed(conversation_id))

        threading.Thread(target=send, daemon=True).start()

    def _send_failed(self, conversation_id: str) -> None:
        conv = self.conversations.get(conversation_id)
        if conv and conv.state.phase not in protocol.TERMINAL_PHASES:
            conv.state = mark_failed(conv.state)
            self._conversation_updated(conv)

    def _reject(self, conv: Conversation, in_reply_to: Optional[Envelope], reason: str) -> None:
        env = Envelope(
            message_id=self._new_id(),
            conversation_id=conv.state.conversation_id,
            sender=self.webid,
            recipient=conv.counterparty,
            kind="reject",
            context=reason,
            in_reply_to=in_reply_to.message_id if in_reply_to else "unknown",
        )
        self._dispatch_to_counterparty(conv, env)

    def _send_error(self, conv: Conversation, in_reply_to: Envelope, detail: str) -> None:
        env = Envelope(
            message_id=self._new_id(),
            conversation_id=conv.state.conversation_id,
            sender=self.webid,
            recipient=conv.counterparty,
            kind="error",
            context=detail,
        )
        conv.envelopes[env.message_id] = env
        try:
            profile = self.resolver.fetch_profile(conv.counterparty)
        except (FetchError, ProfileParseError, MissingAgentEndpoint):
            return
        data = encode(env)
        url = profile.agent_endpoint.rstrip("/") + "/inbox"

        def send() -> None:
            try:
                request = urllib.request.Request(
                    url, data=data, headers={"Content-Type": "application/json"}
                )
                with urllib.request.urlopen(request, timeout=SEND_TIMEOUT):
                    return
            except (urllib.error.URLError, OSError):
                pass

        threading.Thread(target=send, daemon=True).start()

    # --- store sync ---------------------------------------------------------------

    def _sync_stores_and_persist(self) -> None:
        self.kb.replace_graph(
            "urn:charlie:policies",
            Dataset(
                Quad(q.subject, q.predicate, q.object)
                for q in self.policy_store.to_dataset()
            ),
        )
        self.kb.replace_graph(
            "urn:charlie:trust",
            Dataset(
                Quad(q.subject, q.predicate, q.object)
                for q in self.trust_store.to_dataset()
            ),
        )
        self.kb.persist(self.config.kb_file)

    def _display_name_of(self, webid: str) -> str:
        try:
            return self.resolver.fetch_profile(webid).name
        except (FetchError, ProfileParseError, MissingAgentEndpoint):
            return webid


def _slots_as_busy(slots: list[tuple[datetime, datetime]]) -> Dataset:
    from .vocab import SCHEMA_END, SCHEMA_START, XSD_DATETIME

    quads = []
    for i, (start, end) in enumerate(slots):
        subject = iri(f"urn:charlie:rejected-slot:{i}")
        quads.append(
            Quad(subject, iri(SCHEMA_START), literal(start.strftime("%Y-%m-%dT%H:%M:%SZ"), XSD_DATETIME))
        )
        quads.append(
            Quad(subject, iri(SCHEMA_END), literal(end.strftime("%Y-%m-%dT%H:%M:%SZ"), XSD_DATETIME))
        )
    return Dataset(quads)


def _meeting_term(payload: Dataset) -> Optional[Term]:
    from .vocab import RDF_TYPE, SCHEMA_EVENT

    return next(
        (
            q.subject
            for q in payload.match(predicate=iri(RDF_TYPE), obj=iri(SCHEMA_EVENT))
        ),
        None,
    )


def _meeting_action_from_payload(payload: Dataset) -> ProposedAction:
    intervals = busy_intervals(payload)
    start, end = intervals[0]
    meeting = _meeting_term(payload)
    return ProposedAction(
        action_kind="propose-meeting",
        payload=payload,
        rationale="received proposal",
        start=start,
        end=end,
        meeting=meeting,
    )


def _meeting_options(action: ProposedAction, attendees: list[str]) -> dict:
    return {
        "start": action.start.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "end": action.end.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "attendees": attendees,
        "title": "Scheduled meeting",
    }
