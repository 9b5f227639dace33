"""Belief admission: decide whether an inbound signed dataset becomes
ground truth, triggers a question to the user, or is rejected.

A claim's "topic" is the rdf:type of the subjects it describes.  Trust
assertions are per (source, scope): an exact topic scope beats the
allTopics wildcard, an explicit refusal wins over silence, and silence
means the user gets asked.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .discovery import WebIDProfile
from .provenance import ProvenanceRecord, verify
from .terms import Dataset, Quad, blank, iri, literal
from .vocab import (
    ALL_TOPICS,
    CT_ASSERTION,
    CT_DECIDED_BY,
    CT_GRANTED,
    CT_MIN_PROVENANCE,
    CT_SCOPE,
    CT_SOURCE,
    CT,
    RDF_TYPE,
    TRUST_GRAPH,
    UNTYPED_TOPIC,
    XSD_BOOLEAN,
)

MIN_PROVENANCE_LEVELS = ("any", "signed", "signed-by-source")


@dataclass(frozen=True)
class TrustAssertion:
    source: str  # WebID
    scope: str  # claim-type IRI or ALL_TOPICS
    min_provenance: str = "signed"
    granted: bool = True
    decided_by: str = "default"  # user | default

    def __post_init__(self) -> None:
        if self.min_provenance not in MIN_PROVENANCE_LEVELS:
            raise ValueError(f"unknown provenance level {self.min_provenance!r}")
        if self.decided_by not in ("user", "default"):
            raise ValueError(f"unknown decider {self.decided_by!r}")


@dataclass(frozen=True)
class AdmitDecision:
    kind: str  # believe | ask-user | reject
    question: Optional[str] = None
    topics: tuple[str, ...] = ()  # uncovered topics for ask-user
    reason: Optional[str] = None  # bad-provenance | insufficient-provenance | refused


def believe() -> AdmitDecision:
    return AdmitDecision("believe")


def ask_user(question: str, topics: Iterable[str]) -> AdmitDecision:
    return AdmitDecision("ask-user", question=question, topics=tuple(topics))


def reject(reason: str) -> AdmitDecision:
    return AdmitDecision("reject", reason=reason)


class TrustStore:
    """At most one assertion per (source, scope) pair."""

    def __init__(self, assertions: Iterable[TrustAssertion] = ()) -> None:
        self._assertions: dict[tuple[str, str], TrustAssertion] = {}
        for a in assertions:
            self.upsert(a)

    def upsert(self, assertion: TrustAssertion) -> None:
        self._assertions[(assertion.source, assertion.scope)] = assertion

    def get(self, source: str, scope: str) -> Optional[TrustAssertion]:
        return self._assertions.get((source, scope))

    def assertions(self) -> list[TrustAssertion]:
        return sorted(self._assertions.values(), key=lambda a: (a.source, a.scope))

    def __len__(self) -> int:
        return len(self._assertions)

    def lookup(self, source: str, topic: str) -> Optional[TrustAssertion]:
        """Most specific assertion for a topic: exact scope beats allTopics."""
        exact = self.get(source, topic)
        if exact is not None:
            return exact
        return self.get(source, ALL_TOPICS)

    # RDF mapping -------------------------------------------------------------

    def to_dataset(self) -> Dataset:
        g = iri(TRUST_GRAPH)
        quads = []
        for i, a in enumerate(self.assertions()):
            node = blank(f"ta{i}")
            quads.append(Quad(node, iri(RDF_TYPE), iri(CT_ASSERTION), g))
            quads.append(Quad(node, iri(CT_SOURCE), iri(a.source), g))
            quads.append(Quad(node, iri(CT_SCOPE), iri(a.scope), g))
            quads.append(Quad(node, iri(CT_MIN_PROVENANCE), iri(CT + a.min_provenance), g))
            quads.append(
                Quad(node, iri(CT_GRANTED), literal("true" if a.granted else "false", XSD_BOOLEAN), g)
            )
            quads.append(Quad(node, iri(CT_DECIDED_BY), iri(CT + a.decided_by), g))
        return Dataset(quads)

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "TrustStore":
        graph = ds.graph(iri(TRUST_GRAPH))
        store = cls()
        for type_quad in graph.match(predicate=iri(RDF_TYPE), obj=iri(CT_ASSERTION)):
            node = type_quad.subject
            source = next(graph.match(node, iri(CT_SOURCE))).object.value
            scope = next(graph.match(node, iri(CT_SCOPE))).object.value
            min_prov = next(graph.match(node, iri(CT_MIN_PROVENANCE))).object.value
            granted = next(graph.match(node, iri(CT_GRANTED))).object.value == "true"
            decided = next(graph.match(node, iri(CT_DECIDED_BY))).object.value
            store.upsert(
                TrustAssertion(
                    source=source,
                    scope=scope,
                    min_provenance=min_prov[len(CT):],
                    granted=granted,
                    decided_by=decided[len(CT):],
                )
            )
        return store


@dataclass(frozen=True)
class ClaimTopics:
    topics: frozenset[str]


def extract_topics(payload: Dataset) -> ClaimTopics:
    """Types of subjects that the payload actually describes.

    A typed node with no other quads contributes nothing; a payload with
    no effective topics gets the reserved untyped topic.
    """
    described: set[str] = set()
    for quad in payload:
        if quad.predicate.value == RDF_TYPE and quad.object.kind == "iri":
            subject = quad.subject
            if any(
                q is not quad and q.subject == subject for q in payload.match(subject)
            ):
                described.add(quad.object.value)
    if not described:
        return ClaimTopics(frozenset({UNTYPED_TOPIC}))
    return ClaimTopics(frozenset(described))


def _provenance_met(assertion: TrustAssertion, record: ProvenanceRecord) -> bool:
    if assertion.min_provenance == "any":
        return True
    if assertion.min_provenance == "signed":
        return True  # admit() only reaches here after a successful verify
    return record.signer == assertion.source


def admit(
    payload: Dataset,
    record: Optional[ProvenanceRecord],
    sender_profile: WebIDProfile,
    store: TrustStore,
) -> AdmitDecision:
    """Pure decision: believe, ask the user, or reject."""
    if record is None:
        return reject("bad-provenance")
    key = next(
        (bytes_ for key_id, bytes_ in sender_profile.public_keys if key_id == record.key_id),
        None,
    )
    if key is None or not verify(payload, record, key).accepted:
        return reject("bad-provenance")

    source = sender_profile.webid
    topics = sorted(extract_topics(payload).topics)
    uncovered = []
    assertions = []
    for topic in topics:
        assertion = store.lookup(source, topic)
        if assertion is None:
            uncovered.append(topic)
        else:
            assertions.append(assertion)
    if any(not a.granted for a in assertions):
        return reject("refused")
    if uncovered:
        question = (
            f"Do you trust {sender_profile.name or source} as a source for: "
            + ", ".join(uncovered)
            + "?"
        )
        return ask_user(question, uncovered)
    if all(_provenance_met(a, record) for a in assertions):
        return believe()
    return reject("insufficient-provenance")


def record_user_answer(
    store: TrustStore, source: str, scope: str, granted: bool
) -> TrustAssertion:
    """Upsert the user's answer; later admits see it (last write wins)."""
    assertion = TrustAssertion(
        source=source,
        scope=scope,
        min_provenance="signed",
        granted=granted,
        decided_by="user",
    )
    store.upsert(assertion)
    return assertion
