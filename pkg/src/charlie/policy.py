"""ODRL-subset usage control: permissions, prohibitions, obligations.

Policies live as RDF in the reserved graph `urn:charlie:policies` under
the `urn:charlie:odrl-lite:` vocabulary; PolicyRule records map to and
from that form.  Evaluation is default-deny and prohibitions override
permissions.  Applicability ("which policies govern these graphs?") runs
through the rule engine, mirroring how the agent reasons about policies.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Optional

from .canon import canonicalize
from .provenance import format_timestamp, parse_timestamp
from .rules import QuadPattern, Var, parse_rules, query, saturate
from .terms import Dataset, Quad, Term, blank, iri, literal
from .vocab import (
    CV_APPLICABLE,
    CV_REQUESTED_GRAPH,
    XSD_BOOLEAN,
    DEFAULT_PURPOSE,
    INFERRED_GRAPH,
    OL,
    OL_ACTION,
    OL_ANY_AGENT,
    OL_ASSIGNEE,
    OL_CONSTRAINT,
    OL_KIND,
    OL_OBLIGATION,
    OL_PERMISSION,
    OL_PROHIBITION,
    OL_TARGET,
    OL_VALUE,
    POLICIES_GRAPH,
    RDF_TYPE,
    XSD_DATETIME,
    XSD_DURATION,
)

ACTIONS = ("read", "use", "share")
ANY_AGENT = OL_ANY_AGENT

_DURATION_RE = re.compile(r"^P(?!$)(\d+Y)?(\d+M)?(\d+W)?(\d+D)?(T(?=\d)(\d+H)?(\d+M)?(\d+S)?)?$")

_KIND_IRIS = {
    "purpose-equals": OL + "purposeEquals",
    "not-after": OL + "notAfter",
    "delete-after": OL + "deleteAfter",
    "no-resharing": OL + "noResharing",
}
_IRIS_KIND = {v: k for k, v in _KIND_IRIS.items()}


@dataclass(frozen=True)
class Constraint:
    kind: str  # purpose-equals | not-after
    value: str  # purpose IRI or RFC 3339 UTC timestamp

    def __post_init__(self) -> None:
        if self.kind not in ("purpose-equals", "not-after"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "not-after":
            parse_timestamp(self.value)  # raises on malformed timestamps


@dataclass(frozen=True)
class Obligation:
    kind: str  # delete-after | no-resharing
    value: Optional[str] = None  # ISO 8601 duration for delete-after

    def __post_init__(self) -> None:
        if self.kind == "delete-after":
            if not self.value or not _DURATION_RE.match(self.value):
                raise ValueError("delete-after requires a positive ISO 8601 duration")
        elif self.kind == "no-resharing":
            if self.value is not None:
                raise ValueError("no-resharing carries no value")
        else:
            raise ValueError(f"unknown obligation kind {self.kind!r}")


@dataclass(frozen=True)
class PolicyRule:
    uid: str
    rule_kind: str  # permission | prohibition
    action: str  # read | use | share
    target: str  # named-graph IRI
    assignee: str  # WebID or ANY_AGENT
    constraints: tuple[Constraint, ...] = ()
    obligations: tuple[Obligation, ...] = ()

    def __post_init__(self) -> None:
        if self.rule_kind not in ("permission", "prohibition"):
            raise ValueError(f"unknown policy kind {self.rule_kind!r}")
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.rule_kind == "prohibition" and self.obligations:
            raise ValueError("prohibitions carry no obligations")


@dataclass(frozen=True)
class AccessRequest:
    requester: str
    action: str
    target: str
    purpose: str = DEFAULT_PURPOSE
    at: datetime = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not all((self.requester, self.action, self.target, self.purpose, self.at)):
            raise ValueError("all AccessRequest fields must be present")


@dataclass(frozen=True)
class Agreement:
    policy_uid: str
    agent: str
    policy_hash: str
    agreed_at: str  # RFC 3339 UTC

    def to_json(self) -> dict:
        return {
            "policyUid": self.policy_uid,
            "policyHash": self.policy_hash,
            "agreedAt": self.agreed_at,
            "agent": self.agent,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Agreement":
        return cls(
            policy_uid=data["policyUid"],
            agent=data["agent"],
            policy_hash=data["policyHash"],
            agreed_at=data["agreedAt"],
        )


@dataclass(frozen=True)
class Decision:
    permitted: bool
    obligations: tuple[Obligation, ...] = ()
    reason: Optional[str] = None  # no-matching-permission | prohibited | constraint-failed

    def __bool__(self) -> bool:
        return self.permitted


def permit(obligations: Iterable[Obligation] = ()) -> Decision:
    return Decision(True, tuple(obligations))


def deny(reason: str) -> Decision:
    return Decision(False, (), reason)


class PolicyStore:
    """Policies keyed by uid, preserving insertion order."""

    def __init__(self, policies: Iterable[PolicyRule] = ()) -> None:
        self._policies: dict[str, PolicyRule] = {}
        for p in policies:
            self.upsert(p)

    def upsert(self, policy: PolicyRule) -> None:
        self._policies[policy.uid] = policy

    def remove(self, uid: str) -> None:
        self._policies.pop(uid, None)

    def get(self, uid: str) -> Optional[PolicyRule]:
        return self._policies.get(uid)

    def policies(self) -> list[PolicyRule]:
        return list(self._policies.values())

    def __len__(self) -> int:
        return len(self._policies)

    # RDF mapping ------------------------------------------------------------

    def to_dataset(self) -> Dataset:
        quads: list[Quad] = []
        counter = 0
        g = iri(POLICIES_GRAPH)
        for policy in self._policies.values():
            subject = iri(policy.uid)
            type_iri = OL_PERMISSION if policy.rule_kind == "permission" else OL_PROHIBITION
            quads.append(Quad(subject, iri(RDF_TYPE), iri(type_iri), g))
            quads.append(Quad(subject, iri(OL_ACTION), iri(OL + policy.action), g))
            quads.append(Quad(subject, iri(OL_TARGET), iri(policy.target), g))
            quads.append(Quad(subject, iri(OL_ASSIGNEE), iri(policy.assignee), g))
            for constraint in policy.constraints:
                node = blank(f"pc{counter}")
                counter += 1
                quads.append(Quad(subject, iri(OL_CONSTRAINT), node, g))
                quads.append(Quad(node, iri(OL_KIND), iri(_KIND_IRIS[constraint.kind]), g))
                if constraint.kind == "purpose-equals":
                    value: Term = iri(constraint.value)
                else:
                    value = literal(constraint.value, XSD_DATETIME)
                quads.append(Quad(node, iri(OL_VALUE), value, g))
            for obligation in policy.obligations:
                node = blank(f"pc{counter}")
                counter += 1
                quads.append(Quad(subject, iri(OL_OBLIGATION), node, g))
                quads.append(Quad(node, iri(OL_KIND), iri(_KIND_IRIS[obligation.kind]), g))
                if obligation.value is not None:
                    quads.append(
                        Quad(node, iri(OL_VALUE), literal(obligation.value, XSD_DURATION), g)
                    )
        return Dataset(quads)

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "PolicyStore":
        g = iri(POLICIES_GRAPH)
        graph = ds.graph(g)
        store = cls()
        subjects = sorted(
            {
                q.subject
                for q in graph.match(predicate=iri(RDF_TYPE))
                if q.object.value in (OL_PERMISSION, OL_PROHIBITION)
            },
            key=lambda t: t.value,
        )
        for subject in subjects:
            rule_kind = (
                "permission"
                if any(graph.match(subject, iri(RDF_TYPE), iri(OL_PERMISSION)))
                else "prohibition"
            )
            action_quad = next(graph.match(subject, iri(OL_ACTION)))
            target_quad = next(graph.match(subject, iri(OL_TARGET)))
            assignee_quad = next(graph.match(subject, iri(OL_ASSIGNEE)))
            constraints = []
            obligations = []
            for link in graph.match(subject, iri(OL_CONSTRAINT)):
                kind_quad = next(graph.match(link.object, iri(OL_KIND)))
                value_quad = next(graph.match(link.object, iri(OL_VALUE)))
                constraints.append(
                    Constraint(_IRIS_KIND[kind_quad.object.value], value_quad.object.value)
                )
            for link in graph.match(subject, iri(OL_OBLIGATION)):
                kind_quad = next(graph.match(link.object, iri(OL_KIND)))
                value_quad = next(iter(graph.match(link.object, iri(OL_VALUE))), None)
                obligations.append(
                    Obligation(
                        _IRIS_KIND[kind_quad.object.value],
                        value_quad.object.value if value_quad else None,
                    )
                )
            store.upsert(
                PolicyRule(
                    uid=subject.value,
                    rule_kind=rule_kind,
                    action=action_quad.object.value[len(OL):],
                    target=target_quad.object.value,
                    assignee=assignee_quad.object.value,
                    constraints=tuple(sorted(constraints, key=lambda c: (c.kind, c.value))),
                    obligations=tuple(
                        sorted(obligations, key=lambda o: (o.kind, o.value or ""))
                    ),
                )
            )
        return store

    def policy_dataset(self, uid: str) -> Dataset:
        """The RDF quads of a single policy (for hashing and agreement)."""
        single = PolicyStore()
        policy = self._policies[uid]
        single.upsert(policy)
        return single.to_dataset()


def policy_hash(policy: PolicyRule) -> str:
    store = PolicyStore([policy])
    canonical = canonicalize(store.policy_dataset(policy.uid)).nquads
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- applicability (runs through the rule engine) ---------------------------

_APPLICABILITY_RULES_TEXT = """\
@prefix ol: <urn:charlie:odrl-lite:> .
@prefix cv: <urn:charlie:vocab:> .

{ ?policy ol:target ?graph . ?graph cv:requestedGraph true . } => { ?policy cv:applicable true . } .
"""
_applicability_rules = None


def applicable_policies(store: PolicyStore, graphs: Iterable[str]) -> list[PolicyRule]:
    """Policies whose target is among ``graphs``, found by rule inference."""
    global _applicability_rules
    if _applicability_rules is None:
        _applicability_rules = parse_rules(_APPLICABILITY_RULES_TEXT)
    request_quads = [
        Quad(iri(g), iri(CV_REQUESTED_GRAPH), literal("true", XSD_BOOLEAN))
        for g in graphs
    ]
    ds = store.to_dataset().union(Dataset(request_quads))
    saturated = saturate(ds, _applicability_rules)
    hits = query(
        saturated,
        [
            QuadPattern(
                Var("policy"),
                iri(CV_APPLICABLE),
                literal("true", XSD_BOOLEAN),
                iri(INFERRED_GRAPH),
            )
        ],
    )
    applicable = {b["policy"].value for b in hits}
    return [p for p in store.policies() if p.uid in applicable]


# --- evaluation --------------------------------------------------------------


def _constraints_satisfied(policy: PolicyRule, req: AccessRequest) -> bool:
    for constraint in policy.constraints:
        if constraint.kind == "purpose-equals":
            if req.purpose != constraint.value:
                return False
        else:  # not-after
            if req.at > parse_timestamp(constraint.value):
                return False
    return True


def _core_match(policy: PolicyRule, req: AccessRequest) -> bool:
    return (
        policy.action == req.action
        and policy.target == req.target
        and policy.assignee in (req.requester, ANY_AGENT)
    )


def evaluate(store: PolicyStore, req: AccessRequest) -> Decision:
    """Default deny; prohibitions override permissions."""
    if req.action not in ACTIONS:
        return deny("no-matching-permission")
    for policy in store.policies():
        if policy.rule_kind == "prohibition" and _core_match(policy, req):
            if _constraints_satisfied(policy, req):
                return deny("prohibited")
    matching = [
        p
        for p in store.policies()
        if p.rule_kind == "permission" and _core_match(p, req)
    ]
    satisfied = [p for p in matching if _constraints_satisfied(p, req)]
    if satisfied:
        seen: dict[tuple, Obligation] = {}
        for p in satisfied:
            for o in p.obligations:
                seen.setdefault((o.kind, o.value), o)
        return permit(seen.values())
    if matching:
        return deny("constraint-failed")
    return deny("no-matching-permission")


def agree(policy: PolicyRule, agent: str, now: datetime) -> Agreement:
    """Record the agent's agreement to a policy's terms.

    Only meaningful when there is something to honor; the hash binds the
    agreement to the exact policy content.
    """
    if not policy.obligations and not policy.constraints:
        raise ValueError("policy has no obligations or constraints to agree to")
    return Agreement(
        policy_uid=policy.uid,
        agent=agent,
        policy_hash=policy_hash(policy),
        agreed_at=format_timestamp(now),
    )
