"""Standard rule sets the runtime evaluates before committing anything.

Two gates ship with the agent: calendar-conflict detection and the
meeting-confirmation requirement.  Both are ordinary rule-engine rules so
a deployment can override them via a .n3r file.
"""
from __future__ import annotations

from typing import Optional

from .rules import QuadPattern, Rule, Var, parse_rules, query, saturate
from .terms import Dataset, Quad, Term, iri, literal
from .vocab import (
    CV_APPROVED_BY,
    CV_CONFIRMED,
    CV_CONFLICTS_WITH,
    INFERRED_GRAPH,
    XSD_BOOLEAN,
)

CONFLICT_RULES_TEXT = """\
@prefix s: <http://schema.org/> .
@prefix cb: <urn:charlie:builtin:> .
@prefix cv: <urn:charlie:vocab:> .

# Two distinct events whose intervals overlap conflict (both directions).
{
  ?e1 a s:Event .
  ?e1 s:startDate ?start1 .
  ?e1 s:endDate ?end1 .
  ?e2 a s:Event .
  ?e2 s:startDate ?start2 .
  ?e2 s:endDate ?end2 .
  ?e1 cb:notEqual ?e2 .
  (?start1 ?end1) cb:overlaps (?start2 ?end2) .
} => {
  ?e1 cv:conflictsWith ?e2 .
} .
"""

CONFIRM_RULES_TEXT = """\
@prefix s: <http://schema.org/> .
@prefix cv: <urn:charlie:vocab:> .

# Only an approved event counts as confirmed; the runtime inserts the
# approvedBy quad after the user (or a standing auto-confirm setting)
# answers.
{
  ?m a s:Event .
  ?m cv:approvedBy ?who .
} => {
  ?m cv:confirmed true .
} .
"""


def conflict_rules() -> list[Rule]:
    return parse_rules(CONFLICT_RULES_TEXT)


def confirm_rules() -> list[Rule]:
    return parse_rules(CONFIRM_RULES_TEXT)


def conflict_pairs(ds: Dataset, rules: Optional[list[Rule]] = None) -> list[tuple[Term, Term]]:
    """Derive conflictsWith over ds and return the (left, right) pairs."""
    saturated = saturate(ds, rules if rules is not None else conflict_rules())
    bindings = query(
        saturated,
        [QuadPattern(Var("a"), iri(CV_CONFLICTS_WITH), Var("b"), iri(INFERRED_GRAPH))],
    )
    return [(b["a"], b["b"]) for b in bindings]


def meeting_conflicts(
    ds: Dataset, meeting: Term, rules: Optional[list[Rule]] = None
) -> list[tuple[Term, Term]]:
    """Conflict pairs involving one specific event.

    Two attendees being independently busy at the same time is not a
    conflict for a proposed meeting; only overlaps with the meeting itself
    block it.
    """
    saturated = saturate(ds, rules if rules is not None else conflict_rules())
    graph = iri(INFERRED_GRAPH)
    bindings = query(
        saturated, [QuadPattern(meeting, iri(CV_CONFLICTS_WITH), Var("other"), graph)]
    )
    return [(meeting, b["other"]) for b in bindings]


def is_confirmed(ds: Dataset, meeting: Term, approver: Term) -> bool:
    """Check the confirmation gate on a scratch copy with the approval quad."""
    scratch = ds.add(Quad(meeting, iri(CV_APPROVED_BY), approver))
    saturated = saturate(scratch, confirm_rules())
    hits = query(
        saturated,
        [
            QuadPattern(
                meeting,
                iri(CV_CONFIRMED),
                literal("true", XSD_BOOLEAN),
                iri(INFERRED_GRAPH),
            )
        ],
    )
    return bool(hits)
