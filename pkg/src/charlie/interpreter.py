"""The pluggable natural-language boundary.

The scripted interpreter is a pure function of its inputs plus the
injected clock, which keeps the whole system deterministic and testable.
A remote chat-completion client with the same surface exists for live
runs; it is disabled by default and never used in tests.

The interpreter only ever sees graphs the policy engine already permitted
for the task; it has no other data channel.
"""
from __future__ import annotations

import json
import re
import urllib.request
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Callable, Sequence

from .discovery import WebIDProfile
from .rules import parse_datetime
from .terms import Dataset, Quad, Term, iri, literal
from .vocab import (
    RDF_TYPE,
    SCHEMA_ATTENDEE,
    SCHEMA_END,
    SCHEMA_EVENT,
    SCHEMA_NAME,
    SCHEMA_START,
    XSD_DATETIME,
)

WORK_DAY_START_HOUR = 9
WORK_DAY_END_HOUR = 17
SLOT_MINUTES = 60


class NoCounterpartyFound(Exception):
    pass


class NoFreeSlot(Exception):
    pass


class InvalidName(Exception):
    pass


@dataclass(frozen=True)
class ProposedAction:
    action_kind: str  # fixed: propose-meeting
    payload: Dataset
    rationale: str
    start: datetime
    end: datetime
    meeting: Term


class ScriptedInterpreter:
    """Deterministic stand-in for the LLM; stateless and thread-safe."""

    kind = "scripted"

    def identify_counterparties(
        self, prompt: str, known: Sequence[WebIDProfile]
    ) -> list[str]:
        """Case-insensitive whole-word name matching, in prompt order."""
        hits: list[tuple[int, str]] = []
        for profile in known:
            if not profile.name:
                continue
            match = re.search(
                rf"\b{re.escape(profile.name)}\b", prompt, re.IGNORECASE
            )
            if match:
                hits.append((match.start(), profile.webid))
        if not hits:
            raise NoCounterpartyFound(prompt)
        hits.sort()
        return [webid for _, webid in hits]

    def select_data_subset(
        self, prompt: str, graphs: Sequence[tuple[str, str]]
    ) -> list[str]:
        """Keyword table: scheduling-ish prompts select calendar graphs."""
        lowered = prompt.lower()
        if not any(word in lowered for word in ("meeting", "schedule", "calendar")):
            return []
        return [g for g, description in graphs if "calendar" in description.lower()]

    def compose_context(
        self, prompt: str, initiator_name: str, counterparty_name: str
    ) -> str:
        if not initiator_name or not counterparty_name:
            raise InvalidName("both names are required")
        return (
            f"{initiator_name} seeks to schedule a meeting for next week. "
            f"Propose a time for {initiator_name} and {counterparty_name} "
            f"to meet using their calendars."
        )

    def propose_action(
        self,
        context: str,
        ground_truth: Sequence[Dataset],
        window: tuple[datetime, datetime],
        clock: datetime,
        attendees: Sequence[str],
    ) -> ProposedAction:
        """Earliest free hour-aligned weekday slot within the window."""
        start, end = window
        if start >= end:
            raise ValueError("window start must precede window end")
        busy = [
            interval for ds in ground_truth for interval in busy_intervals(ds)
        ]
        day = start.astimezone(timezone.utc).replace(
            hour=0, minute=0, second=0, microsecond=0
        )
        while day < end:
            if day.weekday() < 5:
                for hour in range(WORK_DAY_START_HOUR, WORK_DAY_END_HOUR):
                    slot_start = day.replace(hour=hour)
                    slot_end = slot_start + timedelta(minutes=SLOT_MINUTES)
                    if slot_start < start or slot_end > end or slot_start < clock:
                        continue
                    if any(slot_start < e and s < slot_end for s, e in busy):
                        continue
                    return self._meeting(slot_start, slot_end, attendees)
            day += timedelta(days=1)
        raise NoFreeSlot(f"no free slot in {start:%Y-%m-%d}..{end:%Y-%m-%d}")

    def _meeting(
        self, start: datetime, end: datetime, attendees: Sequence[str]
    ) -> ProposedAction:
        meeting = iri(f"urn:charlie:meeting:{start:%Y%m%dT%H%M%SZ}")
        quads = [
            Quad(meeting, iri(RDF_TYPE), iri(SCHEMA_EVENT)),
            Quad(meeting, iri(SCHEMA_NAME), literal("Scheduled meeting")),
            Quad(meeting, iri(SCHEMA_START), _dt_literal(start)),
            Quad(meeting, iri(SCHEMA_END), _dt_literal(end)),
        ]
        for attendee in attendees:
            quads.append(Quad(meeting, iri(SCHEMA_ATTENDEE), iri(attendee)))
        return ProposedAction(
            action_kind="propose-meeting",
            payload=Dataset(quads),
            rationale=f"earliest free slot {start:%Y-%m-%d %H:%M}-{end:%H:%M} UTC",
            start=start,
            end=end,
            meeting=meeting,
        )


def _dt_literal(dt: datetime) -> Term:
    return literal(dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"), XSD_DATETIME)


def busy_intervals(ds: Dataset) -> list[tuple[datetime, datetime]]:
    """(start, end) pairs for every subject carrying both date predicates."""
    starts: dict[Term, datetime] = {}
    ends: dict[Term, datetime] = {}
    for quad in ds:
        if quad.object.kind != "literal":
            continue
        try:
            if quad.predicate.value == SCHEMA_START:
                starts[quad.subject] = parse_datetime(quad.object.value)
            elif quad.predicate.value == SCHEMA_END:
                ends[quad.subject] = parse_datetime(quad.object.value)
        except Exception:
            continue  # malformed dates never block scheduling
    return sorted(
        (starts[s], ends[s]) for s in starts.keys() & ends.keys()
    )


def next_week_window(clock: datetime) -> tuple[datetime, datetime]:
    """The Monday-Friday span of the ISO week after the clock's week, UTC."""
    today = clock.astimezone(timezone.utc).replace(
        hour=0, minute=0, second=0, microsecond=0
    )
    monday = today - timedelta(days=today.weekday()) + timedelta(days=7)
    return monday, monday + timedelta(days=5)


# ---------------------------------------------------------------------------
# Remote client (optional; excluded from acceptance, disabled by default)
# ---------------------------------------------------------------------------

PostJson = Callable[[str, dict, dict], dict]


def _default_post_json(url: str, body: dict, headers: dict) -> dict:
    request = urllib.request.Request(
        url,
        data=json.dumps(body).encode("utf-8"),
        headers={"Content-Type": "application/json", **headers},
        method="POST",
    )
    with urllib.request.urlopen(request, timeout=30) as response:
        return json.loads(response.read().decode("utf-8"))


class RemoteInterpreter(ScriptedInterpreter):
    """Chat-completion-backed variant: one call per request, temperature 0,
    JSON-constrained responses.  Falls back to raising on malformed model
    output rather than guessing."""

    kind = "remote"

    def __init__(
        self,
        url: str,
        api_key: str = "",
        model: str = "default",
        post_json: PostJson = _default_post_json,
    ) -> None:
        self.url = url
        self.api_key = api_key
        self.model = model
        self.post_json = post_json

    def _complete(self, instruction: str, schema_hint: str) -> dict:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "temperature": 0,
            "response_format": {"type": "json_object"},
            "messages": [
                {
                    "role": "system",
                    "content": "Answer with a single JSON object shaped as: "
                    + schema_hint,
                },
                {"role": "user", "content": instruction},
            ],
        }
        reply = self.post_json(self.url, body, headers)
        content = reply["choices"][0]["message"]["content"]
        return json.loads(content)

    def identify_counterparties(self, prompt, known):
        names = {p.name: p.webid for p in known}
        data = self._complete(
            f"Known people: {sorted(names)}. Which are referenced in: {prompt!r}?",
            '{"names": ["..."]}',
        )
        webids = [names[n] for n in data.get("names", ()) if n in names]
        if not webids:
            raise NoCounterpartyFound(prompt)
        return webids

    def select_data_subset(self, prompt, graphs):
        descriptions = {g: d for g, d in graphs}
        data = self._complete(
            f"Graphs: {sorted(descriptions.items())}. Which are needed for: {prompt!r}?",
            '{"graphs": ["..."]}',
        )
        return [g for g in data.get("graphs", ()) if g in descriptions]
