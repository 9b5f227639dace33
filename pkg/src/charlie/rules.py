"""Forward-chaining rule engine over datasets.

Rule files (.n3r) hold rules of the form::

    { <premise triples and builtin calls> } => { <conclusion triples> } .

with Turtle-style terms and `?name` variables.  Builtin calls are triples
whose predicate lives under `cb:` = `urn:charlie:builtin:`; the binary
comparisons are written infix (``?a cb:lessThan ?b``) and the interval
check takes two 2-element lists (``(?s1 ?e1) cb:overlaps (?s2 ?e2)``).

Rules must be range-restricted: every variable in a conclusion or builtin
argument appears in some premise quad pattern.  Saturation therefore
terminates (no new terms are invented) and derived quads land in the
scratch graph `urn:charlie:inferred`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, Optional, Union

from .parser import RdfSyntaxError, _Parser
from .serializer import term_to_nquads
from .terms import Dataset, Quad, Term, iri
from .vocab import (
    CB,
    INFERRED_GRAPH,
    XSD_DATETIME,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_FLOAT,
    XSD_INTEGER,
)

INFERRED = iri(INFERRED_GRAPH)

_NUMERIC_DATATYPES = {XSD_INTEGER, XSD_DECIMAL, XSD_DOUBLE, XSD_FLOAT}
_BUILTIN_ARITY = {"lessThan": 2, "greaterThan": 2, "notEqual": 2, "overlaps": 4}
_DATETIME_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})?$"
)


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"?{self.name}"


PatternTerm = Union[Term, Var]


@dataclass(frozen=True)
class QuadPattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm
    graph: Optional[PatternTerm] = None  # None matches any graph


@dataclass(frozen=True)
class BuiltinCall:
    name: str
    args: tuple[PatternTerm, ...]


@dataclass(frozen=True)
class Rule:
    patterns: tuple[QuadPattern, ...]
    builtins: tuple[BuiltinCall, ...]
    conclusions: tuple[tuple[PatternTerm, PatternTerm, PatternTerm], ...]


class NotRangeRestricted(Exception):
    def __init__(self, rule_index: int, variable: str) -> None:
        super().__init__(
            f"rule {rule_index}: variable ?{variable} does not occur in any "
            f"premise quad pattern"
        )
        self.rule_index = rule_index
        self.variable = variable


class BuiltinTypeError(Exception):
    def __init__(self, rule: object, binding: dict) -> None:
        super().__init__(f"incomparable builtin arguments under {binding}")
        self.rule = rule
        self.binding = binding


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _RuleParser:
    """Drives the shared Turtle term machinery over rule syntax."""

    def __init__(self, text: str) -> None:
        self.p = _Parser(text, base="", allow_graphs=False)

    def parse(self) -> list[Rule]:
        rules: list[Rule] = []
        while True:
            tok = self.p.peek()
            if tok.kind == "EOF":
                break
            if tok.kind == "DIRECTIVE":
                self.p.parse_at_directive()
            elif tok.kind == "WORD" and tok.value.lower() in ("prefix", "base"):
                self.p.parse_sparql_directive()
            elif tok.kind == "{":
                rules.append(self.parse_rule(len(rules)))
            else:
                raise self.p.error(tok, f"expected a rule, found {tok.kind!r}")
        return rules

    def parse_rule(self, index: int) -> Rule:
        premise = self.parse_block(allow_builtins=True)
        self.p.expect("=>")
        conclusion = self.parse_block(allow_builtins=False)
        self.p.expect(".")

        patterns: list[QuadPattern] = []
        builtins: list[BuiltinCall] = []
        for s, pred, o in premise:
            call = self.as_builtin(s, pred, o)
            if call is not None:
                builtins.append(call)
            else:
                for slot in (s, o):
                    if isinstance(slot, tuple):
                        raise RdfSyntaxError(
                            0, 0, "collections are only allowed as builtin arguments"
                        )
                patterns.append(QuadPattern(s, pred, o))
        conclusions = []
        for s, pred, o in conclusion:
            if any(isinstance(slot, tuple) for slot in (s, pred, o)):
                raise RdfSyntaxError(0, 0, "collections not allowed in conclusions")
            if isinstance(pred, Term) and pred.value.startswith(CB):
                raise RdfSyntaxError(0, 0, "builtin calls not allowed in conclusions")
            conclusions.append((s, pred, o))

        bound = {
            v.name
            for pat in patterns
            for v in (pat.subject, pat.predicate, pat.object)
            if isinstance(v, Var)
        }
        for call in builtins:
            for arg in call.args:
                if isinstance(arg, Var) and arg.name not in bound:
                    raise NotRangeRestricted(index, arg.name)
        for s, pred, o in conclusions:
            for slot in (s, pred, o):
                if isinstance(slot, Var) and slot.name not in bound:
                    raise NotRangeRestricted(index, slot.name)
        return Rule(tuple(patterns), tuple(builtins), tuple(conclusions))

    def as_builtin(self, s, pred, o) -> Optional[BuiltinCall]:
        if not (isinstance(pred, Term) and pred.kind == "iri" and pred.value.startswith(CB)):
            return None
        name = pred.value[len(CB):]
        if name not in _BUILTIN_ARITY:
            raise RdfSyntaxError(0, 0, f"unknown builtin cb:{name}")
        if name == "overlaps":
            if not (isinstance(s, tuple) and len(s) == 2 and isinstance(o, tuple) and len(o) == 2):
                raise RdfSyntaxError(
                    0, 0, "cb:overlaps takes two 2-element lists: (?s1 ?e1) cb:overlaps (?s2 ?e2)"
                )
            return BuiltinCall(name, (*s, *o))
        if isinstance(s, tuple) or isinstance(o, tuple):
            raise RdfSyntaxError(0, 0, f"cb:{name} takes plain terms, not lists")
        return BuiltinCall(name, (s, o))

    def parse_block(self, allow_builtins: bool) -> list[tuple]:
        self.p.expect("{")
        triples: list[tuple] = []
        while self.p.peek().kind != "}":
            subject = self.parse_slot(allow_list=allow_builtins)
            predicate = self.parse_predicate()
            obj = self.parse_slot(allow_list=allow_builtins)
            triples.append((subject, predicate, obj))
            if self.p.peek().kind == ".":
                self.p.next()
            elif self.p.peek().kind != "}":
                raise self.p.error(self.p.peek(), "expected '.' or '}' in rule block")
        self.p.expect("}")
        return triples

    def parse_predicate(self) -> PatternTerm:
        tok = self.p.peek()
        if tok.kind == "VAR":
            self.p.next()
            return Var(tok.value)
        if tok.kind == "WORD" and tok.value == "a":
            return self.p.parse_predicate()
        term = self.p.parse_term()
        if term.kind != "iri":
            raise self.p.error(tok, "rule predicate must be an IRI or variable")
        return term

    def parse_slot(self, allow_list: bool) -> object:
        tok = self.p.peek()
        if tok.kind == "VAR":
            self.p.next()
            return Var(tok.value)
        if tok.kind == "(":
            if not allow_list:
                raise self.p.error(tok, "collections are only allowed in premises")
            self.p.next()
            items = []
            while self.p.peek().kind != ")":
                items.append(self.parse_slot(allow_list=False))
            self.p.expect(")")
            return tuple(items)
        if tok.kind in ("BLANK", "["):
            raise self.p.error(tok, "blank nodes are not supported in rules")
        return self.p.parse_term()


def parse_rules(text: str) -> list[Rule]:
    """Parse rule text; rejects non-range-restricted rules."""
    return _RuleParser(text).parse()


def load_rules(path: str) -> list[Rule]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_rules(fh.read())


# ---------------------------------------------------------------------------
# Matching and saturation
# ---------------------------------------------------------------------------


def _substitute(slot: PatternTerm, binding: dict[str, Term]) -> Term:
    if isinstance(slot, Var):
        return binding[slot.name]
    return slot


def _unify(slot: PatternTerm, value: Optional[Term], binding: dict[str, Term]):
    """Return an extended binding or None; value None is the default graph."""
    if isinstance(slot, Var):
        if value is None:
            return None  # a variable graph slot never binds the default graph
        seen = binding.get(slot.name)
        if seen is None:
            out = dict(binding)
            out[slot.name] = value
            return out
        return binding if seen == value else None
    return binding if slot == value else None


def _match(
    patterns: Iterable[QuadPattern], quads: Iterable[Quad], binding: dict[str, Term]
) -> Iterator[dict[str, Term]]:
    patterns = list(patterns)
    if not patterns:
        yield binding
        return
    head, rest = patterns[0], patterns[1:]
    for quad in quads:
        b = _unify(head.subject, quad.subject, binding)
        if b is None:
            continue
        b = _unify(head.predicate, quad.predicate, b)
        if b is None:
            continue
        b = _unify(head.object, quad.object, b)
        if b is None:
            continue
        if head.graph is not None:
            b = _unify(head.graph, quad.graph, b)
            if b is None:
                continue
        yield from _match(rest, quads, b)


class _Incomparable(Exception):
    pass


def _comparable_value(term: Term):
    if term.kind != "literal":
        raise _Incomparable()
    if term.datatype == XSD_DATETIME:
        return ("datetime", parse_datetime(term.value))
    if term.datatype in _NUMERIC_DATATYPES:
        try:
            return ("number", Decimal(term.value))
        except InvalidOperation:
            raise _Incomparable() from None
    raise _Incomparable()


def parse_datetime(lexical: str) -> datetime:
    """xsd:dateTime to a UTC instant; offsets normalized, naive means UTC."""
    if not _DATETIME_RE.match(lexical):
        raise _Incomparable()
    dt = datetime.fromisoformat(lexical.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _eval_builtin(call: BuiltinCall, binding: dict[str, Term], rule: object) -> bool:
    args = [_substitute(a, binding) for a in call.args]
    if call.name == "notEqual":
        try:
            return _comparable_value(args[0]) != _comparable_value(args[1])
        except _Incomparable:
            return args[0] != args[1]
    try:
        if call.name == "overlaps":
            values = [_comparable_value(a) for a in args]
            tags = {tag for tag, _ in values}
            if len(tags) != 1:
                raise _Incomparable()
            s1, e1, s2, e2 = (v for _, v in values)
            return s1 < e2 and s2 < e1
        left = _comparable_value(args[0])
        right = _comparable_value(args[1])
        if left[0] != right[0]:
            raise _Incomparable()
        if call.name == "lessThan":
            return left[1] < right[1]
        return left[1] > right[1]
    except _Incomparable:
        raise BuiltinTypeError(rule, binding) from None


def saturate(ds: Dataset, rules: Iterable[Rule]) -> Dataset:
    """Least fixpoint of ds under the rules; derived quads go to the scratch graph."""
    rules = list(rules)
    facts: set[Quad] = set(ds)
    changed = True
    while changed:
        changed = False
        snapshot = list(facts)
        for index, rule in enumerate(rules):
            for binding in _match(rule.patterns, snapshot, {}):
                if not all(_eval_builtin(c, binding, index) for c in rule.builtins):
                    continue
                for s, p, o in rule.conclusions:
                    quad = Quad(
                        _substitute(s, binding),
                        _substitute(p, binding),
                        _substitute(o, binding),
                        INFERRED,
                    )
                    if quad not in facts:
                        facts.add(quad)
                        changed = True
    return Dataset(facts)


def _binding_key(binding: dict[str, Term]) -> str:
    return "&".join(
        f"?{name}={term_to_nquads(term)}" for name, term in sorted(binding.items())
    )


def query(ds: Dataset, patterns: Iterable[QuadPattern]) -> list[dict[str, Term]]:
    """All satisfying bindings, deduplicated, in deterministic order."""
    seen: dict[str, dict[str, Term]] = {}
    for binding in _match(patterns, list(ds), {}):
        seen.setdefault(_binding_key(binding), binding)
    return [seen[key] for key in sorted(seen)]
