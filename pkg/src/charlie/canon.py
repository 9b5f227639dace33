"""Deterministic dataset canonicalization.

Isomorphic datasets (equal up to blank-node relabeling) serialize to
byte-identical canonical N-Quads; non-isomorphic datasets never do.  The
labeling strategy: hash each blank node's first-degree neighbourhood,
order nodes by hash, and break ties by trying every permutation within a
tie-group, keeping the lexicographically least full serialization.
Tie-groups are capped at 8 members.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from itertools import permutations, product
from typing import Dict

from .serializer import quad_to_line, to_nquads
from .terms import Dataset, Quad, Term

TIE_GROUP_LIMIT = 8


class BlankNodeLimitExceeded(Exception):
    def __init__(self, group_size: int) -> None:
        super().__init__(
            f"tie-group of {group_size} hash-indistinguishable blank nodes "
            f"exceeds the limit of {TIE_GROUP_LIMIT}"
        )
        self.group_size = group_size


@dataclass(frozen=True)
class CanonicalForm:
    nquads: str
    label_map: Dict[str, str]  # original blank label -> canonical label


def _relabel_term(term: Term, mapping: Dict[str, str]) -> Term:
    if term.kind == "blank":
        return Term("blank", mapping[term.value])
    return term


def relabel(ds: Dataset, mapping: Dict[str, str]) -> Dataset:
    """Rewrite blank-node labels per ``mapping`` (must cover every label)."""
    return Dataset(
        Quad(
            _relabel_term(q.subject, mapping),
            q.predicate,
            _relabel_term(q.object, mapping),
            q.graph,
        )
        for q in ds
    )


def _first_degree_hash(ds: Dataset, label: str) -> str:
    def placeholder(term: Term) -> Term:
        if term.kind != "blank":
            return term
        return Term("blank", "a" if term.value == label else "z")

    lines = sorted(
        quad_to_line(
            Quad(placeholder(q.subject), q.predicate, placeholder(q.object), q.graph)
        )
        for q in ds
        if (q.subject.kind == "blank" and q.subject.value == label)
        or (q.object.kind == "blank" and q.object.value == label)
    )
    return hashlib.sha256("".join(line + "\n" for line in lines).encode()).hexdigest()


def canonicalize(ds: Dataset) -> CanonicalForm:
    labels = sorted(
        {
            t.value
            for q in ds
            for t in (q.subject, q.object)
            if t.kind == "blank"
        }
    )
    if not labels:
        return CanonicalForm(to_nquads(ds), {})

    hashes = {label: _first_degree_hash(ds, label) for label in labels}
    groups: Dict[str, list[str]] = {}
    for label in labels:
        groups.setdefault(hashes[label], []).append(label)
    ordered_groups = [groups[h] for h in sorted(groups)]
    for group in ordered_groups:
        if len(group) > TIE_GROUP_LIMIT:
            raise BlankNodeLimitExceeded(len(group))

    best_nquads: str | None = None
    best_map: Dict[str, str] = {}
    for arrangement in product(*(permutations(g) for g in ordered_groups)):
        order = [label for group in arrangement for label in group]
        mapping = {label: f"c{i}" for i, label in enumerate(order)}
        candidate = to_nquads(relabel(ds, mapping))
        if best_nquads is None or candidate < best_nquads:
            best_nquads = candidate
            best_map = mapping
    assert best_nquads is not None
    return CanonicalForm(best_nquads, best_map)
