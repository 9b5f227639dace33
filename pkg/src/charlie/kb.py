"""The agent's personal knowledge base: named graphs plus descriptions.

Ground-truth user graphs, belief graphs (one per sender), and the reserved
trust/policy/meta graphs all live in one dataset, persisted as a single
TriG file.  Graph descriptions are ordinary quads in the meta graph.  The
scratch graph used during rule evaluation is never persisted.
"""
from __future__ import annotations

import os
import tempfile
from typing import Iterable

from .parser import parse
from .serializer import serialize
from .terms import Dataset, Quad, iri, literal
from .vocab import (
    BELIEF_PREFIX,
    CV_DESCRIPTION,
    INFERRED_GRAPH,
    META_GRAPH,
    POLICIES_GRAPH,
    TRUST_GRAPH,
)

RESERVED_GRAPHS = (TRUST_GRAPH, POLICIES_GRAPH, META_GRAPH, INFERRED_GRAPH)


class IoError(Exception):
    pass


class KnowledgeBase:
    def __init__(self, dataset: Dataset = Dataset()) -> None:
        self.dataset = dataset.without_graph(iri(INFERRED_GRAPH))

    # --- graph bookkeeping ---------------------------------------------------

    def graph(self, name: str) -> Dataset:
        return self.dataset.graph(iri(name))

    def add_quads(self, quads: Iterable[Quad]) -> None:
        self.dataset = self.dataset.union(Dataset(quads)).without_graph(
            iri(INFERRED_GRAPH)
        )

    def replace_graph(self, name: str, content: Dataset) -> None:
        g = iri(name)
        keep = self.dataset.without_graph(g)
        moved = Dataset(
            Quad(q.subject, q.predicate, q.object, g) for q in content
        )
        self.dataset = keep.union(moved)

    def drop_graph(self, name: str) -> None:
        self.dataset = self.dataset.without_graph(iri(name))

    def describe(self, name: str, text: str) -> None:
        meta = iri(META_GRAPH)
        subject = iri(name)
        stale = [
            q
            for q in self.dataset.match(subject, iri(CV_DESCRIPTION), graph=meta)
        ]
        self.dataset = self.dataset.without(stale).add(
            Quad(subject, iri(CV_DESCRIPTION), literal(text), meta)
        )

    def descriptions(self) -> dict[str, str]:
        meta = iri(META_GRAPH)
        return {
            q.subject.value: q.object.value
            for q in self.dataset.match(predicate=iri(CV_DESCRIPTION), graph=meta)
            if q.subject.kind == "iri"
        }

    def user_graphs(self) -> list[str]:
        """Ground-truth graphs owned by the user (not reserved, not belief)."""
        names = []
        for g in self.dataset.graph_names():
            if g is None:
                continue
            if g.value in RESERVED_GRAPHS or g.value.startswith(BELIEF_PREFIX):
                continue
            names.append(g.value)
        return sorted(names)

    def belief_graphs(self) -> list[str]:
        return sorted(
            g.value
            for g in self.dataset.graph_names()
            if g is not None and g.value.startswith(BELIEF_PREFIX)
        )

    def described_user_graphs(self) -> list[tuple[str, str]]:
        descriptions = self.descriptions()
        return [(g, descriptions.get(g, "")) for g in self.user_graphs()]

    # --- persistence -----------------------------------------------------------

    def persist(self, path: str) -> None:
        """Atomic write: serialize to a temp file, then rename."""
        payload = serialize(self.dataset.without_graph(iri(INFERRED_GRAPH)), "trig")
        directory = os.path.dirname(os.path.abspath(path))
        try:
            fd, tmp = tempfile.mkstemp(prefix=".kb-", dir=directory)
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except OSError as exc:
            raise IoError(str(exc)) from None

    @classmethod
    def load(cls, path: str) -> "KnowledgeBase":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoError(str(exc)) from None
        return cls(parse(text, "trig", ""))
