"""RDF data model: terms, quads, and immutable datasets.

Everything the agents exchange or store is a Dataset: a duplicate-free set
of quads partitioned by named graph.  Terms, quads, and datasets are
immutable values, safe to share across threads.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .vocab import RDF_LANGSTRING, XSD_STRING

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_BLANK_LABEL_RE = re.compile(r"^[A-Za-z0-9_]+$")


@dataclass(frozen=True)
class Term:
    """An IRI, blank node, or literal.

    ``value`` holds the IRI string, the blank-node label, or the literal's
    lexical form depending on ``kind``.  Literal comparison is syntactic:
    two literals are equal iff lexical form, datatype, and language all
    match.
    """

    kind: str  # "iri" | "blank" | "literal"
    value: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind == "iri":
            if not _SCHEME_RE.match(self.value):
                raise ValueError(f"IRI is not absolute: {self.value!r}")
            if self.datatype is not None or self.language is not None:
                raise ValueError("IRI terms carry no datatype or language")
        elif self.kind == "blank":
            if not _BLANK_LABEL_RE.match(self.value):
                raise ValueError(f"invalid blank node label: {self.value!r}")
            if self.datatype is not None or self.language is not None:
                raise ValueError("blank nodes carry no datatype or language")
        elif self.kind == "literal":
            if self.language is not None:
                if self.datatype != RDF_LANGSTRING:
                    raise ValueError(
                        "language-tagged literals must use rdf:langString"
                    )
            elif self.datatype is None:
                raise ValueError("literals need a datatype (use literal())")
            elif self.datatype == RDF_LANGSTRING:
                raise ValueError("rdf:langString requires a language tag")
        else:
            raise ValueError(f"unknown term kind: {self.kind!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind == "iri"

    @property
    def is_blank(self) -> bool:
        return self.kind == "blank"

    @property
    def is_literal(self) -> bool:
        return self.kind == "literal"

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.kind == "iri":
            return f"<{self.value}>"
        if self.kind == "blank":
            return f"_:{self.value}"
        if self.language:
            return f'"{self.value}"@{self.language}'
        return f'"{self.value}"^^<{self.datatype}>'


def iri(value: str) -> Term:
    return Term("iri", value)


def blank(label: str) -> Term:
    return Term("blank", label)


def literal(
    lexical: str, datatype: Optional[str] = None, language: Optional[str] = None
) -> Term:
    if language is not None:
        return Term("literal", lexical, RDF_LANGSTRING, language)
    return Term("literal", lexical, datatype or XSD_STRING)


@dataclass(frozen=True)
class Quad:
    """One RDF statement; ``graph`` is an IRI term or None for the default graph."""

    subject: Term
    predicate: Term
    object: Term
    graph: Optional[Term] = None

    def __post_init__(self) -> None:
        if self.subject.kind not in ("iri", "blank"):
            raise ValueError("subject must be an IRI or blank node")
        if self.predicate.kind != "iri":
            raise ValueError("predicate must be an IRI")
        if self.graph is not None and self.graph.kind != "iri":
            raise ValueError("graph must be an IRI or None")

    def triple(self) -> tuple[Term, Term, Term]:
        return (self.subject, self.predicate, self.object)


class Dataset:
    """A duplicate-free, immutable set of quads.

    Equality is set equality; iteration order is unspecified, so anything
    that must be deterministic sorts first (see :func:`charlie.serializer`).
    """

    __slots__ = ("_quads",)

    def __init__(self, quads: Iterable[Quad] = ()) -> None:
        object.__setattr__(self, "_quads", frozenset(quads))

    @property
    def quads(self) -> frozenset[Quad]:
        return self._quads

    def __len__(self) -> int:
        return len(self._quads)

    def __iter__(self) -> Iterator[Quad]:
        return iter(self._quads)

    def __contains__(self, quad: Quad) -> bool:
        return quad in self._quads

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self._quads == other._quads

    def __hash__(self) -> int:
        return hash(self._quads)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Dataset({len(self._quads)} quads)"

    def add(self, *quads: Quad) -> "Dataset":
        return Dataset(self._quads.union(quads))

    def union(self, *others: "Dataset") -> "Dataset":
        return Dataset(self._quads.union(*(o._quads for o in others)))

    def without(self, quads: Iterable[Quad]) -> "Dataset":
        return Dataset(self._quads.difference(quads))

    def graph_names(self) -> set[Optional[Term]]:
        return {q.graph for q in self._quads}

    def graph(self, name: Optional[Term]) -> "Dataset":
        return Dataset(q for q in self._quads if q.graph == name)

    def without_graph(self, name: Optional[Term]) -> "Dataset":
        return Dataset(q for q in self._quads if q.graph != name)

    def match(
        self,
        subject: Optional[Term] = None,
        predicate: Optional[Term] = None,
        obj: Optional[Term] = None,
        graph: object = "any",
    ) -> Iterator[Quad]:
        """Iterate quads matching the given slots; None means wildcard.

        ``graph`` defaults to the sentinel "any"; pass None to match the
        default graph explicitly, or a Term to match one named graph.
        """
        for q in self._quads:
            if subject is not None and q.subject != subject:
                continue
            if predicate is not None and q.predicate != predicate:
                continue
            if obj is not None and q.object != obj:
                continue
            if graph != "any" and q.graph != graph:
                continue
            yield q


def isomorphic(a: Dataset, b: Dataset) -> bool:
    """True iff some blank-node bijection maps ``a`` onto ``b`` exactly.

    Implemented as equality of canonical forms.
    """
    from .canon import canonicalize

    return canonicalize(a).nquads == canonicalize(b).nquads
