"""Dataset serialization to N-Quads and TriG.

N-Quads output is bit-exact: one quad per line, lines sorted by code point,
"\\n" terminators, UTF-8.  Signatures are computed over this form, so the
escaping rules here must never change silently.
"""
from __future__ import annotations

from .terms import Dataset, Quad, Term
from .vocab import RDF_LANGSTRING, XSD_STRING

_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
}


def _escape_literal(text: str) -> str:
    out = []
    for ch in text:
        esc = _ESCAPES.get(ch)
        if esc is not None:
            out.append(esc)
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def term_to_nquads(term: Term) -> str:
    if term.kind == "iri":
        return f"<{term.value}>"
    if term.kind == "blank":
        return f"_:{term.value}"
    lex = _escape_literal(term.value)
    if term.datatype == RDF_LANGSTRING:
        return f'"{lex}"@{term.language}'
    if term.datatype == XSD_STRING:
        return f'"{lex}"'
    return f'"{lex}"^^<{term.datatype}>'


def quad_to_line(quad: Quad) -> str:
    parts = [
        term_to_nquads(quad.subject),
        term_to_nquads(quad.predicate),
        term_to_nquads(quad.object),
    ]
    if quad.graph is not None:
        parts.append(term_to_nquads(quad.graph))
    return " ".join(parts) + " ."


def to_nquads(ds: Dataset) -> str:
    lines = sorted(quad_to_line(q) for q in ds)
    return "".join(line + "\n" for line in lines)


def to_trig(ds: Dataset) -> str:
    """TriG with one fully-written triple per line, grouped by graph.

    No prefix compression: the output is meant to round-trip exactly, not
    to be pretty.
    """
    out: list[str] = []
    graphs = sorted(
        (g for g in ds.graph_names() if g is not None), key=lambda t: t.value
    )
    default = ds.graph(None)
    if len(default):
        out.extend(sorted(quad_to_line(q) for q in default))
    for g in graphs:
        out.append(f"<{g.value}> {{")
        for q in sorted(
            ds.graph(g), key=lambda q: quad_to_line(Quad(q.subject, q.predicate, q.object))
        ):
            out.append(
                "  " + quad_to_line(Quad(q.subject, q.predicate, q.object))
            )
        out.append("}")
    return "".join(line + "\n" for line in out)


def serialize(ds: Dataset, syntax: str = "nquads") -> str:
    if syntax == "nquads":
        return to_nquads(ds)
    if syntax == "trig":
        return to_trig(ds)
    raise ValueError(f"unsupported output syntax: {syntax!r}")
