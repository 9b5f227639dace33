"""Turtle, TriG, and N-Quads parsing.

The supported Turtle/TriG subset: @prefix/@base (and SPARQL-style
PREFIX/BASE), predicate and object lists, blank-node property lists,
collections, the `a` keyword, and numeric/boolean/string literal
shorthands.  TriG adds named-graph blocks, optionally introduced by the
GRAPH keyword.  Blank-node labels are renamed to fresh `b0, b1, ...` in
document order, so labels never collide across documents.

The tokenizer also understands `?var`, `{`, `}`, and `=>`, which the rule
syntax reuses; plain Turtle/TriG rejects those where the grammar does not
allow them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .terms import Dataset, Quad, Term, iri, literal
from .vocab import (
    RDF_FIRST,
    RDF_NIL,
    RDF_REST,
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
)


class RdfSyntaxError(Exception):
    """Grammar violation; carries 1-based line and column."""

    def __init__(self, line: int, column: int, message: str) -> None:
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


# ---------------------------------------------------------------------------
# IRI resolution (RFC 3986, section 5.2)
# ---------------------------------------------------------------------------

_URI_RE = re.compile(
    r"^(?:([^:/?#]+):)?(?://([^/?#]*))?([^?#]*)(?:\?([^#]*))?(?:#(.*))?$"
)


def _split_iri(ref: str):
    m = _URI_RE.match(ref)
    assert m is not None
    return m.groups()  # scheme, authority, path, query, fragment


def _merge_paths(base_authority, base_path: str, ref_path: str) -> str:
    if base_authority is not None and not base_path:
        return "/" + ref_path
    if "/" in base_path:
        return base_path[: base_path.rfind("/") + 1] + ref_path
    return ref_path


def _remove_dot_segments(path: str) -> str:
    out: list[str] = []
    while path:
        if path.startswith("../"):
            path = path[3:]
        elif path.startswith("./"):
            path = path[2:]
        elif path.startswith("/./"):
            path = "/" + path[3:]
        elif path == "/.":
            path = "/"
        elif path.startswith("/../"):
            path = "/" + path[4:]
            if out:
                out.pop()
        elif path == "/..":
            path = "/"
            if out:
                out.pop()
        elif path in (".", ".."):
            path = ""
        else:
            cut = path.find("/", 1)
            if cut == -1:
                out.append(path)
                path = ""
            else:
                out.append(path[:cut])
                path = path[cut:]
    return "".join(out)


def resolve_iri(base: str, ref: str) -> str:
    """Resolve ``ref`` against ``base`` per RFC 3986."""
    r_scheme, r_auth, r_path, r_query, r_frag = _split_iri(ref)
    if r_scheme is not None:
        scheme, auth, path, query = r_scheme, r_auth, _remove_dot_segments(r_path), r_query
    else:
        b_scheme, b_auth, b_path, b_query, _ = _split_iri(base)
        scheme = b_scheme
        if r_auth is not None:
            auth, path, query = r_auth, _remove_dot_segments(r_path), r_query
        elif not r_path:
            auth, path = b_auth, b_path
            query = r_query if r_query is not None else b_query
        else:
            auth = b_auth
            if r_path.startswith("/"):
                path = _remove_dot_segments(r_path)
            else:
                path = _remove_dot_segments(_merge_paths(b_auth, b_path or "", r_path))
            query = r_query
    result = ""
    if scheme is not None:
        result += scheme + ":"
    if auth is not None:
        result += "//" + auth
    result += path or ""
    if query is not None:
        result += "?" + query
    if r_frag is not None:
        result += "#" + r_frag
    return result


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    line: int
    column: int


_PN_CHARS = re.compile(r"[A-Za-z0-9_\-À-￿]")
_WORD_START = re.compile(r"[A-Za-z_À-￿]")
_DIGIT = re.compile(r"[0-9]")
_STRING_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}


class _Scanner:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> RdfSyntaxError:
        return RdfSyntaxError(self.line, self.col, message)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def advance(self, n: int = 1) -> str:
        taken = self.text[self.pos : self.pos + n]
        for ch in taken:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n
        return taken

    def _skip_ws(self) -> None:
        while self.pos < len(self.text):
            ch = self.peek()
            if ch in " \t\r\n":
                self.advance()
            elif ch == "#":
                while self.pos < len(self.text) and self.peek() != "\n":
                    self.advance()
            else:
                return

    def _read_unicode_escape(self, width: int) -> str:
        hexdigits = ""
        for _ in range(width):
            ch = self.peek()
            if not ch or ch not in "0123456789abcdefABCDEF":
                raise self.error("bad unicode escape")
            hexdigits += self.advance()
        return chr(int(hexdigits, 16))

    def _read_iriref(self) -> str:
        out = []
        self.advance()  # <
        while True:
            ch = self.peek()
            if ch == "":
                raise self.error("unterminated IRI")
            if ch == ">":
                self.advance()
                return "".join(out)
            if ch in " \t\r\n\"{}|^`":
                raise self.error(f"character {ch!r} not allowed in IRI")
            if ch == "\\":
                self.advance()
                esc = self.peek()
                if esc == "u":
                    self.advance()
                    out.append(self._read_unicode_escape(4))
                elif esc == "U":
                    self.advance()
                    out.append(self._read_unicode_escape(8))
                else:
                    raise self.error("only \\u and \\U escapes allowed in IRIs")
            else:
                out.append(self.advance())

    def _read_string(self) -> str:
        quote = self.peek()
        long_form = self.text[self.pos : self.pos + 3] == quote * 3
        self.advance(3 if long_form else 1)
        out = []
        while True:
            ch = self.peek()
            if ch == "":
                raise self.error("unterminated string")
            if not long_form and ch in "\n\r":
                raise self.error("newline in single-line string")
            if ch == quote:
                if long_form:
                    if self.text[self.pos : self.pos + 3] == quote * 3:
                        self.advance(3)
                        return "".join(out)
                    out.append(self.advance())
                    continue
                self.advance()
                return "".join(out)
            if ch == "\\":
                self.advance()
                esc = self.peek()
                if esc == "u":
                    self.advance()
                    out.append(self._read_unicode_escape(4))
                elif esc == "U":
                    self.advance()
                    out.append(self._read_unicode_escape(8))
                elif esc in _STRING_ESCAPES:
                    self.advance()
                    out.append(_STRING_ESCAPES[esc])
                else:
                    raise self.error(f"unknown string escape \\{esc}")
            else:
                out.append(self.advance())

    def _read_number(self) -> Token:
        line, col = self.line, self.col
        out = []
        if self.peek() in "+-":
            out.append(self.advance())
        has_dot = False
        has_exp = False
        while True:
            ch = self.peek()
            if _DIGIT.match(ch or "x"):
                out.append(self.advance())
            elif ch == "." and not has_dot and not has_exp:
                # a dot ends the number unless a digit follows
                if _DIGIT.match(self.peek(1) or "x"):
                    has_dot = True
                    out.append(self.advance())
                else:
                    break
            elif ch in "eE" and not has_exp:
                nxt = self.peek(1)
                nxt2 = self.peek(2)
                if _DIGIT.match(nxt or "x") or (
                    nxt in "+-" and _DIGIT.match(nxt2 or "x")
                ):
                    has_exp = True
                    out.append(self.advance())
                    if self.peek() in "+-":
                        out.append(self.advance())
                else:
                    break
            else:
                break
        lexical = "".join(out)
        if not any(_DIGIT.match(c) for c in lexical):
            raise RdfSyntaxError(line, col, f"malformed number {lexical!r}")
        kind = "DOUBLE" if has_exp else "DECIMAL" if has_dot else "INTEGER"
        return Token(kind, lexical, line, col)

    def _read_name(self, allow_dots: bool = False) -> str:
        out = []
        while True:
            ch = self.peek()
            if ch and _PN_CHARS.match(ch):
                out.append(self.advance())
            elif allow_dots and ch == "." and _PN_CHARS.match(self.peek(1) or " "):
                out.append(self.advance())
            elif ch == "%" and allow_dots:
                out.append(self.advance())
            else:
                return "".join(out)

    def next_token(self) -> Token:
        self._skip_ws()
        line, col = self.line, self.col
        ch = self.peek()
        if ch == "":
            return Token("EOF", None, line, col)
        if ch == "<":
            return Token("IRIREF", self._read_iriref(), line, col)
        if ch in "\"'":
            return Token("STRING", self._read_string(), line, col)
        if ch == "_" and self.peek(1) == ":":
            self.advance(2)
            label = self._read_name(allow_dots=True)
            if not label:
                raise RdfSyntaxError(line, col, "empty blank node label")
            return Token("BLANK", label, line, col)
        if ch == "?":
            self.advance()
            name = self._read_name()
            if not name:
                raise RdfSyntaxError(line, col, "empty variable name")
            return Token("VAR", name, line, col)
        if ch == "@":
            self.advance()
            word = self._read_name()
            if word in ("prefix", "base"):
                return Token("DIRECTIVE", word, line, col)
            if not re.match(r"^[A-Za-z]+(-[A-Za-z0-9]+)*$", word):
                raise RdfSyntaxError(line, col, f"malformed language tag @{word}")
            return Token("LANGTAG", word, line, col)
        if ch == "^" and self.peek(1) == "^":
            self.advance(2)
            return Token("^^", None, line, col)
        if ch == "=" and self.peek(1) == ">":
            self.advance(2)
            return Token("=>", None, line, col)
        if ch in ".;,[](){}":
            # distinguish statement dot from number start
            if ch == "." and _DIGIT.match(self.peek(1) or "x"):
                return self._read_number()
            self.advance()
            return Token(ch, None, line, col)
        if ch in "+-" or _DIGIT.match(ch):
            return self._read_number()
        if _WORD_START.match(ch):
            word = self._read_name(allow_dots=True)
            if self.peek() == ":":
                self.advance()
                local = self._read_name(allow_dots=True)
                if local.endswith("."):
                    raise RdfSyntaxError(line, col, "prefixed name ends with a dot")
                return Token("PNAME", (word, local), line, col)
            if word.endswith("."):
                # trailing dot belongs to the statement; rescan it
                self.pos -= 1
                self.col -= 1
                word = word[:-1]
            return Token("WORD", word, line, col)
        if ch == ":":
            self.advance()
            local = self._read_name(allow_dots=True)
            return Token("PNAME", ("", local), line, col)
        raise RdfSyntaxError(line, col, f"unexpected character {ch!r}")


def tokenize(text: str) -> list[Token]:
    scanner = _Scanner(text)
    tokens = []
    while True:
        tok = scanner.next_token()
        tokens.append(tok)
        if tok.kind == "EOF":
            return tokens


# ---------------------------------------------------------------------------
# Turtle / TriG parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, base: str, allow_graphs: bool) -> None:
        self.tokens = tokenize(text)
        self.index = 0
        self.base = base
        self.allow_graphs = allow_graphs
        self.prefixes: dict[str, str] = {}
        self.blank_map: dict[str, Term] = {}
        self.blank_counter = 0
        self.quads: list[Quad] = []
        self.current_graph: Optional[Term] = None

    # token helpers

    def peek(self) -> Token:
        return self.tokens[self.index]

    def next(self) -> Token:
        tok = self.tokens[self.index]
        if tok.kind != "EOF":
            self.index += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            raise RdfSyntaxError(
                tok.line, tok.column, f"expected {kind!r}, found {tok.kind!r}"
            )
        return tok

    def error(self, tok: Token, message: str) -> RdfSyntaxError:
        return RdfSyntaxError(tok.line, tok.column, message)

    # document structure

    def parse_document(self) -> Dataset:
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                break
            if tok.kind == "DIRECTIVE":
                self.parse_at_directive()
            elif tok.kind == "WORD" and tok.value.lower() in ("prefix", "base"):
                self.parse_sparql_directive()
            else:
                self.parse_block()
        return Dataset(self.quads)

    def parse_at_directive(self) -> None:
        tok = self.next()
        if tok.value == "prefix":
            name = self.expect("PNAME")
            prefix, local = name.value
            if local:
                raise self.error(name, "prefix declaration must end with ':'")
            target = self.expect("IRIREF")
            self.prefixes[prefix] = resolve_iri(self.base, target.value)
        else:
            target = self.expect("IRIREF")
            self.base = resolve_iri(self.base, target.value)
        self.expect(".")

    def parse_sparql_directive(self) -> None:
        tok = self.next()
        if tok.value.lower() == "prefix":
            name = self.expect("PNAME")
            prefix, local = name.value
            if local:
                raise self.error(name, "prefix declaration must end with ':'")
            target = self.expect("IRIREF")
            self.prefixes[prefix] = resolve_iri(self.base, target.value)
        else:
            target = self.expect("IRIREF")
            self.base = resolve_iri(self.base, target.value)

    def parse_block(self) -> None:
        tok = self.peek()
        if self.allow_graphs:
            if tok.kind == "WORD" and tok.value == "GRAPH":
                self.next()
                name = self.parse_term()
                if name.kind != "iri":
                    raise self.error(tok, "graph label must be an IRI")
                self.parse_graph_body(name)
                return
            if tok.kind == "{":
                self.parse_graph_body(None)
                return
            if tok.kind in ("IRIREF", "PNAME"):
                # lookahead: graph block or subject?
                save = self.index
                name = self.parse_term()
                if self.peek().kind == "{":
                    self.parse_graph_body(name)
                    return
                self.index = save
        self.parse_triples()
        self.expect(".")

    def parse_graph_body(self, name: Optional[Term]) -> None:
        self.expect("{")
        previous = self.current_graph
        self.current_graph = name
        while self.peek().kind != "}":
            self.parse_triples()
            if self.peek().kind == ".":
                self.next()
            elif self.peek().kind != "}":
                raise self.error(self.peek(), "expected '.' or '}' in graph block")
        self.expect("}")
        self.current_graph = previous

    def parse_triples(self) -> None:
        tok = self.peek()
        if tok.kind == "[":
            subject = self.parse_blank_node_property_list()
            if self.peek().kind not in (".", "}"):
                self.parse_predicate_object_list(subject)
            return
        subject = self.parse_term()
        if subject.kind == "literal":
            raise self.error(tok, "literal cannot be a subject")
        self.parse_predicate_object_list(subject)

    def parse_predicate_object_list(self, subject: Term) -> None:
        while True:
            predicate = self.parse_predicate()
            while True:
                obj = self.parse_object()
                self.emit(subject, predicate, obj)
                if self.peek().kind == ",":
                    self.next()
                    continue
                break
            if self.peek().kind == ";":
                self.next()
                # tolerate trailing semicolons
                if self.peek().kind in (".", "}", "]", ";"):
                    while self.peek().kind == ";":
                        self.next()
                    return
                continue
            return

    def parse_predicate(self) -> Term:
        tok = self.peek()
        if tok.kind == "WORD" and tok.value == "a":
            self.next()
            return iri(RDF_TYPE)
        term = self.parse_term()
        if term.kind != "iri":
            raise self.error(tok, "predicate must be an IRI")
        return term

    def parse_object(self) -> Term:
        tok = self.peek()
        if tok.kind == "[":
            return self.parse_blank_node_property_list()
        if tok.kind == "(":
            return self.parse_collection()
        return self.parse_term()

    def parse_blank_node_property_list(self) -> Term:
        self.expect("[")
        node = self.fresh_blank()
        if self.peek().kind != "]":
            self.parse_predicate_object_list(node)
        self.expect("]")
        return node

    def parse_collection(self) -> Term:
        self.expect("(")
        items = []
        while self.peek().kind != ")":
            items.append(self.parse_object())
        self.expect(")")
        if not items:
            return iri(RDF_NIL)
        head = self.fresh_blank()
        node = head
        for i, item in enumerate(items):
            self.emit(node, iri(RDF_FIRST), item)
            if i + 1 < len(items):
                nxt = self.fresh_blank()
                self.emit(node, iri(RDF_REST), nxt)
                node = nxt
            else:
                self.emit(node, iri(RDF_REST), iri(RDF_NIL))
        return head

    def parse_term(self) -> Term:
        tok = self.next()
        if tok.kind == "IRIREF":
            try:
                return iri(resolve_iri(self.base, tok.value))
            except ValueError as exc:
                raise self.error(tok, str(exc)) from None
        if tok.kind == "PNAME":
            prefix, local = tok.value
            if prefix not in self.prefixes:
                raise self.error(tok, f"undeclared prefix {prefix!r}:")
            return iri(self.prefixes[prefix] + local)
        if tok.kind == "BLANK":
            return self.mapped_blank(tok.value)
        if tok.kind == "STRING":
            return self.parse_literal_tail(tok.value)
        if tok.kind == "INTEGER":
            return literal(tok.value, XSD_INTEGER)
        if tok.kind == "DECIMAL":
            return literal(tok.value, XSD_DECIMAL)
        if tok.kind == "DOUBLE":
            return literal(tok.value, XSD_DOUBLE)
        if tok.kind == "WORD" and tok.value in ("true", "false"):
            return literal(tok.value, XSD_BOOLEAN)
        raise self.error(tok, f"expected a term, found {tok.kind!r}")

    def parse_literal_tail(self, lexical: str) -> Term:
        tok = self.peek()
        if tok.kind == "LANGTAG":
            self.next()
            return literal(lexical, language=tok.value)
        if tok.kind == "^^":
            self.next()
            dtype = self.parse_term()
            if dtype.kind != "iri":
                raise self.error(tok, "datatype must be an IRI")
            return literal(lexical, dtype.value)
        return literal(lexical)

    # blank node bookkeeping

    def fresh_blank(self) -> Term:
        node = Term("blank", f"b{self.blank_counter}")
        self.blank_counter += 1
        return node

    def mapped_blank(self, label: str) -> Term:
        node = self.blank_map.get(label)
        if node is None:
            node = self.fresh_blank()
            self.blank_map[label] = node
        return node

    def emit(self, subject: Term, predicate: Term, obj: Term) -> None:
        self.quads.append(Quad(subject, predicate, obj, self.current_graph))


# ---------------------------------------------------------------------------
# N-Quads parser
# ---------------------------------------------------------------------------


def _parse_nquads(text: str) -> Dataset:
    parser = _Parser(text, base="", allow_graphs=False)
    quads = []
    while True:
        tok = parser.peek()
        if tok.kind == "EOF":
            break
        subject = _nq_term(parser, position="subject")
        predicate = _nq_term(parser, position="predicate")
        obj = _nq_term(parser, position="object")
        graph: Optional[Term] = None
        if parser.peek().kind != ".":
            graph = _nq_term(parser, position="graph")
            if graph.kind != "iri":
                raise parser.error(tok, "graph label must be an IRI")
        parser.expect(".")
        quads.append(Quad(subject, predicate, obj, graph))
    return Dataset(quads)


def _nq_term(parser: _Parser, position: str) -> Term:
    tok = parser.next()
    if tok.kind == "IRIREF":
        try:
            return iri(tok.value)
        except ValueError:
            raise parser.error(tok, f"IRI must be absolute in N-Quads: {tok.value!r}")
    if tok.kind == "BLANK":
        if position in ("predicate", "graph"):
            raise parser.error(tok, f"blank node not allowed as {position}")
        return parser.mapped_blank(tok.value)
    if tok.kind == "STRING":
        if position != "object":
            raise parser.error(tok, f"literal not allowed as {position}")
        return parser.parse_literal_tail(tok.value)
    raise parser.error(tok, f"expected an N-Quads term, found {tok.kind!r}")


def syntax_for_path(path: str) -> str:
    """Map a file extension to its syntax: .ttl, .trig, .nq."""
    lowered = path.lower()
    if lowered.endswith(".ttl"):
        return "turtle"
    if lowered.endswith(".trig"):
        return "trig"
    if lowered.endswith(".nq"):
        return "nquads"
    raise ValueError(f"cannot infer RDF syntax from {path!r}")


def parse(text: str, syntax: str = "turtle", base: str = "") -> Dataset:
    """Parse a document into a Dataset.

    Relative IRIs resolve against ``base``; Turtle input lands in the
    default graph; blank-node labels are freshly scoped per call.  Raises
    RdfSyntaxError on any grammar violation (no partial results).
    """
    if syntax == "turtle":
        return _Parser(text, base, allow_graphs=False).parse_document()
    if syntax == "trig":
        return _Parser(text, base, allow_graphs=True).parse_document()
    if syntax == "nquads":
        return _parse_nquads(text)
    raise ValueError(f"unsupported input syntax: {syntax!r}")
