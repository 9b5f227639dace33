"""Term/Quad/Dataset model, parsing, and serialization."""
from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charlie.parser import RdfSyntaxError, parse, resolve_iri, syntax_for_path
from charlie.serializer import serialize
from charlie.terms import Dataset, Quad, Term, blank, iri, isomorphic, literal
from charlie.vocab import RDF_LANGSTRING, RDF_TYPE, XSD_INTEGER, XSD_STRING

from genutils import random_dataset
from oracles import brute_force_isomorphic


# --- terms ------------------------------------------------------------------


def test_iri_must_be_absolute():
    with pytest.raises(ValueError):
        iri("relative/path")
    assert iri("urn:x:y").value == "urn:x:y"


def test_blank_label_charset():
    assert blank("b0").value == "b0"
    with pytest.raises(ValueError):
        blank("not ok")
    with pytest.raises(ValueError):
        blank("")


def test_literal_defaults():
    plain = literal("hello")
    assert plain.datatype == XSD_STRING
    tagged = literal("bonjour", language="fr")
    assert tagged.datatype == RDF_LANGSTRING
    assert tagged.language == "fr"
    with pytest.raises(ValueError):
        Term("literal", "x", RDF_LANGSTRING)  # langString without tag


def test_literal_comparison_is_syntactic():
    assert literal("1", XSD_INTEGER) != literal("01", XSD_INTEGER)
    assert literal("a") != literal("a", language="en")


def test_quad_positions():
    with pytest.raises(ValueError):
        Quad(literal("x"), iri("urn:p:1"), iri("urn:o:1"))
    with pytest.raises(ValueError):
        Quad(iri("urn:s:1"), blank("b"), iri("urn:o:1"))
    with pytest.raises(ValueError):
        Quad(iri("urn:s:1"), iri("urn:p:1"), iri("urn:o:1"), graph=blank("g"))


def test_dataset_set_semantics():
    q = Quad(iri("urn:s:1"), iri("urn:p:1"), literal("x"))
    ds = Dataset([q, q])
    assert len(ds) == 1
    assert ds.add(q) == ds
    assert Dataset([q]) == ds


# --- IRI resolution ---------------------------------------------------------


@pytest.mark.parametrize(
    "base,ref,expected",
    [
        ("http://x/", "a", "http://x/a"),
        ("http://a/b/c/d;p?q", "g", "http://a/b/c/g"),
        ("http://a/b/c/d;p?q", "../g", "http://a/b/g"),
        ("http://a/b/c/d;p?q", "#s", "http://a/b/c/d;p?q#s"),
        ("http://a/b/c/d;p?q", "//g", "http://g"),
        ("http://a/b/c/d;p?q", "?y", "http://a/b/c/d;p?y"),
        ("http://a/b/c/d;p?q", "http://other/e", "http://other/e"),
    ],
)
def test_resolve_iri(base, ref, expected):
    assert resolve_iri(base, ref) == expected


# --- parsing ----------------------------------------------------------------


def test_parse_empty_document():
    assert parse("", "turtle", "http://x/") == Dataset()


def test_parse_single_triple_with_relative_resolution():
    ds = parse("<a> <b> <c> .", "turtle", "http://x/")
    assert ds == Dataset([Quad(iri("http://x/a"), iri("http://x/b"), iri("http://x/c"))])


def test_parse_trig_two_named_graphs():
    # expected quads expanded by hand from the TriG grammar
    text = """
    @prefix ex: <http://ex.org/> .
    ex:g1 { ex:s1 ex:p ex:o1 . ex:s1 ex:p ex:o2 . }
    GRAPH ex:g2 { ex:s2 ex:p ex:o1 . ex:s2 ex:q "lit" . }
    """
    ds = parse(text, "trig", "http://ex.org/")
    ex = "http://ex.org/"
    expected = Dataset(
        [
            Quad(iri(ex + "s1"), iri(ex + "p"), iri(ex + "o1"), iri(ex + "g1")),
            Quad(iri(ex + "s1"), iri(ex + "p"), iri(ex + "o2"), iri(ex + "g1")),
            Quad(iri(ex + "s2"), iri(ex + "p"), iri(ex + "o1"), iri(ex + "g2")),
            Quad(iri(ex + "s2"), iri(ex + "q"), literal("lit"), iri(ex + "g2")),
        ]
    )
    assert ds == expected


def test_parse_turtle_sugar():
    text = """
    @prefix s: <http://schema.org/> .
    @base <http://ex.org/> .
    <e> a s:Event ;
        s:name "Standup", "Sync"@en ;
        s:position 4 .
    """
    ds = parse(text, "turtle", "http://ex.org/")
    e = iri("http://ex.org/e")
    assert Quad(e, iri(RDF_TYPE), iri("http://schema.org/Event")) in ds
    assert Quad(e, iri("http://schema.org/name"), literal("Standup")) in ds
    assert Quad(e, iri("http://schema.org/name"), literal("Sync", language="en")) in ds
    assert Quad(e, iri("http://schema.org/position"), literal("4", XSD_INTEGER)) in ds


def test_parse_blank_nodes_relabeled_in_document_order():
    ds = parse(
        "_:x <urn:p:knows> _:y . _:y <urn:p:knows> _:x .", "turtle", "http://x/"
    )
    labels = {t.value for q in ds for t in (q.subject, q.object) if t.kind == "blank"}
    assert labels == {"b0", "b1"}
    first = next(iter(parse("_:zz <urn:p:knows> 'v' .", "turtle", "http://x/")))
    assert first.subject == blank("b0")


def test_parse_blank_node_property_list_and_collection():
    ds = parse(
        "[ <urn:p:has> (1 2) ] <urn:p:tag> 'x' .", "turtle", "http://x/"
    )
    # property list node + 2 collection cells
    blanks = {t.value for q in ds for t in (q.subject, q.object) if t.kind == "blank"}
    assert blanks == {"b0", "b1", "b2"}
    assert len(ds) == 6


def test_parse_errors_carry_position():
    with pytest.raises(RdfSyntaxError) as err:
        parse("<urn:a:b> <urn:c:d>\n  'no dot'", "turtle", "http://x/")
    assert err.value.line == 2
    with pytest.raises(RdfSyntaxError):
        parse("<urn:a:b> <urn:c:d> <urn:e:f> ", "turtle", "http://x/")  # missing '.'
    with pytest.raises(RdfSyntaxError):
        parse("ex:s ex:p ex:o .", "turtle", "http://x/")  # undeclared prefix


def test_parse_no_partial_results():
    with pytest.raises(RdfSyntaxError):
        parse("<urn:a:b> <urn:c:d> <urn:e:f> . <bad", "turtle", "http://x/")


def test_nquads_requires_absolute_iris():
    with pytest.raises(RdfSyntaxError):
        parse("<a> <urn:p:1> <urn:o:1> .", "nquads", "http://x/")


def test_nquads_named_graph_parses():
    ds = parse(
        '<urn:s:1> <urn:p:1> "v" <urn:g:1> .\n', "nquads", ""
    )
    assert ds == Dataset(
        [Quad(iri("urn:s:1"), iri("urn:p:1"), literal("v"), iri("urn:g:1"))]
    )


def test_turtle_rejects_graph_blocks():
    with pytest.raises(RdfSyntaxError):
        parse("<urn:g:1> { <urn:s:1> <urn:p:1> <urn:o:1> . }", "turtle", "")


def test_syntax_for_path():
    assert syntax_for_path("profile.ttl") == "turtle"
    assert syntax_for_path("KB.TRIG") == "trig"
    assert syntax_for_path("dump.nq") == "nquads"
    with pytest.raises(ValueError):
        syntax_for_path("data.rdf")


# --- serialization ----------------------------------------------------------


def test_serialize_empty_dataset():
    assert serialize(Dataset(), "nquads") == ""


def test_serialize_single_ground_quad():
    ds = Dataset([Quad(iri("urn:s:1"), iri("urn:p:1"), literal("v"))])
    assert serialize(ds, "nquads") == '<urn:s:1> <urn:p:1> "v" .\n'


def test_serialize_lines_strictly_sorted():
    rng = random.Random(7)
    for _ in range(25):
        text = serialize(random_dataset(rng), "nquads")
        lines = text.splitlines()
        assert lines == sorted(lines)
        assert len(set(lines)) == len(lines)


def test_string_escaping_round_trip():
    tricky = literal('say "hi"\n\tdone\\', )
    ds = Dataset([Quad(iri("urn:s:1"), iri("urn:p:1"), tricky)])
    again = parse(serialize(ds, "nquads"), "nquads", "")
    assert again == ds


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip_both_syntaxes(seed):
    ds = random_dataset(random.Random(seed), max_quads=20)
    for syntax in ("nquads", "trig"):
        again = parse(serialize(ds, syntax), syntax, "")
        assert isomorphic(again, ds)


def test_round_trip_matches_bijection_oracle():
    rng = random.Random(11)
    for _ in range(20):
        ds = random_dataset(rng, max_quads=8, max_blanks=4)
        again = parse(serialize(ds, "nquads"), "nquads", "")
        assert brute_force_isomorphic(again, ds)


def test_parse_deterministic_up_to_relabeling():
    text = "_:m <urn:p:knows> _:n . <urn:s:1> <urn:p:1> _:m ."
    assert parse(text, "turtle", "") == parse(text, "turtle", "")


# --- isomorphism ------------------------------------------------------------


def test_isomorphic_identity():
    ds = parse("<urn:s:1> <urn:p:1> 'v' .", "turtle", "")
    assert isomorphic(ds, ds)


def test_isomorphic_detects_ground_change():
    a = parse("<urn:s:1> <urn:p:1> 'v' .", "turtle", "")
    b = parse("<urn:s:1> <urn:p:1> 'w' .", "turtle", "")
    assert not isomorphic(a, b)


def test_isomorphic_blank_renaming():
    a = parse("_:a <urn:p:knows> _:b .", "turtle", "")
    b = parse("_:x <urn:p:knows> _:y .", "turtle", "")
    assert brute_force_isomorphic(a, b)  # oracle: 2 bijections
    assert isomorphic(a, b)
