"""WebID profile fetching, caching, and single-flight."""
from __future__ import annotations

import base64
import threading
import time

import pytest

from charlie.discovery import (
    FetchError,
    MissingAgentEndpoint,
    ProfileParseError,
    ProfileResolver,
)
from charlie.provenance import generate_private_key, public_key_bytes

KEY = generate_private_key(b"\x44" * 32)
KEY_B64 = base64.b64encode(public_key_bytes(KEY)).decode()

PROFILE_DOC = f"""\
@prefix foaf: <http://xmlns.com/foaf/0.1/> .
@prefix cv: <urn:charlie:vocab:> .

<#me> foaf:name "Nigel" ;
    cv:agentEndpoint <http://127.0.0.1:8702> ;
    cv:publicKey <#key-1> .

<#key-1> cv:keyValue "{KEY_B64}" .

<#agent> foaf:name "Nigel's agent" ;
    cv:agentEndpoint <http://127.0.0.1:8702> .
"""

DOC_IRI = "https://nigel.example/profile"


def fixture_fetcher(responses: dict[str, tuple[int, bytes]]):
    calls = []

    def fetch(doc_iri: str) -> tuple[int, bytes]:
        calls.append(doc_iri)
        return responses.get(doc_iri, (404, b""))

    fetch.calls = calls  # type: ignore[attr-defined]
    return fetch


def test_full_profile_extraction():
    resolver = ProfileResolver(fixture_fetcher({DOC_IRI: (200, PROFILE_DOC.encode())}))
    profile = resolver.fetch_profile(DOC_IRI + "#me")
    assert profile.name == "Nigel"
    assert profile.agent_endpoint == "http://127.0.0.1:8702"
    assert profile.public_keys == ((DOC_IRI + "#key-1", public_key_bytes(KEY)),)


def test_missing_endpoint():
    doc = '@prefix foaf: <http://xmlns.com/foaf/0.1/> . <#me> foaf:name "X" .'
    resolver = ProfileResolver(fixture_fetcher({DOC_IRI: (200, doc.encode())}))
    with pytest.raises(MissingAgentEndpoint):
        resolver.fetch_profile(DOC_IRI + "#me")


def test_http_404():
    resolver = ProfileResolver(fixture_fetcher({}))
    with pytest.raises(FetchError) as err:
        resolver.fetch_profile(DOC_IRI + "#me")
    assert err.value.status == 404


def test_unparseable_profile():
    resolver = ProfileResolver(fixture_fetcher({DOC_IRI: (200, b"<#me> foaf:name")}))
    with pytest.raises(ProfileParseError):
        resolver.fetch_profile(DOC_IRI + "#me")


def test_missing_name_is_parse_error():
    doc = "@prefix cv: <urn:charlie:vocab:> . <#me> cv:agentEndpoint <http://h:1> ."
    resolver = ProfileResolver(fixture_fetcher({DOC_IRI: (200, doc.encode())}))
    with pytest.raises(ProfileParseError):
        resolver.fetch_profile(DOC_IRI + "#me")


def test_fragments_share_one_fetch():
    fetch = fixture_fetcher({DOC_IRI: (200, PROFILE_DOC.encode())})
    resolver = ProfileResolver(fetch)
    me = resolver.fetch_profile(DOC_IRI + "#me")
    agent = resolver.fetch_profile(DOC_IRI + "#agent")
    assert me.name == "Nigel" and agent.name == "Nigel's agent"
    assert len(fetch.calls) == 1


def test_cache_invalidation_refetches():
    fetch = fixture_fetcher({DOC_IRI: (200, PROFILE_DOC.encode())})
    resolver = ProfileResolver(fetch)
    resolver.fetch_profile(DOC_IRI + "#me")
    resolver.fetch_profile(DOC_IRI + "#me")
    assert len(fetch.calls) == 1
    resolver.invalidate(DOC_IRI + "#me")
    resolver.fetch_profile(DOC_IRI + "#me")
    assert len(fetch.calls) == 2


def test_deterministic_given_fixed_responses():
    fetch = fixture_fetcher({DOC_IRI: (200, PROFILE_DOC.encode())})
    resolver = ProfileResolver(fetch)
    assert resolver.fetch_profile(DOC_IRI + "#me") == resolver.fetch_profile(DOC_IRI + "#me")


def test_single_flight_under_concurrency():
    started = threading.Event()

    def slow_fetch(doc_iri: str):
        started.set()
        time.sleep(0.05)
        slow_fetch.count += 1  # type: ignore[attr-defined]
        return (200, PROFILE_DOC.encode())

    slow_fetch.count = 0  # type: ignore[attr-defined]
    resolver = ProfileResolver(slow_fetch)
    results = []

    def worker():
        results.append(resolver.fetch_profile(DOC_IRI + "#me"))

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert slow_fetch.count == 1
    assert len(results) == 8 and all(r == results[0] for r in results)
