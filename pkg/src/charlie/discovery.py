"""WebID profile discovery.

A WebID dereferences (fragment stripped) to a Turtle document describing
the entity: display name, agent endpoint, and published public keys.  The
fetcher is injected so tests and the demo control the wire; fetched
documents are cached per resolver keyed by document IRI, with
single-flight deduplication for concurrent fetches.
"""
from __future__ import annotations

import base64
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from .parser import RdfSyntaxError, parse
from .terms import Dataset, iri
from .vocab import CV_AGENT_ENDPOINT, CV_KEY_VALUE, CV_PUBLIC_KEY, FOAF_NAME

# A fetcher maps a document IRI to (HTTP status, body bytes).
Fetcher = Callable[[str], tuple[int, bytes]]


class FetchError(Exception):
    def __init__(self, status: int) -> None:
        super().__init__(f"profile fetch failed with status {status}")
        self.status = status


class ProfileParseError(Exception):
    pass


class MissingAgentEndpoint(Exception):
    """Profile parsed fine but names no agent endpoint."""


@dataclass(frozen=True)
class WebIDProfile:
    webid: str
    name: str
    agent_endpoint: str
    public_keys: tuple[tuple[str, bytes], ...] = ()  # (key-id IRI, raw Ed25519 key)


def document_iri(webid: str) -> str:
    return webid.split("#", 1)[0]


def extract_profile(webid: str, doc: Dataset) -> WebIDProfile:
    subject = iri(webid)
    name_quad = next(doc.match(subject, iri(FOAF_NAME)), None)
    if name_quad is None or name_quad.object.kind != "literal":
        raise ProfileParseError(f"profile for {webid} has no foaf:name")
    endpoint_quad = next(doc.match(subject, iri(CV_AGENT_ENDPOINT)), None)
    if endpoint_quad is None or endpoint_quad.object.kind != "iri":
        raise MissingAgentEndpoint(webid)
    keys = []
    for key_quad in doc.match(subject, iri(CV_PUBLIC_KEY)):
        key_node = key_quad.object
        if key_node.kind != "iri":
            raise ProfileParseError("public key id must be an IRI")
        value_quad = next(doc.match(key_node, iri(CV_KEY_VALUE)), None)
        if value_quad is None or value_quad.object.kind != "literal":
            raise ProfileParseError(f"key {key_node.value} has no value")
        try:
            raw = base64.b64decode(value_quad.object.value, validate=True)
        except ValueError as exc:
            raise ProfileParseError(f"key {key_node.value}: {exc}") from None
        keys.append((key_node.value, raw))
    keys.sort(key=lambda pair: pair[0])
    return WebIDProfile(
        webid=webid,
        name=name_quad.object.value,
        agent_endpoint=endpoint_quad.object.value,
        public_keys=tuple(keys),
    )


class ProfileResolver:
    """Fetch-and-cache WebID profiles.

    The cache is keyed by document IRI, so `.../profile#me` and
    `.../profile#agent` share one fetch.  Concurrent fetches of the same
    document collapse into a single request.
    """

    def __init__(self, fetcher: Fetcher) -> None:
        self._fetcher = fetcher
        self._cache: dict[str, Dataset] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self.fetch_count = 0  # observable for tests

    def _document(self, doc_iri: str) -> Dataset:
        with self._guard:
            cached = self._cache.get(doc_iri)
            if cached is not None:
                return cached
            lock = self._locks.setdefault(doc_iri, threading.Lock())
        with lock:
            with self._guard:
                cached = self._cache.get(doc_iri)
                if cached is not None:
                    return cached
            status, body = self._fetcher(doc_iri)
            if status != 200:
                raise FetchError(status)
            try:
                doc = parse(body.decode("utf-8"), "turtle", doc_iri)
            except (RdfSyntaxError, UnicodeDecodeError) as exc:
                raise ProfileParseError(str(exc)) from None
            with self._guard:
                self._cache[doc_iri] = doc
                self.fetch_count += 1
            return doc

    def fetch_profile(self, webid: str) -> WebIDProfile:
        return extract_profile(webid, self._document(document_iri(webid)))

    def invalidate(self, webid_or_doc: Optional[str] = None) -> None:
        with self._guard:
            if webid_or_doc is None:
                self._cache.clear()
            else:
                self._cache.pop(document_iri(webid_or_doc), None)
