"""IRI constants shared across modules."""

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDF_TYPE = RDF + "type"
RDF_FIRST = RDF + "first"
RDF_REST = RDF + "rest"
RDF_NIL = RDF + "nil"
RDF_LANGSTRING = RDF + "langString"

XSD = "http://www.w3.org/2001/XMLSchema#"
XSD_STRING = XSD + "string"
XSD_BOOLEAN = XSD + "boolean"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_FLOAT = XSD + "float"
XSD_DATETIME = XSD + "dateTime"
XSD_DURATION = XSD + "duration"

SCHEMA = "http://schema.org/"
SCHEMA_EVENT = SCHEMA + "Event"
SCHEMA_NAME = SCHEMA + "name"
SCHEMA_START = SCHEMA + "startDate"
SCHEMA_END = SCHEMA + "endDate"
SCHEMA_ATTENDEE = SCHEMA + "attendee"

FOAF = "http://xmlns.com/foaf/0.1/"
FOAF_NAME = FOAF + "name"

# Agent vocabulary minted for this system.
CV = "urn:charlie:vocab:"
CV_AGENT_ENDPOINT = CV + "agentEndpoint"
CV_PUBLIC_KEY = CV + "publicKey"
CV_KEY_VALUE = CV + "keyValue"
CV_DESCRIPTION = CV + "description"
CV_CONFLICTS_WITH = CV + "conflictsWith"
CV_APPROVED_BY = CV + "approvedBy"
CV_CONFIRMED = CV + "confirmed"
CV_REQUESTED_GRAPH = CV + "requestedGraph"
CV_APPLICABLE = CV + "applicable"
CV_SIGNER = CV + "signer"
CV_CANONICAL_HASH = CV + "canonicalHash"
CV_ISSUED_AT = CV + "issuedAt"

# Rule builtins.
CB = "urn:charlie:builtin:"

# ODRL-subset policy vocabulary.
OL = "urn:charlie:odrl-lite:"
OL_PERMISSION = OL + "Permission"
OL_PROHIBITION = OL + "Prohibition"
OL_ACTION = OL + "action"
OL_TARGET = OL + "target"
OL_ASSIGNEE = OL + "assignee"
OL_ANY_AGENT = OL + "anyAgent"
OL_CONSTRAINT = OL + "constraint"
OL_OBLIGATION = OL + "obligation"
OL_KIND = OL + "kind"
OL_VALUE = OL + "value"

# Trust vocabulary.
CT = "urn:charlie:trust:"
CT_ASSERTION = CT + "Assertion"
CT_SOURCE = CT + "source"
CT_SCOPE = CT + "scope"
CT_MIN_PROVENANCE = CT + "minProvenance"
CT_GRANTED = CT + "granted"
CT_DECIDED_BY = CT + "decidedBy"
ALL_TOPICS = CT + "allTopics"
UNTYPED_TOPIC = "urn:charlie:topic:untyped"

# Reserved graph names.
TRUST_GRAPH = "urn:charlie:trust"
POLICIES_GRAPH = "urn:charlie:policies"
INFERRED_GRAPH = "urn:charlie:inferred"
META_GRAPH = "urn:charlie:meta"
BELIEF_PREFIX = "urn:charlie:belief:"

DEFAULT_PURPOSE = "urn:charlie:purpose:scheduling"
