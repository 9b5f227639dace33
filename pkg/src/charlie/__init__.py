"""Semi-autonomous personal agents negotiating over signed RDF datasets.

The pieces, bottom up: an RDF core (`terms`, `parser`, `serializer`),
dataset canonicalization and detached signatures (`canon`, `provenance`),
a forward-chaining rule engine (`rules`, `gates`), usage-control policies
(`policy`), belief admission (`trust`), WebID discovery (`discovery`), the
negotiation wire protocol (`protocol`), the pluggable natural-language
interpreter (`interpreter`), and the agent runtime with its HTTP server,
demo scenario, and CLI (`kb`, `runtime`, `server`, `demo`, `cli`).
"""

__version__ = "0.1.0"

from .terms import Dataset, Quad, Term, blank, iri, isomorphic, literal  # noqa: F401
from .parser import RdfSyntaxError, parse  # noqa: F401
from .serializer import serialize  # noqa: F401
from .canon import BlankNodeLimitExceeded, CanonicalForm, canonicalize  # noqa: F401
from .provenance import ProvenanceRecord, VerifyResult, sign, verify  # noqa: F401
