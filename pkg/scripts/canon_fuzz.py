#!/usr/bin/env python3
"""Fuzz canonicalization against the brute-force isomorphism oracle.

For N random datasets: relabel+shuffle each and require identical
canonical bytes, then compare canonical-form equality of random pairs
with bijection-enumeration isomorphism.
"""
import argparse
import random
import sys
import time
from itertools import permutations

from charlie.canon import canonicalize
from charlie.terms import Dataset, Quad, Term, blank, iri, literal


def random_dataset(rng, max_quads, max_blanks):
    iris = [iri(f"http://example.org/{c}") for c in "pqrs"]
    blanks = [f"n{i}" for i in range(rng.randint(0, max_blanks))]
    quads = set()
    for _ in range(rng.randint(0, max_quads)):
        s = blank(rng.choice(blanks)) if blanks and rng.random() < 0.5 else rng.choice(iris)
        o = blank(rng.choice(blanks)) if blanks and rng.random() < 0.4 else literal(str(rng.randint(0, 5)))
        quads.add(Quad(s, rng.choice(iris), o))
    return Dataset(quads)


def relabel(rng, ds):
    labels = sorted({t.value for q in ds for t in (q.subject, q.object) if t.kind == "blank"})
    mapping = dict(zip(labels, rng.sample([f"x{i}" for i in range(len(labels))], len(labels))))
    remap = lambda t: blank(mapping[t.value]) if t.kind == "blank" else t
    return Dataset(Quad(remap(q.subject), q.predicate, remap(q.object), q.graph) for q in ds)


def isomorphic_oracle(a, b):
    la = sorted({t.value for q in a for t in (q.subject, q.object) if t.kind == "blank"})
    lb = sorted({t.value for q in b for t in (q.subject, q.object) if t.kind == "blank"})
    if len(la) != len(lb) or len(a) != len(b):
        return False
    def project(ds, mapping):
        key = lambda t: ("b", mapping[t.value]) if t.kind == "blank" else ("t", t.value, t.datatype, t.language)
        return frozenset((key(q.subject), q.predicate.value, key(q.object)) for q in ds)
    target = project(b, {x: x for x in lb})
    return any(project(a, dict(zip(la, p))) == target for p in permutations(lb))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cases", type=int, default=500)
    parser.add_argument("--max-quads", type=int, default=10)
    parser.add_argument("--max-blanks", type=int, default=6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    started = time.monotonic()
    previous = None
    for case in range(args.cases):
        ds = random_dataset(rng, args.max_quads, args.max_blanks)
        if canonicalize(ds).nquads != canonicalize(relabel(rng, ds)).nquads:
            print(f"FAIL: relabeling changed canonical form (case {case})")
            return 1
        if previous is not None:
            equal = canonicalize(ds).nquads == canonicalize(previous).nquads
            if equal != isomorphic_oracle(ds, previous):
                print(f"FAIL: canonical equality disagrees with oracle (case {case})")
                return 1
        previous = ds
    elapsed = time.monotonic() - started
    print(f"OK: {args.cases} cases, {elapsed:.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
