#!/usr/bin/env python3
"""Sign random datasets, mutate one quad at a time, and count verdicts."""
import argparse
import random
import sys
from datetime import datetime, timezone

from charlie.provenance import generate_private_key, public_key_bytes, sign, verify
from charlie.terms import Dataset, Quad, iri, literal


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cases", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    key = generate_private_key(bytes([9]) * 32)
    pub = public_key_bytes(key)
    now = datetime(2024, 11, 4, 8, tzinfo=timezone.utc)
    iris = [iri(f"http://example.org/{c}") for c in "abcdef"]

    false_accepts = false_rejects = 0
    for case in range(args.cases):
        quads = {
            Quad(rng.choice(iris), rng.choice(iris), literal(str(rng.randint(0, 99))))
            for _ in range(rng.randint(1, 8))
        }
        ds = Dataset(quads)
        record = sign(ds, key, "urn:who:signer", "urn:key:1", now)
        if not verify(ds, record, pub).accepted:
            false_rejects += 1
        victim = rng.choice(sorted(ds, key=repr))
        mutants = [
            ds.add(Quad(iri("urn:x:new"), rng.choice(iris), literal(f"m{case}"))),
            ds.without([victim]),
            ds.without([victim]).add(
                Quad(victim.subject, victim.predicate, literal(f"alt{case}"))
            ),
        ]
        for mutant in mutants:
            if mutant != ds and verify(mutant, record, pub).accepted:
                false_accepts += 1
    print(f"cases={args.cases} false_accepts={false_accepts} false_rejects={false_rejects}")
    return 0 if false_accepts == 0 and false_rejects == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
