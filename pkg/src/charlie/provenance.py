"""Detached Ed25519 signatures over canonical dataset serializations.

A ProvenanceRecord travels with a payload and lets the recipient check
that the dataset is byte-for-byte (up to blank relabeling) what the signer
signed.  Wire form is JSON with keys signer, keyId, algorithm,
canonicalHash, signature, issuedAt.
"""
from __future__ import annotations

import base64
import hashlib
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional, Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .canon import canonicalize
from .terms import Dataset

ALGORITHM = "ed25519-rdfc-sha256"

PublicKeyLike = Union[Ed25519PublicKey, bytes]


def format_timestamp(dt: datetime) -> str:
    """RFC 3339 UTC with second precision, e.g. 2024-11-04T08:00:00Z."""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    cleaned = text.replace("Z", "+00:00")
    dt = datetime.fromisoformat(cleaned)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


@dataclass(frozen=True)
class ProvenanceRecord:
    signer: str  # WebID IRI
    key_id: str
    algorithm: str
    canonical_hash: str  # lowercase hex SHA-256 of the canonical N-Quads bytes
    signature: str  # base64 of the 64-byte Ed25519 signature
    issued_at: str  # RFC 3339 UTC

    def to_json(self) -> dict:
        return {
            "signer": self.signer,
            "keyId": self.key_id,
            "algorithm": self.algorithm,
            "canonicalHash": self.canonical_hash,
            "signature": self.signature,
            "issuedAt": self.issued_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProvenanceRecord":
        return cls(
            signer=data["signer"],
            key_id=data["keyId"],
            algorithm=data["algorithm"],
            canonical_hash=data["canonicalHash"],
            signature=data["signature"],
            issued_at=data["issuedAt"],
        )


@dataclass(frozen=True)
class VerifyResult:
    accepted: bool
    reason: Optional[str] = None  # hash-mismatch | bad-signature | bad-algorithm

    def __bool__(self) -> bool:
        return self.accepted


ACCEPTED = VerifyResult(True)


def sign(
    ds: Dataset,
    private_key: Ed25519PrivateKey,
    signer: str,
    key_id: str,
    now: datetime,
) -> ProvenanceRecord:
    canonical = canonicalize(ds).nquads.encode("utf-8")
    return ProvenanceRecord(
        signer=signer,
        key_id=key_id,
        algorithm=ALGORITHM,
        canonical_hash=hashlib.sha256(canonical).hexdigest(),
        signature=base64.b64encode(private_key.sign(canonical)).decode("ascii"),
        issued_at=format_timestamp(now),
    )


def _as_public_key(key: PublicKeyLike) -> Ed25519PublicKey:
    if isinstance(key, bytes):
        return Ed25519PublicKey.from_public_bytes(key)
    return key


def verify(ds: Dataset, record: ProvenanceRecord, public_key: PublicKeyLike) -> VerifyResult:
    if record.algorithm != ALGORITHM:
        return VerifyResult(False, "bad-algorithm")
    canonical = canonicalize(ds).nquads.encode("utf-8")
    if hashlib.sha256(canonical).hexdigest() != record.canonical_hash:
        return VerifyResult(False, "hash-mismatch")
    try:
        raw = base64.b64decode(record.signature, validate=True)
        _as_public_key(public_key).verify(raw, canonical)
    except (InvalidSignature, ValueError):
        return VerifyResult(False, "bad-signature")
    return ACCEPTED


# --- key handling ----------------------------------------------------------


def generate_private_key(seed: Optional[bytes] = None) -> Ed25519PrivateKey:
    if seed is None:
        return Ed25519PrivateKey.generate()
    if len(seed) != 32:
        raise ValueError("Ed25519 seed must be exactly 32 bytes")
    return Ed25519PrivateKey.from_private_bytes(seed)


def public_key_bytes(private_key: Ed25519PrivateKey) -> bytes:
    from cryptography.hazmat.primitives.serialization import (
        Encoding,
        PublicFormat,
    )

    return private_key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def save_key_file(path: str, private_key: Ed25519PrivateKey) -> None:
    """Key file format: the 32-byte seed, base64, one line."""
    from cryptography.hazmat.primitives.serialization import (
        Encoding,
        NoEncryption,
        PrivateFormat,
    )

    seed = private_key.private_bytes(
        Encoding.Raw, PrivateFormat.Raw, NoEncryption()
    )
    with open(path, "w", encoding="ascii") as fh:
        fh.write(base64.b64encode(seed).decode("ascii") + "\n")


def load_key_file(path: str) -> Ed25519PrivateKey:
    with open(path, "r", encoding="ascii") as fh:
        seed = base64.b64decode(fh.read().strip(), validate=True)
    return generate_private_key(seed)
