"""Core timestamping primitives.

A stamp binds content to a point in time through two hashes:

* the content hash ``H1`` is SHA-256 over the canonical text (UTF-8),
* the stamp hash ``H2`` is SHA-256 over the lowercase hex of ``H1``
  concatenated with the RFC 3339 UTC timestamp, both UTF-8.

``H2`` is what gets signed and anchored, so any change to either the
text or the claimed time invalidates it.  Stamps are also linked into a
global hash chain (``chain = SHA-256(prev_chain || stamp_hash)``) whose
genesis value is 32 zero bytes, which fixes their relative order.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

SIGNATURE_ALGORITHM = "ed25519"

TIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class StampError(Exception):
    """Base class for stamping failures."""


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def rfc3339(t: datetime) -> str:
    """Format an aware UTC datetime as ``YYYY-MM-DDTHH:MM:SSZ``.

    Stamp times carry second precision only; sub-second parts are
    truncated before formatting so the hashed string is reproducible.
    """
    if t.tzinfo is None:
        raise ValueError("naive datetime; stamp times must be UTC-aware")
    t = t.astimezone(timezone.utc).replace(microsecond=0)
    return t.strftime(TIME_FORMAT)


def parse_rfc3339(s: str) -> datetime:
    return datetime.strptime(s, TIME_FORMAT).replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class Hash256:
    """An immutable 32-byte SHA-256 value.

    Rendered as 64 lowercase hex characters everywhere outside the
    chain/tree computations, which operate on the raw bytes.
    """

    data: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.data, bytes) or len(self.data) != 32:
            raise ValueError("Hash256 requires exactly 32 bytes")

    @property
    def hex(self) -> str:
        return self.data.hex()

    @classmethod
    def from_hex(cls, s: str) -> "Hash256":
        if len(s) != 64:
            raise ValueError("expected 64 hex characters")
        return cls(bytes.fromhex(s))

    @classmethod
    def digest(cls, payload: bytes) -> "Hash256":
        return cls(hashlib.sha256(payload).digest())

    def __str__(self) -> str:
        return self.hex


ZERO_HASH = Hash256(b"\x00" * 32)


def hash_content(text: str) -> Hash256:
    """Content hash H1: SHA-256 over the canonical text, UTF-8 encoded."""
    return Hash256.digest(text.encode("utf-8"))


def derive_stamp_hash(content_hash: Hash256, t: datetime) -> Hash256:
    """Stamp hash H2: SHA-256 over ``hex(H1) + rfc3339(t)`` (UTF-8)."""
    payload = (content_hash.hex + rfc3339(t)).encode("utf-8")
    return Hash256.digest(payload)


def extend_chain(prev: Hash256, stamp_hash: Hash256) -> Hash256:
    """Next chain value: SHA-256 over the two raw 32-byte values."""
    return Hash256.digest(prev.data + stamp_hash.data)


# ---------------------------------------------------------------------------
# signing keys


@dataclass
class TsaKeyPair:
    """Signing keypair of the timestamping authority.

    Stored as a small JSON file holding hex-encoded raw Ed25519 key
    bytes.  The private half never leaves that file; receipts only ever
    carry the public half.
    """

    key_id: str
    private_key: bytes
    public_key: bytes
    algorithm: str = SIGNATURE_ALGORITHM

    @classmethod
    def generate(cls) -> "TsaKeyPair":
        priv = Ed25519PrivateKey.generate()
        pub = priv.public_key()
        return cls(
            key_id=secrets.token_hex(8),
            private_key=priv.private_bytes_raw(),
            public_key=pub.public_bytes_raw(),
        )

    @classmethod
    def load(cls, path: str) -> "TsaKeyPair":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("algorithm") != SIGNATURE_ALGORITHM:
            raise StampError(f"unsupported key algorithm: {doc.get('algorithm')!r}")
        return cls(
            key_id=doc["key_id"],
            private_key=bytes.fromhex(doc["private_key"]),
            public_key=bytes.fromhex(doc["public_key"]),
        )

    def save(self, path: str) -> None:
        doc = {
            "key_id": self.key_id,
            "algorithm": self.algorithm,
            "private_key": self.private_key.hex(),
            "public_key": self.public_key.hex(),
        }
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)

    @classmethod
    def load_or_create(cls, path: str) -> "TsaKeyPair":
        """Load the keypair at ``path``, generating it on first run."""
        if os.path.exists(path):
            return cls.load(path)
        pair = cls.generate()
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        pair.save(path)
        return pair


def sign_stamp(stamp_hash: Hash256, key: TsaKeyPair) -> bytes:
    """Sign the 32 raw bytes of H2 with the authority key."""
    priv = Ed25519PrivateKey.from_private_bytes(key.private_key)
    return priv.sign(stamp_hash.data)


def verify_signature(stamp_hash: Hash256, signature: bytes, public_key: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(
            signature, stamp_hash.data
        )
        return True
    except (InvalidSignature, ValueError):
        return False


# ---------------------------------------------------------------------------
# stamps


@dataclass(frozen=True)
class StampCore:
    """The verifiable core of one stamp.

    ``prev_chain`` and ``chain_hash`` are unset until the stamp is
    linked into the store's global chain; every persisted stamp has
    them.
    """

    content_hash: Hash256
    stamped_at: datetime
    stamp_hash: Hash256
    signature: Optional[bytes] = None
    tsa_key_id: Optional[str] = None
    prev_chain: Optional[Hash256] = None
    chain_hash: Optional[Hash256] = None

    def to_json(self) -> dict:
        return {
            "content_hash": self.content_hash.hex,
            "stamped_at": rfc3339(self.stamped_at),
            "stamp_hash": self.stamp_hash.hex,
            "signature": self.signature.hex() if self.signature else None,
            "tsa_key_id": self.tsa_key_id,
            "prev_chain": self.prev_chain.hex if self.prev_chain else None,
            "chain_hash": self.chain_hash.hex if self.chain_hash else None,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "StampCore":
        return cls(
            content_hash=Hash256.from_hex(doc["content_hash"]),
            stamped_at=parse_rfc3339(doc["stamped_at"]),
            stamp_hash=Hash256.from_hex(doc["stamp_hash"]),
            signature=bytes.fromhex(doc["signature"]) if doc.get("signature") else None,
            tsa_key_id=doc.get("tsa_key_id"),
            prev_chain=Hash256.from_hex(doc["prev_chain"]) if doc.get("prev_chain") else None,
            chain_hash=Hash256.from_hex(doc["chain_hash"]) if doc.get("chain_hash") else None,
        )


def issue_stamp(text: str, t: datetime, key: Optional[TsaKeyPair] = None) -> StampCore:
    """Issue an (unlinked) stamp over canonical text at time ``t``.

    The caller links it into a chain afterwards; see ``link_chain``.
    """
    t = t.astimezone(timezone.utc).replace(microsecond=0)
    h1 = hash_content(text)
    h2 = derive_stamp_hash(h1, t)
    sig = sign_stamp(h2, key) if key else None
    return StampCore(
        content_hash=h1,
        stamped_at=t,
        stamp_hash=h2,
        signature=sig,
        tsa_key_id=key.key_id if key else None,
    )


def link_chain(core: StampCore, prev: Hash256) -> StampCore:
    """Return a copy of ``core`` linked after chain value ``prev``."""
    return replace(core, prev_chain=prev, chain_hash=extend_chain(prev, core.stamp_hash))


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    """Outcome of re-verifying one stamp.

    Checks that cannot be performed (no signature, no chain fields, no
    anchor evidence) are ``None`` and excluded from ``overall_valid``,
    which is the conjunction of the applicable ones.
    """

    content_hash_matches: bool
    stamp_hash_matches: bool
    signature_valid: Optional[bool] = None
    chain_consistent: Optional[bool] = None
    anchored: Optional[bool] = None

    _CHECKS = (
        "content_hash_matches",
        "stamp_hash_matches",
        "signature_valid",
        "chain_consistent",
        "anchored",
    )

    @property
    def overall_valid(self) -> bool:
        return all(
            getattr(self, name) is not False for name in self._CHECKS
        ) and any(getattr(self, name) is not None for name in self._CHECKS)

    def failing_checks(self) -> list[str]:
        return [name for name in self._CHECKS if getattr(self, name) is False]

    def to_json(self) -> dict:
        doc = {name: getattr(self, name) for name in self._CHECKS}
        doc["overall_valid"] = self.overall_valid
        return doc


def verify_stamp(
    text: str,
    claimed_time: datetime,
    core: StampCore,
    public_key: Optional[bytes] = None,
    anchor_evidence=None,
) -> VerificationReport:
    """Re-verify a stamp against the text and time it claims to cover.

    * content check: SHA-256 of ``text`` equals the stored content hash
    * stamp check: H2 recomputed from the stored content hash and
      ``claimed_time`` equals the stored stamp hash
    * signature check (if a signature and public key are present)
    * chain check: ``chain_hash`` recomputes from ``prev_chain``
    * anchor check (if evidence present): the inclusion proof is sound,
      starts at this stamp's hash and ends at the receipt's Merkle root

    ``anchor_evidence`` is an ``(InclusionProof, AnchorReceipt)`` pair;
    only the ``leaf``/``root`` fields and ``verify()`` are used here so
    this module stays independent of the anchoring code.
    """
    recomputed_h1 = hash_content(text)
    content_ok = recomputed_h1 == core.content_hash
    stamp_ok = derive_stamp_hash(core.content_hash, claimed_time) == core.stamp_hash

    signature_ok: Optional[bool] = None
    if core.signature is not None and public_key is not None:
        signature_ok = verify_signature(core.stamp_hash, core.signature, public_key)

    chain_ok: Optional[bool] = None
    if core.prev_chain is not None and core.chain_hash is not None:
        chain_ok = extend_chain(core.prev_chain, core.stamp_hash) == core.chain_hash

    anchored: Optional[bool] = None
    if anchor_evidence is not None:
        proof, receipt = anchor_evidence
        anchored = (
            proof.leaf == core.stamp_hash
            and proof.verify()
            and proof.root == receipt.merkle_root
        )

    return VerificationReport(
        content_hash_matches=content_ok,
        stamp_hash_matches=stamp_ok,
        signature_valid=signature_ok,
        chain_consistent=chain_ok,
        anchored=anchored,
    )
