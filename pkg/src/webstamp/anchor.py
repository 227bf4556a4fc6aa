"""Batch anchoring of stamp hashes.

Pending stamp hashes are sealed into a Merkle tree (pairwise SHA-256
over raw bytes, odd node duplicated, single leaf is its own root) and
the root is committed to a ledger as a Base58Check address built from
its first 20 bytes.  Each leaf gets an inclusion proof so one ledger
entry vouches for the whole batch.

The default ledger is a local append-only journal that mimics the shape
of a blockchain payment: every anchor records a fixed, informational
amount of 1 satoshi (0.00000001 BTC).  A remote HTTP anchoring client
with the same interface is provided for production use.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Optional, Sequence

from .stampcore import Hash256, rfc3339

SATOSHI_BTC = "0.00000001"
ADDRESS_VERSION = 0x00

B58_ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"


class AnchorError(Exception):
    pass


# ---------------------------------------------------------------------------
# Merkle tree


def _merkle_levels(leaves: Sequence[Hash256]) -> list[list[Hash256]]:
    """All levels bottom-up; duplicates the last node of an odd level."""
    if not leaves:
        raise AnchorError("cannot build a Merkle tree over zero leaves")
    levels = [list(leaves)]
    while len(levels[-1]) > 1:
        cur = levels[-1]
        if len(cur) % 2 == 1:
            cur = cur + [cur[-1]]
        nxt = [
            Hash256.digest(cur[i].data + cur[i + 1].data)
            for i in range(0, len(cur), 2)
        ]
        levels.append(nxt)
    return levels


def build_merkle(leaves: Sequence[Hash256]) -> Hash256:
    """Merkle root of the given leaves (a single leaf is its own root)."""
    return _merkle_levels(leaves)[-1][0]


@dataclass(frozen=True)
class InclusionProof:
    """Path from one leaf to the batch root.

    ``path`` lists ``(sibling, side)`` pairs bottom-up, where ``side``
    says which side the sibling sits on: ``"left"`` means the sibling
    is hashed in front of the running value.
    """

    leaf: Hash256
    path: tuple[tuple[Hash256, str], ...]
    root: Hash256
    batch_id: int

    def verify(self) -> bool:
        running = self.leaf
        for sibling, side in self.path:
            if side == "left":
                running = Hash256.digest(sibling.data + running.data)
            elif side == "right":
                running = Hash256.digest(running.data + sibling.data)
            else:
                return False
        return running == self.root

    def to_json(self) -> dict:
        return {
            "leaf": self.leaf.hex,
            "path": [{"sibling": s.hex, "side": side} for s, side in self.path],
            "root": self.root.hex,
            "batch_id": self.batch_id,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "InclusionProof":
        return cls(
            leaf=Hash256.from_hex(doc["leaf"]),
            path=tuple(
                (Hash256.from_hex(p["sibling"]), p["side"]) for p in doc["path"]
            ),
            root=Hash256.from_hex(doc["root"]),
            batch_id=int(doc["batch_id"]),
        )


def prove_inclusion(leaves: Sequence[Hash256], index: int, batch_id: int = 0) -> InclusionProof:
    if not 0 <= index < len(leaves):
        raise AnchorError(f"leaf index {index} out of range")
    levels = _merkle_levels(leaves)
    path: list[tuple[Hash256, str]] = []
    pos = index
    for level in levels[:-1]:
        nodes = level if len(level) % 2 == 0 else level + [level[-1]]
        if pos % 2 == 0:
            path.append((nodes[pos + 1], "right"))
        else:
            path.append((nodes[pos - 1], "left"))
        pos //= 2
    return InclusionProof(
        leaf=leaves[index], path=tuple(path), root=levels[-1][0], batch_id=batch_id
    )


def verify_inclusion(proof: InclusionProof) -> bool:
    return proof.verify()


# ---------------------------------------------------------------------------
# Base58Check addresses


def b58check_encode(version: int, payload: bytes) -> str:
    raw = bytes([version]) + payload
    checksum = hashlib.sha256(hashlib.sha256(raw).digest()).digest()[:4]
    raw += checksum
    # leading zero bytes encode as '1', the zeroth alphabet symbol
    n_zeros = len(raw) - len(raw.lstrip(b"\x00"))
    num = int.from_bytes(raw, "big")
    out = ""
    while num > 0:
        num, rem = divmod(num, 58)
        out = B58_ALPHABET[rem] + out
    return "1" * n_zeros + out


def b58check_decode(address: str) -> tuple[int, bytes]:
    """Inverse of ``b58check_encode``; raises on bad symbols or checksum."""
    num = 0
    for ch in address:
        idx = B58_ALPHABET.find(ch)
        if idx < 0:
            raise ValueError(f"invalid base58 character {ch!r}")
        num = num * 58 + idx
    body = num.to_bytes((num.bit_length() + 7) // 8, "big")
    n_ones = len(address) - len(address.lstrip("1"))
    raw = b"\x00" * n_ones + body
    if len(raw) < 5:
        raise ValueError("address too short")
    data, checksum = raw[:-4], raw[-4:]
    expect = hashlib.sha256(hashlib.sha256(data).digest()).digest()[:4]
    if checksum != expect:
        raise ValueError("bad base58check checksum")
    return data[0], data[1:]


def to_base58_address(root: Hash256) -> str:
    """Anchor address: version 0x00 over the first 20 bytes of the root."""
    return b58check_encode(ADDRESS_VERSION, root.data[:20])


# ---------------------------------------------------------------------------
# ledgers


class LedgerBackend:
    """Anything that can record an anchor payment for an address."""

    def submit(self, address: str, amount: str, at: datetime) -> str:
        raise NotImplementedError

    def confirm(self, txn_ref: str) -> bool:
        raise NotImplementedError


class MockLedger(LedgerBackend):
    """Append-only tab-separated journal standing in for a blockchain.

    Line format: ``txn_ref\taddress\tamount\trfc3339_at``.  The
    transaction reference is the SHA-256 of the record it refers to, so
    the journal is self-verifying and never rewritten.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()

    def submit(self, address: str, amount: str, at: datetime) -> str:
        record = f"{address}\t{amount}\t{rfc3339(at)}"
        txn_ref = hashlib.sha256(record.encode("utf-8")).hexdigest()
        line = f"{txn_ref}\t{record}\n"
        with self._lock:
            os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
        return txn_ref

    def confirm(self, txn_ref: str) -> bool:
        if not os.path.exists(self.path):
            return False
        with open(self.path, "r", encoding="utf-8") as fh:
            return any(line.split("\t", 1)[0] == txn_ref for line in fh)

    def entries(self) -> list[dict]:
        if not os.path.exists(self.path):
            return []
        out = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                txn_ref, address, amount, at = line.rstrip("\n").split("\t")
                out.append(
                    {"txn_ref": txn_ref, "address": address, "amount": amount, "at": at}
                )
        return out


class RemoteAnchorClient(LedgerBackend):
    """Client for an HTTP anchoring service (production path).

    Submits the address as a hash to anchor, authenticating with a
    token header.  Configured through STW_ANCHOR_URL/STW_ANCHOR_TOKEN.
    """

    def __init__(self, url: str, token: str, timeout: float = 30.0):
        self.url = url.rstrip("/")
        self.token = token
        self.timeout = timeout

    def _headers(self) -> dict:
        return {
            "Content-Type": "application/json",
            "Authorization": f"Token token={self.token}",
        }

    def submit(self, address: str, amount: str, at: datetime) -> str:
        import requests

        resp = requests.post(
            self.url,
            json={"hash": address, "title": f"anchor {rfc3339(at)}"},
            headers=self._headers(),
            timeout=self.timeout,
        )
        if resp.status_code >= 400:
            raise AnchorError(f"anchor service returned {resp.status_code}")
        doc = resp.json() if resp.content else {}
        return str(doc.get("txn_ref") or doc.get("id") or address)

    def confirm(self, txn_ref: str) -> bool:
        import requests

        resp = requests.get(
            f"{self.url}/{txn_ref}", headers=self._headers(), timeout=self.timeout
        )
        return resp.status_code == 200


# ---------------------------------------------------------------------------
# batches


class BatchStatus(str, Enum):
    OPEN = "open"
    SEALED = "sealed"
    ANCHORED = "anchored"


@dataclass
class AnchorBatch:
    """One sealed batch of stamp hashes and its anchoring state."""

    batch_id: int
    leaves: list[Hash256]
    merkle_root: Hash256
    anchor_address: str
    amount: str
    sealed_at: datetime
    status: BatchStatus
    txn_ref: Optional[str] = None
    proofs: list[InclusionProof] = field(default_factory=list)

    def receipt(self) -> "AnchorReceipt":
        return AnchorReceipt(
            batch_id=self.batch_id,
            merkle_root=self.merkle_root,
            anchor_address=self.anchor_address,
            txn_ref=self.txn_ref,
            sealed_at=self.sealed_at,
        )


@dataclass(frozen=True)
class AnchorReceipt:
    """Portable evidence that a batch root was committed to the ledger."""

    batch_id: int
    merkle_root: Hash256
    anchor_address: str
    txn_ref: Optional[str]
    sealed_at: datetime

    def to_json(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "merkle_root": self.merkle_root.hex,
            "anchor_address": self.anchor_address,
            "txn_ref": self.txn_ref,
            "sealed_at": rfc3339(self.sealed_at),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AnchorReceipt":
        from .stampcore import parse_rfc3339

        return cls(
            batch_id=int(doc["batch_id"]),
            merkle_root=Hash256.from_hex(doc["merkle_root"]),
            anchor_address=doc["anchor_address"],
            txn_ref=doc.get("txn_ref"),
            sealed_at=parse_rfc3339(doc["sealed_at"]),
        )


_seal_lock = threading.Lock()


def seal_batch(
    pending: Sequence[Hash256],
    ledger: LedgerBackend,
    now: datetime,
    batch_id: int = 0,
) -> AnchorBatch:
    """Seal pending stamp hashes into an anchored batch.

    Builds the tree and a proof per leaf, then submits the address to
    the ledger.  If the ledger rejects the submission the batch comes
    back SEALED (tree fixed, address allocated, no txn); a later
    ``submit_batch`` retries without rebuilding anything.  Sealing is
    mutually exclusive so concurrent callers cannot split a batch.
    """
    if not pending:
        raise AnchorError("nothing to seal")
    with _seal_lock:
        leaves = list(pending)
        root = build_merkle(leaves)
        address = to_base58_address(root)
        proofs = [prove_inclusion(leaves, i, batch_id) for i in range(len(leaves))]
        batch = AnchorBatch(
            batch_id=batch_id,
            leaves=leaves,
            merkle_root=root,
            anchor_address=address,
            amount=SATOSHI_BTC,
            sealed_at=now,
            status=BatchStatus.SEALED,
            proofs=proofs,
        )
        return submit_batch(batch, ledger)


def submit_batch(batch: AnchorBatch, ledger: LedgerBackend) -> AnchorBatch:
    """Submit (or re-submit) a sealed batch to the ledger."""
    if batch.status == BatchStatus.ANCHORED:
        return batch
    try:
        txn_ref = ledger.submit(batch.anchor_address, batch.amount, batch.sealed_at)
    except Exception:
        return replace(batch, status=BatchStatus.SEALED)
    return replace(batch, status=BatchStatus.ANCHORED, txn_ref=txn_ref)
