"""Persistence for stamps, schedules, users and anchoring state.

One SQLite file plus a content-addressed snapshot directory.  The
engine choice stays behind this repository class; nothing outside the
module speaks SQL.

Two rules here carry the evidentiary weight:

* content dedup: ``content_hash`` is unique, so stamping the same
  text twice can never create a second record or fork the chain;
* chain serialization: records enter the global hash chain in insert
  order under one lock, so every stored ``chain_hash`` recomputes from
  its predecessor.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Optional
from urllib.parse import urlsplit, urlunsplit

from .anchor import AnchorBatch, AnchorReceipt, BatchStatus, InclusionProof
from .ingest import CanonicalDocument, GeoLocation
from .stampcore import (
    ZERO_HASH,
    Hash256,
    StampCore,
    extend_chain,
    hash_content,
    parse_rfc3339,
    rfc3339,
    utc_now,
)

DEFAULT_POSTS_PER_PAGE = 20
MIN_PASSWORD_LENGTH = 6
MIN_FREQUENCY_DAYS = 1
MAX_FREQUENCY_DAYS = 30

# permission bitmasks; bit 0x04 allows writing, 0x08 moderating
PERM_USER = 7
PERM_MODERATOR = 15
PERM_ADMIN = 255
PERM_WRITE = 0x04
PERM_MODERATE = 0x08


class StoreError(Exception):
    pass


class IntegrityError(StoreError):
    """A write contradicted what is already recorded."""


class NotFound(StoreError):
    pass


class ValidationError(StoreError):
    """Rejected input (bad password, bad frequency, duplicate name...)."""


# ---------------------------------------------------------------------------
# URL handling

_DEFAULT_PORTS = {"http": "80", "https": "443"}


def normalize_url(url: str) -> str:
    """Canonical URL form used for storage and lookups.

    Lowercases scheme and host, strips default ports and fragments,
    keeps the query, and drops a bare trailing slash.  Two spellings of
    the same address normalize identically, so versions_of() sees them
    as one page.
    """
    parts = urlsplit(url.strip())
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    port = parts.port
    netloc = host
    if port is not None and str(port) != _DEFAULT_PORTS.get(scheme):
        netloc = f"{host}:{port}"
    path = parts.path
    if path == "/":
        path = ""
    return urlunsplit((scheme, netloc, path, parts.query, ""))


def registrable_domain(url: str) -> str:
    """Host with any leading ``www.`` removed; what users filter by."""
    host = (urlsplit(url).hostname or "").lower()
    return host[4:] if host.startswith("www.") else host


# ---------------------------------------------------------------------------
# passwords


def hash_password(password: str) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode("utf-8"), salt=salt, n=2**14, r=8, p=1)
    return f"scrypt${salt.hex()}${digest.hex()}"


def check_password(password: str, stored: str) -> bool:
    try:
        scheme, salt_hex, digest_hex = stored.split("$")
        if scheme != "scrypt":
            return False
        digest = hashlib.scrypt(
            password.encode("utf-8"), salt=bytes.fromhex(salt_hex), n=2**14, r=8, p=1
        )
        return secrets.compare_digest(digest.hex(), digest_hex)
    except (ValueError, TypeError):
        return False


# ---------------------------------------------------------------------------
# record types


@dataclass
class StampRecord:
    """One stamped article version as stored."""

    id: int
    url: str
    domain: str
    web_title: str
    post_title: Optional[str]
    core: StampCore
    owner: Optional[int]
    created_at: datetime
    snapshot_ref: str
    batch_id: Optional[int] = None
    country_of_origin: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "url": self.url,
            "domain": self.domain,
            "web_title": self.web_title,
            "post_title": self.post_title,
            "core": self.core.to_json(),
            "owner": self.owner,
            "created_at": rfc3339(self.created_at),
            "snapshot_ref": self.snapshot_ref,
            "batch_id": self.batch_id,
            "country_of_origin": self.country_of_origin,
        }


class ScheduleMode(str, Enum):
    RESTAMP = "restamp"
    COUNTRY_COMPARE = "country_compare"
    BLOCK_WATCH = "block_watch"


@dataclass
class ScheduleTask:
    """A recurring monitoring job for one URL."""

    id: int
    url: str
    frequency_days: int
    mode: ScheduleMode
    post_title: Optional[str] = None
    email: Optional[str] = None
    country: Optional[str] = None
    last_run: Optional[datetime] = None
    owner: Optional[int] = None
    linked_post: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "url": self.url,
            "frequency_days": self.frequency_days,
            "mode": self.mode.value,
            "post_title": self.post_title,
            "email": self.email,
            "country": self.country,
            "last_run": rfc3339(self.last_run) if self.last_run else None,
            "owner": self.owner,
            "linked_post": self.linked_post,
        }


@dataclass
class BlockResult:
    """Outcome of probing one URL from one country."""

    id: int
    url: str
    country: str
    blocked: bool
    checked_at: datetime
    post_id: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "url": self.url,
            "country": self.country,
            "blocked": self.blocked,
            "checked_at": rfc3339(self.checked_at),
            "post_id": self.post_id,
        }


@dataclass
class UserAccount:
    id: int
    username: str
    email: str
    confirmed: bool
    permissions: int
    member_since: datetime
    last_seen: datetime

    def can_write(self) -> bool:
        return bool(self.permissions & PERM_WRITE)

    def can_moderate(self) -> bool:
        return bool(self.permissions & PERM_MODERATE)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "username": self.username,
            "email": self.email,
            "confirmed": self.confirmed,
            "permissions": self.permissions,
            "member_since": rfc3339(self.member_since),
            "last_seen": rfc3339(self.last_seen),
        }


@dataclass
class SearchPage:
    records: list[StampRecord]
    page: int
    page_size: int
    total: int

    @property
    def pages(self) -> int:
        return max(1, -(-self.total // self.page_size))


_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    username TEXT NOT NULL UNIQUE,
    email TEXT NOT NULL UNIQUE,
    password_digest TEXT NOT NULL,
    confirmed INTEGER NOT NULL DEFAULT 0,
    permissions INTEGER NOT NULL DEFAULT 7,
    member_since TEXT NOT NULL,
    last_seen TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS batches (
    batch_id INTEGER PRIMARY KEY AUTOINCREMENT,
    leaves TEXT NOT NULL,
    merkle_root TEXT NOT NULL,
    anchor_address TEXT NOT NULL,
    amount TEXT NOT NULL,
    sealed_at TEXT NOT NULL,
    status TEXT NOT NULL,
    txn_ref TEXT
);
CREATE TABLE IF NOT EXISTS stamps (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    url TEXT NOT NULL,
    domain TEXT NOT NULL,
    web_title TEXT NOT NULL DEFAULT '',
    post_title TEXT,
    content_hash TEXT NOT NULL UNIQUE,
    stamped_at TEXT NOT NULL,
    stamp_hash TEXT NOT NULL,
    signature TEXT,
    tsa_key_id TEXT,
    prev_chain TEXT NOT NULL,
    chain_hash TEXT NOT NULL,
    owner INTEGER REFERENCES users(id),
    created_at TEXT NOT NULL,
    snapshot_ref TEXT NOT NULL,
    batch_id INTEGER REFERENCES batches(batch_id),
    country_of_origin TEXT
);
CREATE INDEX IF NOT EXISTS idx_stamps_url ON stamps(url);
CREATE INDEX IF NOT EXISTS idx_stamps_domain ON stamps(domain);
CREATE TABLE IF NOT EXISTS proofs (
    stamp_id INTEGER PRIMARY KEY REFERENCES stamps(id),
    batch_id INTEGER NOT NULL REFERENCES batches(batch_id),
    proof TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS schedules (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    url TEXT NOT NULL,
    frequency_days INTEGER NOT NULL,
    mode TEXT NOT NULL,
    post_title TEXT,
    email TEXT,
    country TEXT,
    last_run TEXT,
    owner INTEGER REFERENCES users(id),
    linked_post INTEGER REFERENCES stamps(id)
);
CREATE TABLE IF NOT EXISTS block_results (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    url TEXT NOT NULL,
    country TEXT NOT NULL,
    blocked INTEGER NOT NULL,
    checked_at TEXT NOT NULL,
    post_id INTEGER REFERENCES stamps(id),
    UNIQUE(post_id, country, checked_at)
);
CREATE TABLE IF NOT EXISTS locations (
    host TEXT PRIMARY KEY,
    host_ip TEXT NOT NULL,
    country TEXT NOT NULL,
    latitude REAL NOT NULL,
    longitude REAL NOT NULL,
    resolved_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS outbox (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    recipient TEXT NOT NULL,
    subject TEXT NOT NULL,
    body TEXT NOT NULL,
    kind TEXT NOT NULL,
    refs TEXT NOT NULL DEFAULT '{}',
    queued_at TEXT NOT NULL,
    delivered INTEGER NOT NULL DEFAULT 0
);
"""


class Store:
    """Repository over one SQLite file and a snapshot directory."""

    def __init__(
        self,
        db_path: str,
        snapshot_dir: str,
        posts_per_page: int = DEFAULT_POSTS_PER_PAGE,
    ):
        self.db_path = db_path
        self.snapshot_dir = snapshot_dir
        self.posts_per_page = posts_per_page
        self._lock = threading.RLock()
        os.makedirs(snapshot_dir, exist_ok=True)
        parent = os.path.dirname(db_path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        self._conn = sqlite3.connect(db_path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA foreign_keys = ON")
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- snapshots ----------------------------------------------------------

    def _snapshot_path(self, content_hash: Hash256) -> str:
        return os.path.join(self.snapshot_dir, content_hash.hex)

    def write_snapshot(
        self, content_hash: Hash256, canonical_text: str, raw: Optional[bytes] = None
    ) -> str:
        """Content-addressed snapshot; returns the reference path."""
        folder = self._snapshot_path(content_hash)
        os.makedirs(folder, exist_ok=True)
        with open(os.path.join(folder, "canonical.txt"), "w", encoding="utf-8") as fh:
            fh.write(canonical_text)
        if raw is not None:
            with open(os.path.join(folder, "raw.html"), "wb") as fh:
                fh.write(raw)
        return os.path.join(content_hash.hex, "canonical.txt")

    def read_snapshot(self, snapshot_ref: str) -> str:
        path = os.path.join(self.snapshot_dir, snapshot_ref)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return fh.read()
        except FileNotFoundError:
            raise NotFound(f"snapshot {snapshot_ref!r} is missing")

    # -- stamps -------------------------------------------------------------

    def _row_to_record(self, row: sqlite3.Row) -> StampRecord:
        core = StampCore(
            content_hash=Hash256.from_hex(row["content_hash"]),
            stamped_at=parse_rfc3339(row["stamped_at"]),
            stamp_hash=Hash256.from_hex(row["stamp_hash"]),
            signature=bytes.fromhex(row["signature"]) if row["signature"] else None,
            tsa_key_id=row["tsa_key_id"],
            prev_chain=Hash256.from_hex(row["prev_chain"]),
            chain_hash=Hash256.from_hex(row["chain_hash"]),
        )
        return StampRecord(
            id=row["id"],
            url=row["url"],
            domain=row["domain"],
            web_title=row["web_title"],
            post_title=row["post_title"],
            core=core,
            owner=row["owner"],
            created_at=parse_rfc3339(row["created_at"]),
            snapshot_ref=row["snapshot_ref"],
            batch_id=row["batch_id"],
            country_of_origin=row["country_of_origin"],
        )

    def put_stamp(
        self,
        doc: CanonicalDocument,
        core: StampCore,
        owner: Optional[int] = None,
        post_title: Optional[str] = None,
        raw: Optional[bytes] = None,
        country_of_origin: Optional[str] = None,
        now: Optional[datetime] = None,
    ) -> tuple[StampRecord, bool]:
        """Insert a stamp, deduplicating on content hash.

        Returns ``(record, created)``.  If the exact content is already
        stamped the existing record comes back untouched, keeping its
        original owner and title.  New records are linked to the global
        chain inside the same transaction.
        """
        if core.content_hash != hash_content(doc.canonical_text):
            raise IntegrityError("stamp core does not match the document text")
        created_at = now or utc_now()
        url = normalize_url(doc.source_url)
        domain = registrable_domain(url)
        with self._lock:
            cur = self._conn.execute(
                "SELECT * FROM stamps WHERE content_hash = ?", (core.content_hash.hex,)
            )
            row = cur.fetchone()
            if row is not None:
                return self._row_to_record(row), False
            try:
                self._conn.execute("BEGIN IMMEDIATE")
                head = self._conn.execute(
                    "SELECT chain_hash FROM stamps ORDER BY id DESC LIMIT 1"
                ).fetchone()
                prev = Hash256.from_hex(head["chain_hash"]) if head else ZERO_HASH
                chain = extend_chain(prev, core.stamp_hash)
                snapshot_ref = self.write_snapshot(
                    core.content_hash, doc.canonical_text, raw
                )
                cur = self._conn.execute(
                    """
                    INSERT INTO stamps (url, domain, web_title, post_title,
                        content_hash, stamped_at, stamp_hash, signature,
                        tsa_key_id, prev_chain, chain_hash, owner, created_at,
                        snapshot_ref, country_of_origin)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                    """,
                    (
                        url,
                        domain,
                        doc.web_title,
                        post_title,
                        core.content_hash.hex,
                        rfc3339(core.stamped_at),
                        core.stamp_hash.hex,
                        core.signature.hex() if core.signature else None,
                        core.tsa_key_id,
                        prev.hex,
                        chain.hex,
                        owner,
                        rfc3339(created_at),
                        snapshot_ref,
                        country_of_origin,
                    ),
                )
                self._conn.commit()
            except sqlite3.IntegrityError:
                self._conn.rollback()
                row = self._conn.execute(
                    "SELECT * FROM stamps WHERE content_hash = ?",
                    (core.content_hash.hex,),
                ).fetchone()
                if row is None:
                    raise
                return self._row_to_record(row), False
            record = self.get_stamp(cur.lastrowid)
            return record, True

    def get_stamp(self, stamp_id: int) -> StampRecord:
        row = self._conn.execute(
            "SELECT * FROM stamps WHERE id = ?", (stamp_id,)
        ).fetchone()
        if row is None:
            raise NotFound(f"no stamp with id {stamp_id}")
        return self._row_to_record(row)

    def find_by_content_hash(self, content_hash: Hash256) -> Optional[StampRecord]:
        row = self._conn.execute(
            "SELECT * FROM stamps WHERE content_hash = ?", (content_hash.hex,)
        ).fetchone()
        return self._row_to_record(row) if row else None

    def versions_of(self, url: str) -> list[StampRecord]:
        """All stamped versions of one page, oldest first."""
        normalized = normalize_url(url)
        rows = self._conn.execute(
            "SELECT * FROM stamps WHERE url = ? ORDER BY created_at ASC, id ASC",
            (normalized,),
        ).fetchall()
        return [self._row_to_record(r) for r in rows]

    def latest_version(self, url: str) -> Optional[StampRecord]:
        versions = self.versions_of(url)
        return versions[-1] if versions else None

    def search(self, query: str, domain: Optional[str] = None, page: int = 1) -> SearchPage:
        """Case-insensitive substring search over url and titles.

        An empty query matches nothing rather than everything, so a
        blank search form cannot dump the whole archive.
        """
        page = max(1, page)
        query = (query or "").strip()
        if not query and not domain:
            return SearchPage(records=[], page=page, page_size=self.posts_per_page, total=0)
        needle = query.casefold()
        rows = self._conn.execute(
            "SELECT * FROM stamps ORDER BY created_at DESC, id DESC"
        ).fetchall()
        hits = []
        for row in rows:
            if domain and row["domain"] != domain.lower():
                continue
            if needle:
                haystacks = (
                    row["url"] or "",
                    row["web_title"] or "",
                    row["post_title"] or "",
                )
                if not any(needle in h.casefold() for h in haystacks):
                    continue
            hits.append(self._row_to_record(row))
        start = (page - 1) * self.posts_per_page
        return SearchPage(
            records=hits[start : start + self.posts_per_page],
            page=page,
            page_size=self.posts_per_page,
            total=len(hits),
        )

    def list_domains(self) -> list[str]:
        rows = self._conn.execute(
            "SELECT DISTINCT domain FROM stamps ORDER BY domain ASC"
        ).fetchall()
        return [r["domain"] for r in rows]

    def stats_by_country(self) -> list[dict]:
        """Share of stamped posts per country of origin.

        Unattributed posts land in the ``unknown`` bucket; percentages
        are rounded to two decimals.
        """
        rows = self._conn.execute(
            "SELECT COALESCE(country_of_origin, 'unknown') AS country,"
            " COUNT(*) AS n FROM stamps GROUP BY country"
        ).fetchall()
        total = sum(r["n"] for r in rows)
        out = [
            {
                "country": r["country"],
                "count": r["n"],
                "percentage": round(100.0 * r["n"] / total, 2) if total else 0.0,
            }
            for r in rows
        ]
        out.sort(key=lambda d: (-d["count"], d["country"]))
        return out

    def verify_chain(self) -> bool:
        """Recompute the global chain over all records in insert order."""
        rows = self._conn.execute(
            "SELECT stamp_hash, prev_chain, chain_hash FROM stamps ORDER BY id ASC"
        ).fetchall()
        prev = ZERO_HASH
        for row in rows:
            if row["prev_chain"] != prev.hex:
                return False
            prev = extend_chain(prev, Hash256.from_hex(row["stamp_hash"]))
            if row["chain_hash"] != prev.hex:
                return False
        return True

    # -- anchoring state ------------------------------------------------------

    def pending_stamps(self) -> list[StampRecord]:
        """Stamps not yet sealed into any batch, oldest first."""
        rows = self._conn.execute(
            "SELECT * FROM stamps WHERE batch_id IS NULL ORDER BY id ASC"
        ).fetchall()
        return [self._row_to_record(r) for r in rows]

    def next_batch_id(self) -> int:
        row = self._conn.execute("SELECT MAX(batch_id) AS m FROM batches").fetchone()
        return (row["m"] or 0) + 1

    def save_batch(self, batch: AnchorBatch, record_ids: list[int]) -> None:
        """Persist a sealed batch and attach proofs to its records."""
        if len(record_ids) != len(batch.leaves):
            raise IntegrityError("batch leaves and record ids differ in length")
        with self._lock:
            self._conn.execute("BEGIN IMMEDIATE")
            self._conn.execute(
                """
                INSERT INTO batches (batch_id, leaves, merkle_root, anchor_address,
                    amount, sealed_at, status, txn_ref)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    batch.batch_id,
                    json.dumps([l.hex for l in batch.leaves]),
                    batch.merkle_root.hex,
                    batch.anchor_address,
                    batch.amount,
                    rfc3339(batch.sealed_at),
                    batch.status.value,
                    batch.txn_ref,
                ),
            )
            for record_id, proof in zip(record_ids, batch.proofs):
                self._conn.execute(
                    "UPDATE stamps SET batch_id = ? WHERE id = ?",
                    (batch.batch_id, record_id),
                )
                self._conn.execute(
                    "INSERT INTO proofs (stamp_id, batch_id, proof) VALUES (?, ?, ?)",
                    (record_id, batch.batch_id, json.dumps(proof.to_json())),
                )
            self._conn.commit()

    def update_batch_status(
        self, batch_id: int, status: BatchStatus, txn_ref: Optional[str]
    ) -> None:
        with self._lock:
            self._conn.execute(
                "UPDATE batches SET status = ?, txn_ref = ? WHERE batch_id = ?",
                (status.value, txn_ref, batch_id),
            )
            self._conn.commit()

    def get_batch(self, batch_id: int) -> dict:
        row = self._conn.execute(
            "SELECT * FROM batches WHERE batch_id = ?", (batch_id,)
        ).fetchone()
        if row is None:
            raise NotFound(f"no batch {batch_id}")
        return dict(row)

    def batches_with_status(self, status: BatchStatus) -> list[dict]:
        rows = self._conn.execute(
            "SELECT * FROM batches WHERE status = ? ORDER BY batch_id ASC",
            (status.value,),
        ).fetchall()
        return [dict(r) for r in rows]

    def get_proof(self, stamp_id: int) -> Optional[InclusionProof]:
        row = self._conn.execute(
            "SELECT proof FROM proofs WHERE stamp_id = ?", (stamp_id,)
        ).fetchone()
        return InclusionProof.from_json(json.loads(row["proof"])) if row else None

    def batch_receipt(self, batch_id: int) -> AnchorReceipt:
        row = self.get_batch(batch_id)
        return AnchorReceipt(
            batch_id=row["batch_id"],
            merkle_root=Hash256.from_hex(row["merkle_root"]),
            anchor_address=row["anchor_address"],
            txn_ref=row["txn_ref"],
            sealed_at=parse_rfc3339(row["sealed_at"]),
        )

    def export_receipt(self, stamp_id: int) -> dict:
        """Portable JSON evidence bundle for offline verification."""
        record = self.get_stamp(stamp_id)
        proof = self.get_proof(stamp_id)
        receipt: Optional[AnchorReceipt] = None
        if record.batch_id is not None:
            receipt = self.batch_receipt(record.batch_id)
        doc = {
            "record": record.to_json(),
            "canonical_text": self.read_snapshot(record.snapshot_ref),
            "snapshot_ref": record.snapshot_ref,
            "proof": proof.to_json() if proof else None,
            "batch": receipt.to_json() if receipt else None,
        }
        return doc

    # -- users ----------------------------------------------------------------

    def _row_to_user(self, row: sqlite3.Row) -> UserAccount:
        return UserAccount(
            id=row["id"],
            username=row["username"],
            email=row["email"],
            confirmed=bool(row["confirmed"]),
            permissions=row["permissions"],
            member_since=parse_rfc3339(row["member_since"]),
            last_seen=parse_rfc3339(row["last_seen"]),
        )

    def create_user(
        self,
        username: str,
        email: str,
        password: str,
        permissions: int = PERM_USER,
        now: Optional[datetime] = None,
    ) -> UserAccount:
        username = (username or "").strip()
        email = (email or "").strip().lower()
        if not username or not email:
            raise ValidationError("username and email are required")
        if len(password or "") < MIN_PASSWORD_LENGTH:
            raise ValidationError(
                f"password must be at least {MIN_PASSWORD_LENGTH} characters"
            )
        at = rfc3339(now or utc_now())
        with self._lock:
            try:
                cur = self._conn.execute(
                    """
                    INSERT INTO users (username, email, password_digest,
                        confirmed, permissions, member_since, last_seen)
                    VALUES (?, ?, ?, 0, ?, ?, ?)
                    """,
                    (username, email, hash_password(password), permissions, at, at),
                )
                self._conn.commit()
            except sqlite3.IntegrityError:
                self._conn.rollback()
                raise ValidationError("username or email is already registered")
        return self.get_user(cur.lastrowid)

    def get_user(self, user_id: int) -> UserAccount:
        row = self._conn.execute(
            "SELECT * FROM users WHERE id = ?", (user_id,)
        ).fetchone()
        if row is None:
            raise NotFound(f"no user {user_id}")
        return self._row_to_user(row)

    def find_user(self, username_or_email: str) -> Optional[UserAccount]:
        needle = (username_or_email or "").strip()
        row = self._conn.execute(
            "SELECT * FROM users WHERE username = ? OR email = ?",
            (needle, needle.lower()),
        ).fetchone()
        return self._row_to_user(row) if row else None

    def check_credentials(self, username_or_email: str, password: str) -> Optional[UserAccount]:
        needle = (username_or_email or "").strip()
        row = self._conn.execute(
            "SELECT * FROM users WHERE username = ? OR email = ?",
            (needle, needle.lower()),
        ).fetchone()
        if row is None or not check_password(password, row["password_digest"]):
            return None
        return self._row_to_user(row)

    def confirm_user(self, user_id: int) -> UserAccount:
        """Mark confirmed; a repeat confirm is a no-op, not an error."""
        with self._lock:
            self._conn.execute(
                "UPDATE users SET confirmed = 1 WHERE id = ?", (user_id,)
            )
            self._conn.commit()
        return self.get_user(user_id)

    def touch_last_seen(self, user_id: int, now: Optional[datetime] = None) -> None:
        with self._lock:
            self._conn.execute(
                "UPDATE users SET last_seen = ? WHERE id = ?",
                (rfc3339(now or utc_now()), user_id),
            )
            self._conn.commit()

    # -- schedules --------------------------------------------------------------

    def _row_to_schedule(self, row: sqlite3.Row) -> ScheduleTask:
        return ScheduleTask(
            id=row["id"],
            url=row["url"],
            frequency_days=row["frequency_days"],
            mode=ScheduleMode(row["mode"]),
            post_title=row["post_title"],
            email=row["email"],
            country=row["country"],
            last_run=parse_rfc3339(row["last_run"]) if row["last_run"] else None,
            owner=row["owner"],
            linked_post=row["linked_post"],
        )

    def add_schedule(
        self,
        url: str,
        frequency_days: int,
        mode: ScheduleMode = ScheduleMode.RESTAMP,
        post_title: Optional[str] = None,
        email: Optional[str] = None,
        country: Optional[str] = None,
        owner: Optional[int] = None,
        linked_post: Optional[int] = None,
        last_run: Optional[datetime] = None,
    ) -> ScheduleTask:
        """Create a schedule; URL and frequency are the required pair."""
        if not isinstance(frequency_days, int) or not (
            MIN_FREQUENCY_DAYS <= frequency_days <= MAX_FREQUENCY_DAYS
        ):
            raise ValidationError(
                f"frequency must be {MIN_FREQUENCY_DAYS}..{MAX_FREQUENCY_DAYS} days"
            )
        mode = ScheduleMode(mode)
        if mode in (ScheduleMode.COUNTRY_COMPARE, ScheduleMode.BLOCK_WATCH) and not country:
            raise ValidationError(f"mode {mode.value} requires a country")
        normalized = normalize_url(url)
        with self._lock:
            cur = self._conn.execute(
                """
                INSERT INTO schedules (url, frequency_days, mode, post_title,
                    email, country, last_run, owner, linked_post)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    normalized,
                    frequency_days,
                    mode.value,
                    post_title,
                    email,
                    country.upper() if country else None,
                    rfc3339(last_run) if last_run else None,
                    owner,
                    linked_post,
                ),
            )
            self._conn.commit()
        return self.get_schedule(cur.lastrowid)

    def get_schedule(self, schedule_id: int) -> ScheduleTask:
        row = self._conn.execute(
            "SELECT * FROM schedules WHERE id = ?", (schedule_id,)
        ).fetchone()
        if row is None:
            raise NotFound(f"no schedule {schedule_id}")
        return self._row_to_schedule(row)

    def list_schedules(self) -> list[ScheduleTask]:
        rows = self._conn.execute("SELECT * FROM schedules ORDER BY id ASC").fetchall()
        return [self._row_to_schedule(r) for r in rows]

    def delete_schedule(self, schedule_id: int) -> None:
        with self._lock:
            cur = self._conn.execute(
                "DELETE FROM schedules WHERE id = ?", (schedule_id,)
            )
            self._conn.commit()
        if cur.rowcount == 0:
            raise NotFound(f"no schedule {schedule_id}")

    def mark_schedule_run(
        self, schedule_id: int, at: datetime, linked_post: Optional[int] = None
    ) -> None:
        with self._lock:
            if linked_post is None:
                self._conn.execute(
                    "UPDATE schedules SET last_run = ? WHERE id = ?",
                    (rfc3339(at), schedule_id),
                )
            else:
                self._conn.execute(
                    "UPDATE schedules SET last_run = ?, linked_post = ? WHERE id = ?",
                    (rfc3339(at), linked_post, schedule_id),
                )
            self._conn.commit()

    # -- block results ------------------------------------------------------------

    def add_block_result(
        self,
        url: str,
        country: str,
        blocked: bool,
        checked_at: datetime,
        post_id: Optional[int] = None,
    ) -> BlockResult:
        normalized = normalize_url(url)
        with self._lock:
            cur = self._conn.execute(
                """
                INSERT INTO block_results (url, country, blocked, checked_at, post_id)
                VALUES (?, ?, ?, ?, ?)
                """,
                (normalized, country.upper(), int(blocked), rfc3339(checked_at), post_id),
            )
            self._conn.commit()
        row = self._conn.execute(
            "SELECT * FROM block_results WHERE id = ?", (cur.lastrowid,)
        ).fetchone()
        return self._row_to_block(row)

    def _row_to_block(self, row: sqlite3.Row) -> BlockResult:
        return BlockResult(
            id=row["id"],
            url=row["url"],
            country=row["country"],
            blocked=bool(row["blocked"]),
            checked_at=parse_rfc3339(row["checked_at"]),
            post_id=row["post_id"],
        )

    def latest_block_results(self, url: str) -> list[BlockResult]:
        """Most recent result per country for one URL."""
        normalized = normalize_url(url)
        rows = self._conn.execute(
            """
            SELECT * FROM block_results WHERE url = ?
            ORDER BY checked_at DESC, id DESC
            """,
            (normalized,),
        ).fetchall()
        seen: dict[str, BlockResult] = {}
        for row in rows:
            if row["country"] not in seen:
                seen[row["country"]] = self._row_to_block(row)
        return sorted(seen.values(), key=lambda b: b.country)

    # -- locations ------------------------------------------------------------------

    def get_location(self, host: str) -> Optional[GeoLocation]:
        row = self._conn.execute(
            "SELECT * FROM locations WHERE host = ?", (host,)
        ).fetchone()
        if row is None:
            return None
        return GeoLocation(
            host_ip=row["host_ip"],
            country=row["country"],
            latitude=row["latitude"],
            longitude=row["longitude"],
            resolved_at=parse_rfc3339(row["resolved_at"]),
        )

    def put_location(self, host: str, location: GeoLocation) -> None:
        with self._lock:
            self._conn.execute(
                """
                INSERT OR REPLACE INTO locations
                    (host, host_ip, country, latitude, longitude, resolved_at)
                VALUES (?, ?, ?, ?, ?, ?)
                """,
                (
                    host,
                    location.host_ip,
                    location.country,
                    location.latitude,
                    location.longitude,
                    rfc3339(location.resolved_at.replace(microsecond=0)),
                ),
            )
            self._conn.commit()

    # -- outbox --------------------------------------------------------------------

    def queue_notification(
        self,
        recipient: str,
        subject: str,
        body: str,
        kind: str,
        refs: Optional[dict] = None,
        queued_at: Optional[datetime] = None,
    ) -> int:
        with self._lock:
            cur = self._conn.execute(
                """
                INSERT INTO outbox (recipient, subject, body, kind, refs, queued_at)
                VALUES (?, ?, ?, ?, ?, ?)
                """,
                (
                    recipient,
                    subject,
                    body,
                    kind,
                    json.dumps(refs or {}),
                    rfc3339(queued_at or utc_now()),
                ),
            )
            self._conn.commit()
        return cur.lastrowid

    def undelivered_notifications(self) -> list[dict]:
        rows = self._conn.execute(
            "SELECT * FROM outbox WHERE delivered = 0 ORDER BY id ASC"
        ).fetchall()
        out = []
        for row in rows:
            doc = dict(row)
            doc["refs"] = json.loads(doc["refs"])
            out.append(doc)
        return out

    def mark_delivered(self, notification_id: int) -> None:
        with self._lock:
            self._conn.execute(
                "UPDATE outbox SET delivered = 1 WHERE id = ?", (notification_id,)
            )
            self._conn.commit()

    def notification_count(self, delivered: Optional[bool] = None) -> int:
        if delivered is None:
            row = self._conn.execute("SELECT COUNT(*) AS n FROM outbox").fetchone()
        else:
            row = self._conn.execute(
                "SELECT COUNT(*) AS n FROM outbox WHERE delivered = ?",
                (int(delivered),),
            ).fetchone()
        return row["n"]

    # -- integrity ---------------------------------------------------------------

    def verify_integrity(self) -> list[str]:
        """Referential sweep; returns human-readable problems, if any."""
        problems = []
        rows = self._conn.execute(
            """
            SELECT s.id FROM stamps s
            LEFT JOIN batches b ON s.batch_id = b.batch_id
            WHERE s.batch_id IS NOT NULL AND b.batch_id IS NULL
            """
        ).fetchall()
        problems += [f"stamp {r['id']} points at a missing batch" for r in rows]
        rows = self._conn.execute(
            """
            SELECT br.id FROM block_results br
            LEFT JOIN stamps s ON br.post_id = s.id
            WHERE br.post_id IS NOT NULL AND s.id IS NULL
            """
        ).fetchall()
        problems += [f"block result {r['id']} points at a missing post" for r in rows]
        rows = self._conn.execute(
            """
            SELECT sc.id FROM schedules sc
            LEFT JOIN stamps s ON sc.linked_post = s.id
            WHERE sc.linked_post IS NOT NULL AND s.id IS NULL
            """
        ).fetchall()
        problems += [f"schedule {r['id']} points at a missing post" for r in rows]
        if not self.verify_chain():
            problems.append("global hash chain does not recompute")
        return problems
