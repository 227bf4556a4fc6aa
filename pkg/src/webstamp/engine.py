"""Composition root: wires the pipeline and exposes every operation.

The REST service and the CLI are both thin layers over this class, so
behavior (dedup, chain order, notification wording, token rules) is
defined exactly once.  Collaborators are injectable: tests swap the
transport, clock and geo provider for deterministic fakes and the rest
of the pipeline runs unmodified.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import logging
from dataclasses import dataclass
from typing import Optional
from urllib.parse import urlsplit

from . import anchor as anchor_mod
from .config import AUTH_TOKEN_MAX_AGE, Settings
from .diff import ComparisonView, compare_texts
from .ingest import (
    DEFAULT_BLOCK_MAP_COUNTRIES,
    CanonicalDocument,
    ExtractionError,
    Fetcher,
    FetchResult,
    FixtureGeoProvider,
    LocationUnavailable,
    ProxyRegistry,
    RemoteGeoProvider,
    extract_article,
    lookup_location,
)
from .monitor import NotificationKind, Scheduler, SystemClock
from .stampcore import (
    TsaKeyPair,
    VerificationReport,
    hash_content,
    issue_stamp,
    rfc3339,
    verify_stamp,
)
from .store import BlockResult, ScheduleMode, StampRecord, Store

logger = logging.getLogger(__name__)

CONFIRM_TOKEN_MAX_AGE = 3600


class EngineError(Exception):
    pass


class UpstreamError(EngineError):
    """The page could not be fetched or extracted."""

    def __init__(self, message: str, status: Optional[str] = None):
        super().__init__(message)
        self.status = status


class AuthError(EngineError):
    def __init__(self, message: str, code: str = "unauthorized"):
        super().__init__(message)
        self.code = code


@dataclass
class StampReceipt:
    """What a submitter gets back right after stamping."""

    record: StampRecord
    created: bool

    def to_json(self) -> dict:
        doc = self.record.to_json()
        doc["created"] = self.created
        return doc


class Engine:
    def __init__(
        self,
        settings: Settings,
        transport=None,
        clock=None,
        geo_provider=None,
        registry: Optional[ProxyRegistry] = None,
        ledger=None,
    ):
        self.settings = settings
        self.clock = clock or SystemClock()
        self.store = Store(
            settings.db_path,
            settings.snapshot_dir,
            posts_per_page=settings.posts_per_page,
        )
        self.keypair = TsaKeyPair.load_or_create(settings.tsa_key_path)
        self.fetcher = Fetcher(
            transport=transport, timeout=settings.fetch_timeout, now=self.clock.now
        )
        if registry is not None:
            self.registry = registry
        elif settings.registry_file:
            self.registry = ProxyRegistry.from_file(
                settings.registry_file, quorum_size=settings.quorum_size
            )
        else:
            self.registry = ProxyRegistry.from_env(
                settings.environ, quorum_size=settings.quorum_size
            )
        if ledger is not None:
            self.ledger = ledger
        elif settings.anchor_url and settings.anchor_token:
            self.ledger = anchor_mod.RemoteAnchorClient(
                settings.anchor_url, settings.anchor_token
            )
        else:
            self.ledger = anchor_mod.MockLedger(settings.ledger_path)
        if geo_provider is not None:
            self.geo = geo_provider
        elif settings.geo_fixture:
            self.geo = FixtureGeoProvider(settings.geo_fixture)
        elif settings.geoip_url:
            self.geo = RemoteGeoProvider(settings.geoip_url)
        else:
            self.geo = None
        self.scheduler = Scheduler(self, clock=self.clock)

    def close(self) -> None:
        self.store.close()

    # -- pipeline pieces -------------------------------------------------------

    def extract(self, result: FetchResult) -> CanonicalDocument:
        return extract_article(
            result.body,
            declared_encoding=result.declared_encoding,
            source_url=result.url,
            now=self.clock.now,
        )

    def _country_of(self, url: str) -> Optional[str]:
        if self.geo is None:
            return None
        host = urlsplit(url).hostname or ""
        if not host:
            return None
        try:
            return lookup_location(host, self.store, self.geo).country
        except (LocationUnavailable, ValueError, OSError):
            return None

    def stamp_document(
        self,
        doc: CanonicalDocument,
        raw: Optional[bytes] = None,
        owner: Optional[int] = None,
        post_title: Optional[str] = None,
    ) -> tuple[StampRecord, bool]:
        """Stamp already-extracted content (dedup applies)."""
        core = issue_stamp(doc.canonical_text, self.clock.now(), self.keypair)
        return self.store.put_stamp(
            doc,
            core,
            owner=owner,
            post_title=post_title,
            raw=raw,
            country_of_origin=self._country_of(doc.source_url),
            now=self.clock.now(),
        )

    def stamp_url(
        self,
        url: str,
        owner: Optional[int] = None,
        post_title: Optional[str] = None,
        via_country: Optional[str] = None,
    ) -> StampReceipt:
        """End-to-end stamping: fetch, extract, hash, sign, chain, store."""
        if via_country:
            result = self.fetcher.fetch_via(url, via_country, self.registry)
        else:
            result = self.fetcher.fetch(url)
        if not result.ok:
            raise UpstreamError(
                f"could not fetch {url}: {result.status.value}"
                + (f" ({result.http_code})" if result.http_code else ""),
                status=result.status.value,
            )
        try:
            doc = self.extract(result)
        except ExtractionError as exc:
            raise UpstreamError(f"could not extract article from {url}: {exc}") from exc
        record, created = self.stamp_document(
            doc, raw=result.body, owner=owner, post_title=post_title
        )
        return StampReceipt(record=record, created=created)

    # -- verification ------------------------------------------------------------

    def verify_record(
        self, record_id: int, text_override: Optional[str] = None
    ) -> tuple[VerificationReport, dict]:
        """Re-verify a stored stamp; returns the report and the receipt."""
        record = self.store.get_stamp(record_id)
        receipt = self.store.export_receipt(record_id)
        receipt["public_key"] = self.keypair.public_key.hex()
        text = text_override if text_override is not None else receipt["canonical_text"]
        evidence = None
        if receipt["proof"] and receipt["batch"]:
            evidence = (
                anchor_mod.InclusionProof.from_json(receipt["proof"]),
                anchor_mod.AnchorReceipt.from_json(receipt["batch"]),
            )
        report = verify_stamp(
            text,
            record.core.stamped_at,
            record.core,
            public_key=self.keypair.public_key,
            anchor_evidence=evidence,
        )
        return report, receipt

    # -- comparison ----------------------------------------------------------------

    def _record_text(self, record: StampRecord) -> str:
        return self.store.read_snapshot(record.snapshot_ref)

    def _label(self, record: StampRecord) -> str:
        return rfc3339(record.core.stamped_at)

    def compare_records(self, old_id: int, new_id: int) -> ComparisonView:
        old = self.store.get_stamp(old_id)
        new = self.store.get_stamp(new_id)
        return compare_texts(
            self._record_text(old),
            self._record_text(new),
            old_label=self._label(old),
            new_label=self._label(new),
        )

    def compare_with_current(self, old_id: int) -> ComparisonView:
        """Compare a stored version against the live page, right now."""
        old = self.store.get_stamp(old_id)
        result = self.fetcher.fetch(old.url)
        if not result.ok:
            raise UpstreamError(
                f"could not fetch current version: {result.status.value}",
                status=result.status.value,
            )
        try:
            doc = self.extract(result)
        except ExtractionError as exc:
            raise UpstreamError(str(exc)) from exc
        return compare_texts(
            self._record_text(old),
            doc.canonical_text,
            old_label=self._label(old),
            new_label=f"current ({rfc3339(self.clock.now())})",
        )

    def compare_with_country(self, old_id: int, country: str) -> ComparisonView:
        """Compare a stored version against the page seen from a country."""
        old = self.store.get_stamp(old_id)
        result = self.fetcher.fetch_via(old.url, country, self.registry)
        if not result.ok:
            raise UpstreamError(
                f"not reachable from {country.upper()}: {result.status.value}",
                status=result.status.value,
            )
        try:
            doc = self.extract(result)
        except ExtractionError as exc:
            raise UpstreamError(str(exc)) from exc
        return compare_texts(
            self._record_text(old),
            doc.canonical_text,
            old_label=self._label(old),
            new_label=f"{country.upper()} ({rfc3339(self.clock.now())})",
        )

    # -- schedules -------------------------------------------------------------------

    def add_schedule(
        self,
        url: str,
        frequency_days: int,
        mode: ScheduleMode = ScheduleMode.RESTAMP,
        post_title: Optional[str] = None,
        email: Optional[str] = None,
        country: Optional[str] = None,
        owner: Optional[int] = None,
    ) -> ScheduleTask:
        """Create a schedule; its period starts counting now.

        For content-tracking modes the current version is stamped as a
        baseline so later runs have something to compare with.  A dead
        URL still gets its schedule (it may come back), just without a
        baseline.
        """
        linked_post = None
        if mode in (ScheduleMode.RESTAMP, ScheduleMode.COUNTRY_COMPARE):
            try:
                receipt = self.stamp_url(url, owner=owner, post_title=post_title)
                linked_post = receipt.record.id
            except UpstreamError as exc:
                logger.warning("no baseline stamp for %s: %s", url, exc)
        return self.store.add_schedule(
            url,
            frequency_days,
            mode=mode,
            post_title=post_title,
            email=email,
            country=country,
            owner=owner,
            linked_post=linked_post,
            last_run=self.clock.now(),
        )

    def run_due(self):
        return self.scheduler.run_due()

    def drain_outbox(self, sink=None) -> int:
        from .monitor import FileOutboxSink

        if sink is None:
            sink = FileOutboxSink(self.settings.outbox_path)
        return self.scheduler.drain_outbox(sink)

    # -- block checking ----------------------------------------------------------------

    def block_check(
        self, url: str, countries: Optional[list[str]] = None
    ) -> list[BlockResult]:
        """Probe one URL from many countries; persists one row each.

        A page counts as blocked in a country only when every quorum
        proxy for that country failed to deliver it.
        """
        if countries is None:
            countries = [
                c for c in DEFAULT_BLOCK_MAP_COUNTRIES if c in self.registry.entries
            ]
        post = self.store.latest_version(url)
        post_id = post.id if post else None
        out = []
        for country in countries:
            result = self.fetcher.fetch_via(url, country, self.registry)
            out.append(
                self.store.add_block_result(
                    url, country, not result.ok, self.clock.now(), post_id=post_id
                )
            )
        return out

    def block_map(self, url: str) -> list[BlockResult]:
        return self.store.latest_block_results(url)

    # -- anchoring ----------------------------------------------------------------------

    def seal_pending(self) -> Optional[anchor_mod.AnchorBatch]:
        """Seal all unanchored stamps into one batch; no-op when empty."""
        pending = self.store.pending_stamps()
        if not pending:
            return None
        batch_id = self.store.next_batch_id()
        batch = anchor_mod.seal_batch(
            [r.core.stamp_hash for r in pending],
            self.ledger,
            self.clock.now(),
            batch_id=batch_id,
        )
        self.store.save_batch(batch, [r.id for r in pending])
        return batch

    def retry_sealed(self) -> int:
        """Re-submit batches whose ledger write failed earlier."""
        moved = 0
        for row in self.store.batches_with_status(anchor_mod.BatchStatus.SEALED):
            receipt = self.store.batch_receipt(row["batch_id"])
            try:
                txn_ref = self.ledger.submit(
                    receipt.anchor_address, row["amount"], receipt.sealed_at
                )
            except Exception:
                continue
            self.store.update_batch_status(
                row["batch_id"], anchor_mod.BatchStatus.ANCHORED, txn_ref
            )
            moved += 1
        return moved

    # -- notifications -------------------------------------------------------------------

    def _subject(self, text: str) -> str:
        return f"{self.settings.mail_subject_prefix} {text}"

    def compare_link(self, old_id: int, new_id: int) -> str:
        return f"{self.settings.server_url}/compare?old={old_id}&new={new_id}"

    def queue_content_changed(self, recipient: str, old: StampRecord, new: StampRecord) -> int:
        body = (
            "The monitored page changed.\n"
            f"\n"
            f"URL: {new.url}\n"
            f"Old version: {old.core.content_hash.hex}\n"
            f"  stamped {rfc3339(old.core.stamped_at)}\n"
            f"New version: {new.core.content_hash.hex}\n"
            f"  stamped {rfc3339(new.core.stamped_at)}\n"
            f"\n"
            f"Compare the versions: {self.compare_link(old.id, new.id)}\n"
        )
        return self.store.queue_notification(
            recipient,
            self._subject(f"Content change: {new.url}"),
            body,
            NotificationKind.CONTENT_CHANGED.value,
            refs={"old": old.id, "new": new.id},
            queued_at=self.clock.now(),
        )

    def queue_country_differs(
        self, recipient: str, url: str, country: str, record_id: Optional[int]
    ) -> int:
        body = (
            f"The page at {url} shows different content when fetched from "
            f"{country.upper()} than from the default location.\n"
        )
        if record_id:
            body += f"\nReference version: {self.settings.server_url}/posts/{record_id}\n"
        return self.store.queue_notification(
            recipient,
            self._subject(f"Content differs by location: {url}"),
            body,
            NotificationKind.COUNTRY_DIFFERS.value,
            refs={"country": country.upper(), "record": record_id},
            queued_at=self.clock.now(),
        )

    def queue_blocked(self, recipient: str, url: str, country: str) -> int:
        body = (
            f"The page at {url} was not reachable from {country.upper()}: "
            f"every proxy for that country failed to deliver it.\n"
        )
        return self.store.queue_notification(
            recipient,
            self._subject(f"Access blocked: {url} ({country.upper()})"),
            body,
            NotificationKind.BLOCKED.value,
            refs={"country": country.upper()},
            queued_at=self.clock.now(),
        )

    # -- accounts and tokens ----------------------------------------------------------------

    def _sign_payload(self, payload: dict) -> str:
        raw = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        mac = hmac.new(self.settings.secret_key.encode("utf-8"), raw, hashlib.sha256)
        return (
            base64.urlsafe_b64encode(raw).decode("ascii").rstrip("=")
            + "."
            + base64.urlsafe_b64encode(mac.digest()).decode("ascii").rstrip("=")
        )

    def _read_payload(self, token: str) -> dict:
        try:
            body_b64, mac_b64 = token.split(".")
            raw = base64.urlsafe_b64decode(body_b64 + "=" * (-len(body_b64) % 4))
            mac = base64.urlsafe_b64decode(mac_b64 + "=" * (-len(mac_b64) % 4))
        except (ValueError, TypeError):
            raise AuthError("malformed token", code="bad_token")
        expect = hmac.new(
            self.settings.secret_key.encode("utf-8"), raw, hashlib.sha256
        ).digest()
        if not hmac.compare_digest(mac, expect):
            raise AuthError("token signature mismatch", code="bad_token")
        return json.loads(raw)

    def register_user(self, username: str, email: str, password: str):
        """Create an unconfirmed account and queue its confirm link."""
        user = self.store.create_user(username, email, password)
        token = self._sign_payload(
            {"uid": user.id, "iat": int(self.clock.now().timestamp()), "use": "confirm"}
        )
        link = f"{self.settings.server_url}/confirm?token={token}"
        body = (
            f"Welcome, {user.username}.\n\n"
            f"Confirm your account within the hour: {link}\n"
        )
        self.store.queue_notification(
            user.email,
            self._subject("Confirm your account"),
            body,
            NotificationKind.ACCOUNT_CONFIRM.value,
            refs={"user": user.id},
            queued_at=self.clock.now(),
        )
        return user, token

    def confirm_user(self, token: str):
        payload = self._read_payload(token)
        if payload.get("use") != "confirm":
            raise AuthError("not a confirmation token", code="bad_token")
        age = int(self.clock.now().timestamp()) - int(payload.get("iat", 0))
        if age > CONFIRM_TOKEN_MAX_AGE:
            raise AuthError("confirmation token expired", code="token_expired")
        # confirming twice is fine; the account just stays confirmed
        return self.store.confirm_user(int(payload["uid"]))

    def login(self, username_or_email: str, password: str, client_ip: str) -> str:
        user = self.store.check_credentials(username_or_email, password)
        if user is None:
            raise AuthError("wrong username or password", code="bad_credentials")
        if not user.confirmed:
            raise AuthError("account is not confirmed yet", code="unconfirmed")
        self.store.touch_last_seen(user.id, self.clock.now())
        return self._sign_payload(
            {
                "uid": user.id,
                "iat": int(self.clock.now().timestamp()),
                "ip": client_ip,
                "use": "session",
            }
        )

    def authenticate(self, token: str, client_ip: str):
        """Validate a session token; expiry and the client IP both bind.

        A token older than AUTH_TOKEN_MAX_AGE seconds or presented from
        a different address is dead; the client has to log in again.
        """
        payload = self._read_payload(token)
        if payload.get("use") != "session":
            raise AuthError("not a session token", code="bad_token")
        age = int(self.clock.now().timestamp()) - int(payload.get("iat", 0))
        if age > AUTH_TOKEN_MAX_AGE:
            raise AuthError("session expired", code="token_expired")
        if payload.get("ip") != client_ip:
            raise AuthError("session bound to a different address", code="ip_changed")
        return self.store.get_user(int(payload["uid"]))


def build_engine(
    environ=None, config_file: Optional[str] = None, **overrides
) -> Engine:
    settings = Settings.from_env(environ, config_file=config_file)
    return Engine(settings, **overrides)
