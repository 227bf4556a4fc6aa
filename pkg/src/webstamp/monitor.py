"""Scheduled monitoring: restamping, location comparison, block watch.

Everything here runs against an injected clock, so ten simulated days
take milliseconds in tests and the due arithmetic is exact: a task is
due when ``now - last_run >= frequency_days`` (or has never run).
Schedules created through the engine start their cycle at creation
time, so a frequency-3 task fires on days 3, 6 and 9 of a ten-day run.

Outgoing email is queued, never sent inline: checks append
notifications to the store outbox and ``drain_outbox`` hands them to a
sink (an NDJSON file by default, SMTP in production).  A sink failure
leaves the remainder queued; nothing is ever delivered twice.
"""

from __future__ import annotations

import json
import logging
import smtplib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from email.message import EmailMessage
from enum import Enum
from typing import Optional

from .ingest import ExtractionError
from .stampcore import hash_content, parse_rfc3339, rfc3339, utc_now
from .store import ScheduleMode, ScheduleTask

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# clocks


class SystemClock:
    def now(self) -> datetime:
        return utc_now()


class FakeClock:
    """Deterministic clock for tests and dry runs."""

    def __init__(self, start: Optional[datetime] = None):
        self._now = (start or utc_now()).replace(microsecond=0)
        if self._now.tzinfo is None:
            self._now = self._now.replace(tzinfo=timezone.utc)

    def now(self) -> datetime:
        return self._now

    def advance(self, days: float = 0, seconds: float = 0) -> datetime:
        self._now += timedelta(days=days, seconds=seconds)
        return self._now

    def set(self, t: datetime) -> None:
        self._now = t.astimezone(timezone.utc).replace(microsecond=0)


# ---------------------------------------------------------------------------
# notifications


class NotificationKind(str, Enum):
    CONTENT_CHANGED = "content_changed"
    COUNTRY_DIFFERS = "country_differs"
    BLOCKED = "blocked"
    ACCOUNT_CONFIRM = "account_confirm"


@dataclass
class Notification:
    recipient: str
    subject: str
    body: str
    kind: NotificationKind
    refs: dict = field(default_factory=dict)
    queued_at: Optional[datetime] = None

    def to_json(self) -> dict:
        return {
            "recipient": self.recipient,
            "subject": self.subject,
            "body": self.body,
            "kind": self.kind.value,
            "refs": self.refs,
            "queued_at": rfc3339(self.queued_at) if self.queued_at else None,
        }


class FileOutboxSink:
    """Appends one JSON object per line; the test- and dev-time mailer."""

    def __init__(self, path: str):
        self.path = path

    def deliver(self, notification: Notification) -> None:
        import os

        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(notification.to_json()) + "\n")


class SmtpSink:
    """Real mail delivery; same interface, production only."""

    def __init__(self, host: str, port: int, sender: str,
                 username: Optional[str] = None, password: Optional[str] = None,
                 use_tls: bool = True):
        self.host = host
        self.port = port
        self.sender = sender
        self.username = username
        self.password = password
        self.use_tls = use_tls

    def deliver(self, notification: Notification) -> None:
        msg = EmailMessage()
        msg["From"] = self.sender
        msg["To"] = notification.recipient
        msg["Subject"] = notification.subject
        msg.set_content(notification.body)
        with smtplib.SMTP(self.host, self.port, timeout=30) as smtp:
            if self.use_tls:
                smtp.starttls()
            if self.username:
                smtp.login(self.username, self.password or "")
            smtp.send_message(msg)


# ---------------------------------------------------------------------------
# due arithmetic


def is_due(task: ScheduleTask, now: datetime) -> bool:
    """Never-run tasks are due immediately; otherwise one full period
    must have elapsed since the last run."""
    if task.last_run is None:
        return True
    return now - task.last_run >= timedelta(days=task.frequency_days)


@dataclass
class TaskOutcome:
    task_id: int
    action: str  # stamped | stamped_first | unchanged | country_differs | blocked | reachable | skipped | error
    detail: str = ""
    record_id: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "action": self.action,
            "detail": self.detail,
            "record_id": self.record_id,
        }


@dataclass
class RunReport:
    at: datetime
    outcomes: list[TaskOutcome] = field(default_factory=list)

    @property
    def executed(self) -> int:
        return len(self.outcomes)

    def to_json(self) -> dict:
        return {
            "at": rfc3339(self.at),
            "executed": self.executed,
            "outcomes": [o.to_json() for o in self.outcomes],
        }


# ---------------------------------------------------------------------------
# the scheduler


class Scheduler:
    """Runs due tasks against an engine (anything with the pipeline API).

    The engine provides fetching, extraction, stamping, the store and
    notification queuing; this class only sequences them.  Failures of
    one task are recorded in the run report and never stop the sweep;
    a permanently dead URL keeps producing ``skipped`` outcomes and is
    never auto-deleted.
    """

    def __init__(self, engine, clock: Optional[SystemClock] = None):
        self.engine = engine
        self.clock = clock or getattr(engine, "clock", None) or SystemClock()

    # -- individual checks ---------------------------------------------------

    def check_restamp(self, task: ScheduleTask) -> TaskOutcome:
        engine = self.engine
        result = engine.fetcher.fetch(task.url)
        if not result.ok:
            return TaskOutcome(task.id, "skipped", f"fetch failed: {result.status.value}")
        try:
            doc = engine.extract(result)
        except ExtractionError as exc:
            return TaskOutcome(task.id, "skipped", f"extraction failed: {exc}")
        latest = engine.store.latest_version(task.url)
        new_hash = hash_content(doc.canonical_text)
        if latest is not None and latest.core.content_hash == new_hash:
            return TaskOutcome(task.id, "unchanged", latest.core.content_hash.hex)
        record, created = engine.stamp_document(
            doc, raw=result.body, owner=task.owner, post_title=task.post_title
        )
        if latest is None:
            return TaskOutcome(task.id, "stamped_first", record.core.content_hash.hex,
                               record_id=record.id)
        if task.email:
            engine.queue_content_changed(task.email, old=latest, new=record)
        return TaskOutcome(task.id, "stamped", record.core.content_hash.hex,
                           record_id=record.id)

    def check_country_compare(self, task: ScheduleTask) -> TaskOutcome:
        engine = self.engine
        now = self.clock.now()
        abroad = engine.fetcher.fetch_via(task.url, task.country, engine.registry)
        if not abroad.ok:
            engine.store.add_block_result(
                task.url, task.country, True, now,
                post_id=task.linked_post,
            )
            if task.email:
                engine.queue_blocked(task.email, task.url, task.country)
            return TaskOutcome(task.id, "blocked",
                               f"{task.country}: {abroad.status.value}")
        home = engine.fetcher.fetch_via(task.url, engine.settings.default_country,
                                        engine.registry)
        if not home.ok:
            return TaskOutcome(task.id, "skipped",
                               f"default location fetch failed: {home.status.value}")
        try:
            doc_abroad = engine.extract(abroad)
            doc_home = engine.extract(home)
        except ExtractionError as exc:
            return TaskOutcome(task.id, "skipped", f"extraction failed: {exc}")
        if hash_content(doc_abroad.canonical_text) == hash_content(doc_home.canonical_text):
            return TaskOutcome(task.id, "unchanged", task.country)
        # the home version is the reference copy; stamp it if it moved on
        latest = engine.store.latest_version(task.url)
        record = latest
        if latest is None or latest.core.content_hash != hash_content(doc_home.canonical_text):
            record, _ = engine.stamp_document(
                doc_home, raw=home.body, owner=task.owner, post_title=task.post_title
            )
        if task.email:
            engine.queue_country_differs(task.email, task.url, task.country,
                                         record.id if record else None)
        return TaskOutcome(task.id, "country_differs", task.country,
                           record_id=record.id if record else None)

    def check_block_watch(self, task: ScheduleTask) -> TaskOutcome:
        engine = self.engine
        now = self.clock.now()
        result = engine.fetcher.fetch_via(task.url, task.country, engine.registry)
        blocked = not result.ok
        engine.store.add_block_result(
            task.url, task.country, blocked, now, post_id=task.linked_post
        )
        if blocked:
            if task.email:
                engine.queue_blocked(task.email, task.url, task.country)
            return TaskOutcome(task.id, "blocked",
                               f"{task.country}: {result.status.value}")
        return TaskOutcome(task.id, "reachable", task.country)

    _DISPATCH = {
        ScheduleMode.RESTAMP: check_restamp,
        ScheduleMode.COUNTRY_COMPARE: check_country_compare,
        ScheduleMode.BLOCK_WATCH: check_block_watch,
    }

    # -- the sweep -------------------------------------------------------------

    def run_due(self, tasks: Optional[list[ScheduleTask]] = None) -> RunReport:
        """Execute every due task once and stamp its last_run.

        Running twice at the same instant does nothing the second
        time: executing a task sets ``last_run = now`` and the due rule
        requires a full period after that.
        """
        now = self.clock.now()
        if tasks is None:
            tasks = self.engine.store.list_schedules()
        report = RunReport(at=now)
        for task in tasks:
            if not is_due(task, now):
                continue
            try:
                outcome = self._DISPATCH[task.mode](self, task)
            except Exception as exc:  # one bad task must not stop the sweep
                logger.exception("schedule %s failed", task.id)
                outcome = TaskOutcome(task.id, "error", str(exc))
            self.engine.store.mark_schedule_run(
                task.id, now,
                linked_post=outcome.record_id if outcome.record_id else None,
            )
            report.outcomes.append(outcome)
        return report

    # -- outbox ------------------------------------------------------------------

    def drain_outbox(self, sink) -> int:
        """Deliver queued notifications; exactly once per notification.

        Marks each one delivered only after the sink accepted it, so a
        sink crash leaves the rest queued for the next drain.
        """
        delivered = 0
        for row in self.engine.store.undelivered_notifications():
            notification = Notification(
                recipient=row["recipient"],
                subject=row["subject"],
                body=row["body"],
                kind=NotificationKind(row["kind"]),
                refs=row["refs"],
                queued_at=parse_rfc3339(row["queued_at"]),
            )
            try:
                sink.deliver(notification)
            except Exception:
                logger.exception("outbox sink failed; leaving the rest queued")
                break
            self.engine.store.mark_delivered(row["id"])
            delivered += 1
        return delivered
