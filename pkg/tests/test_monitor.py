"""Scheduler cadence, watch modes, notification outbox."""

from __future__ import annotations

import json
from datetime import timedelta

from conftest import START
from helpers import article_html
from webstamp.ingest import DIRECT, ProxyRegistry
from webstamp.monitor import FakeClock, FileOutboxSink, is_due
from webstamp.store import ScheduleMode, ScheduleTask

URL = "http://site.test/watched"


def task_with(last_run, frequency_days=3):
    return ScheduleTask(
        id=1,
        url=URL,
        frequency_days=frequency_days,
        mode=ScheduleMode.RESTAMP,
        post_title=None,
        email=None,
        country=None,
        last_run=last_run,
        owner=None,
        linked_post=None,
    )


class TestIsDue:
    def test_never_run_is_due(self):
        assert is_due(task_with(None), START)

    def test_not_due_before_period(self):
        task = task_with(START)
        assert not is_due(task, START)
        assert not is_due(task, START + timedelta(days=2, hours=23))

    def test_due_at_exact_period_boundary(self):
        task = task_with(START)
        assert is_due(task, START + timedelta(days=3))
        assert is_due(task, START + timedelta(days=3, seconds=1))


class TestFakeClock:
    def test_advance_and_set(self):
        clock = FakeClock(START)
        assert clock.now() == START
        clock.advance(days=1, seconds=30)
        assert clock.now() == START + timedelta(days=1, seconds=30)
        clock.set(START)
        assert clock.now() == START


class TestRestampSchedule:
    def test_add_creates_baseline_and_starts_cycle(self, engine, fake_transport, fake_clock):
        fake_transport.set(URL, article_html("Watched", "Version one."))
        task = engine.add_schedule(URL, 3)
        assert task.last_run == fake_clock.now()
        assert task.linked_post is not None
        assert engine.store.get_stamp(task.linked_post).url == URL
        # baseline creation is not a change: nothing queued
        assert engine.store.notification_count(delivered=False) == 0

    def test_not_due_until_period_elapses(self, engine, fake_transport, fake_clock):
        fake_transport.set(URL, article_html("Watched", "Version one."))
        engine.add_schedule(URL, 3)
        fake_clock.advance(days=2)
        report = engine.run_due()
        assert report.outcomes == []

    def test_unchanged_content_records_no_new_version(self, engine, fake_transport, fake_clock):
        fake_transport.set(URL, article_html("Watched", "Version one."))
        engine.add_schedule(URL, 3)
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["unchanged"]
        assert len(engine.store.versions_of(URL)) == 1
        assert engine.store.notification_count(delivered=False) == 0

    def test_changed_content_stamps_and_notifies(self, engine, fake_transport, fake_clock):
        fake_transport.set(URL, article_html("Watched", "Version one."))
        engine.add_schedule(URL, 3, email="reader@example.org")
        fake_transport.set(URL, article_html("Watched", "Version two."))
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["stamped"]
        assert len(engine.store.versions_of(URL)) == 2
        pending = engine.store.undelivered_notifications()
        assert len(pending) == 1
        note = pending[0]
        assert note["kind"] == "content_changed"
        assert note["recipient"] == "reader@example.org"
        assert note["subject"].startswith("[StampTheWeb]")
        assert "/compare?old=" in note["body"]

    def test_change_without_email_stamps_silently(self, engine, fake_transport, fake_clock):
        fake_transport.set(URL, article_html("Watched", "Version one."))
        engine.add_schedule(URL, 3)
        fake_transport.set(URL, article_html("Watched", "Version two."))
        fake_clock.advance(days=3)
        engine.run_due()
        assert len(engine.store.versions_of(URL)) == 2
        assert engine.store.notification_count(delivered=False) == 0

    def test_dead_url_at_creation_stamps_first_on_recovery(
        self, engine, fake_transport, fake_clock
    ):
        fake_transport.fail(URL)
        task = engine.add_schedule(URL, 3, email="reader@example.org")
        assert task.linked_post is None
        fake_transport.set(URL, article_html("Watched", "Finally up."))
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["stamped_first"]
        # a first observation is a baseline, not a change
        assert engine.store.notification_count(delivered=False) == 0

    def test_three_day_frequency_runs_thrice_in_ten_days(
        self, engine, fake_transport, fake_clock
    ):
        fake_transport.set(URL, article_html("Watched", "Stable text."))
        engine.add_schedule(URL, 3)
        executed = []
        for day in range(1, 11):
            fake_clock.advance(days=1)
            report = engine.run_due()
            executed.extend((day, o.action) for o in report.outcomes)
        assert executed == [(3, "unchanged"), (6, "unchanged"), (9, "unchanged")]

    def test_rerun_at_same_instant_is_noop(self, engine, fake_transport, fake_clock):
        fake_transport.set(URL, article_html("Watched", "Text."))
        engine.add_schedule(URL, 3)
        fake_clock.advance(days=3)
        first = engine.run_due()
        second = engine.run_due()
        assert len(first.outcomes) == 1
        assert second.outcomes == []

    def test_fetch_failure_is_skipped_but_advances_cycle(
        self, engine, fake_transport, fake_clock
    ):
        fake_transport.set(URL, article_html("Watched", "Text."))
        engine.add_schedule(URL, 3)
        fake_transport.fail(URL)
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["skipped"]
        # the failed run still advances the cycle
        assert engine.run_due().outcomes == []

    def test_broken_page_does_not_kill_other_tasks(self, engine, fake_transport, fake_clock):
        other = "http://site.test/healthy"
        fake_transport.set(URL, article_html("Watched", "Text."))
        fake_transport.set(other, article_html("Healthy", "Fine."))
        engine.add_schedule(URL, 3)
        engine.add_schedule(other, 3)
        fake_transport.set(URL, b"\xff\xfe garbage bytes", encoding="utf-8")
        fake_clock.advance(days=3)
        report = engine.run_due()
        actions = {o.task_id: o.action for o in report.outcomes}
        assert sorted(actions.values()) == ["skipped", "unchanged"]


class TestCountryCompareSchedule:
    CN_PROXY = "cnproxy:3128"

    def setup_pages(self, fake_transport, home: bytes, abroad):
        fake_transport.set(URL, home)
        if abroad is None:
            fake_transport.fail(URL, proxy=self.CN_PROXY)
        else:
            fake_transport.set(URL, abroad, proxy=self.CN_PROXY)

    def registry(self):
        return ProxyRegistry(entries={"CN": [self.CN_PROXY], "DE": [DIRECT]})

    def test_same_view_everywhere_is_unchanged(self, make_engine, fake_transport, fake_clock):
        engine = make_engine(registry=self.registry())
        page = article_html("Story", "Identical words.")
        self.setup_pages(fake_transport, page, page)
        engine.add_schedule(URL, 3, mode=ScheduleMode.COUNTRY_COMPARE, country="CN")
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["unchanged"]
        assert engine.store.notification_count(delivered=False) == 0

    def test_diverging_view_notifies(self, make_engine, fake_transport, fake_clock):
        engine = make_engine(registry=self.registry())
        self.setup_pages(
            fake_transport,
            article_html("Story", "Home version."),
            article_html("Story", "Altered abroad."),
        )
        engine.add_schedule(
            URL, 3, mode=ScheduleMode.COUNTRY_COMPARE, country="CN",
            email="reader@example.org",
        )
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["country_differs"]
        pending = engine.store.undelivered_notifications()
        assert len(pending) == 1
        assert pending[0]["kind"] == "country_differs"
        assert "CN" in pending[0]["subject"] or "CN" in pending[0]["body"]

    def test_unreachable_abroad_is_blocked(self, make_engine, fake_transport, fake_clock):
        engine = make_engine(registry=self.registry())
        self.setup_pages(fake_transport, article_html("Story", "Home version."), None)
        engine.add_schedule(
            URL, 3, mode=ScheduleMode.COUNTRY_COMPARE, country="CN",
            email="reader@example.org",
        )
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["blocked"]
        results = engine.store.latest_block_results(URL)
        assert len(results) == 1
        assert results[0].country == "CN"
        assert results[0].blocked is True
        pending = engine.store.undelivered_notifications()
        assert [n["kind"] for n in pending] == ["blocked"]


class TestBlockWatchSchedule:
    CN_PROXY = "cnproxy:3128"

    def registry(self):
        return ProxyRegistry(entries={"CN": [self.CN_PROXY], "DE": [DIRECT]})

    def test_reachable(self, make_engine, fake_transport, fake_clock):
        engine = make_engine(registry=self.registry())
        fake_transport.set(URL, article_html("S", "Text."), proxy=self.CN_PROXY)
        engine.add_schedule(URL, 3, mode=ScheduleMode.BLOCK_WATCH, country="CN")
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["reachable"]
        results = engine.store.latest_block_results(URL)
        assert results[0].blocked is False
        assert engine.store.notification_count(delivered=False) == 0

    def test_blocked_notifies(self, make_engine, fake_transport, fake_clock):
        engine = make_engine(registry=self.registry())
        fake_transport.fail(URL, proxy=self.CN_PROXY)
        engine.add_schedule(
            URL, 3, mode=ScheduleMode.BLOCK_WATCH, country="CN",
            email="reader@example.org",
        )
        fake_clock.advance(days=3)
        report = engine.run_due()
        assert [o.action for o in report.outcomes] == ["blocked"]
        results = engine.store.latest_block_results(URL)
        assert results[0].blocked is True
        pending = engine.store.undelivered_notifications()
        assert [n["kind"] for n in pending] == ["blocked"]


class TestOutbox:
    def queue_two(self, engine, fake_transport, fake_clock):
        fake_transport.set(URL, article_html("W", "One."))
        engine.add_schedule(URL, 3, email="reader@example.org")
        fake_transport.set(URL, article_html("W", "Two."))
        fake_clock.advance(days=3)
        engine.run_due()
        fake_transport.set(URL, article_html("W", "Three."))
        fake_clock.advance(days=3)
        engine.run_due()
        assert engine.store.notification_count(delivered=False) == 2

    def test_drain_delivers_exactly_once(self, engine, fake_transport, fake_clock, tmp_path):
        self.queue_two(engine, fake_transport, fake_clock)
        outbox = tmp_path / "outbox.ndjson"
        sink = FileOutboxSink(str(outbox))
        assert engine.drain_outbox(sink) == 2
        assert engine.drain_outbox(sink) == 0
        lines = outbox.read_text().strip().splitlines()
        assert len(lines) == 2
        docs = [json.loads(line) for line in lines]
        assert all(d["recipient"] == "reader@example.org" for d in docs)
        assert all(d["kind"] == "content_changed" for d in docs)

    def test_default_sink_writes_configured_outbox(self, engine, fake_transport, fake_clock):
        self.queue_two(engine, fake_transport, fake_clock)
        assert engine.drain_outbox() == 2
        lines = open(engine.settings.outbox_path).read().strip().splitlines()
        assert len(lines) == 2

    def test_failing_sink_leaves_queue_intact(self, engine, fake_transport, fake_clock):
        self.queue_two(engine, fake_transport, fake_clock)

        class DownSink:
            def deliver(self, notification):
                raise ConnectionError("smtp down")

        assert engine.drain_outbox(DownSink()) == 0
        assert engine.store.notification_count(delivered=False) == 2
        # a recovered sink picks the same two up later
        delivered = []

        class UpSink:
            def deliver(self, notification):
                delivered.append(notification)

        assert engine.drain_outbox(UpSink()) == 2
        assert len(delivered) == 2
