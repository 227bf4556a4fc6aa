"""Command line interface.

Pure composition over the engine; no logic of its own.  Exit codes:
0 success, 1 verification or diff failure, 2 input error, 3 network or
upstream failure, 4 auth/permission problem.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .config import Settings
from .diff import ComparisonView
from .engine import AuthError, Engine, UpstreamError, build_engine
from .ingest import DEFAULT_BLOCK_MAP_COUNTRIES, MalformedUrlError
from .monitor import FakeClock
from .stampcore import StampCore, VerificationReport, verify_stamp
from .store import NotFound, ScheduleMode, ValidationError

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_NETWORK = 3
EXIT_AUTH = 4


def _engine(args) -> Engine:
    return build_engine(config_file=args.config)


def _emit(args, doc: dict, text: str) -> None:
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_stamp(args) -> int:
    engine = _engine(args)
    receipt = engine.stamp_url(args.url, post_title=args.title)
    record = receipt.record
    lines = [
        f"{'created' if receipt.created else 'already stamped (deduplicated)'}:"
        f" record {record.id}",
        f"  url:          {record.url}",
        f"  title:        {record.web_title}",
        f"  content hash: {record.core.content_hash.hex}",
        f"  stamped at:   {record.core.to_json()['stamped_at']}",
        f"  chain hash:   {record.core.chain_hash.hex}",
    ]
    _emit(args, receipt.to_json(), "\n".join(lines))
    if args.receipt:
        with open(args.receipt, "w", encoding="utf-8") as fh:
            json.dump(_receipt_doc(engine, record.id), fh, indent=2)
        if not args.json:
            print(f"  receipt:      {args.receipt}")
    return EXIT_OK


def _receipt_doc(engine: Engine, record_id: int) -> dict:
    doc = engine.store.export_receipt(record_id)
    doc["public_key"] = engine.keypair.public_key.hex()
    return doc


def cmd_verify(args) -> int:
    """Re-verify a receipt, offline when possible.

    The text to check comes from --text when given, else from the
    snapshot file the receipt points into, else from the receipt's own
    embedded copy.
    """
    with open(args.receipt, "r", encoding="utf-8") as fh:
        receipt = json.load(fh)
    if args.text:
        with open(args.text, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = None
        snapshot_ref = receipt.get("snapshot_ref")
        if snapshot_ref:
            settings = Settings.from_env(config_file=args.config)
            import os

            path = os.path.join(settings.snapshot_dir, snapshot_ref)
            if os.path.exists(path):
                with open(path, "r", encoding="utf-8") as fh:
                    text = fh.read()
        if text is None:
            text = receipt["canonical_text"]

    core = StampCore.from_json(receipt["record"]["core"])
    public_key = bytes.fromhex(receipt["public_key"]) if receipt.get("public_key") else None
    evidence = None
    if receipt.get("proof") and receipt.get("batch"):
        from .anchor import AnchorReceipt, InclusionProof

        evidence = (
            InclusionProof.from_json(receipt["proof"]),
            AnchorReceipt.from_json(receipt["batch"]),
        )
    report = verify_stamp(
        text, core.stamped_at, core, public_key=public_key, anchor_evidence=evidence
    )
    return _print_report(args, report)


def _print_report(args, report: VerificationReport) -> int:
    doc = report.to_json()
    if report.overall_valid:
        _emit(args, doc, "VALID: all applicable checks passed")
        return EXIT_OK
    failing = ", ".join(report.failing_checks())
    _emit(args, doc, f"INVALID: failing checks: {failing}")
    return EXIT_VERIFY_FAILED


def cmd_verify_record(args) -> int:
    engine = _engine(args)
    text = None
    if args.text:
        with open(args.text, "r", encoding="utf-8") as fh:
            text = fh.read()
    report, _receipt = engine.verify_record(args.record_id, text_override=text)
    return _print_report(args, report)


def _render_view(args, view: ComparisonView) -> None:
    if args.json:
        print(json.dumps(view.to_json(), indent=2))
        return
    if not view.changed:
        print(f"no change between {view.old_label} and {view.new_label}")
        return
    print(f"change found between {view.old_label} and {view.new_label}")
    print(f"--- {view.old_label}")
    for row in view.old_rows:
        marker = "-" if row.kind == "deleted" else " "
        print(f"{marker} {row.text}")
    print(f"+++ {view.new_label}")
    for row in view.new_rows:
        marker = "+" if row.kind == "inserted" else " "
        print(f"{marker} {row.text}")


def cmd_compare(args) -> int:
    engine = _engine(args)
    if args.country:
        view = engine.compare_with_country(args.old, args.country)
    elif args.new == "current" or args.new is None:
        view = engine.compare_with_current(args.old)
    else:
        view = engine.compare_records(args.old, int(args.new))
    _render_view(args, view)
    return EXIT_OK


def cmd_schedule_add(args) -> int:
    engine = _engine(args)
    task = engine.add_schedule(
        args.url,
        args.frequency,
        mode=ScheduleMode(args.mode),
        post_title=args.title,
        email=args.email,
        country=args.country,
    )
    _emit(
        args,
        task.to_json(),
        f"schedule {task.id}: {task.url} every {task.frequency_days} day(s)"
        f" [{task.mode.value}]"
        + (f" baseline record {task.linked_post}" if task.linked_post else ""),
    )
    return EXIT_OK


def cmd_schedule_list(args) -> int:
    engine = _engine(args)
    tasks = engine.store.list_schedules()
    if args.json:
        print(json.dumps([t.to_json() for t in tasks], indent=2))
    else:
        for task in tasks:
            last = task.to_json()["last_run"] or "never"
            print(
                f"{task.id}\t{task.url}\tevery {task.frequency_days}d"
                f"\t{task.mode.value}\tlast run {last}"
            )
    return EXIT_OK


def cmd_schedule_remove(args) -> int:
    engine = _engine(args)
    engine.store.delete_schedule(args.schedule_id)
    _emit(args, {"deleted": args.schedule_id}, f"deleted schedule {args.schedule_id}")
    return EXIT_OK


def cmd_schedule_run(args) -> int:
    """Run the scheduler loop, optionally under a simulated clock.

    ``--ticks K --step D`` advances a fake clock K times by D days,
    sweeping due tasks after each step; without --ticks it sweeps once
    at the real current time.
    """
    if args.ticks is not None:
        clock = FakeClock()
        engine = build_engine(config_file=args.config, clock=clock)
        total = []
        for _ in range(args.ticks):
            clock.advance(days=args.step)
            report = engine.run_due()
            total.extend(report.outcomes)
            engine.drain_outbox()
        doc = {"executed": len(total), "outcomes": [o.to_json() for o in total]}
        _emit(args, doc, f"executed {len(total)} task run(s) over {args.ticks} tick(s)")
        return EXIT_OK
    engine = _engine(args)
    report = engine.run_due()
    engine.drain_outbox()
    _emit(args, report.to_json(), f"executed {report.executed} task run(s)")
    return EXIT_OK


def cmd_block_check(args) -> int:
    engine = _engine(args)
    countries = args.countries.split(",") if args.countries else None
    results = engine.block_check(args.url, countries=countries)
    rows = [r.to_json() for r in results]
    blocked = [r for r in rows if r["blocked"]]
    if args.report_dir:
        from . import report as report_mod

        files = report_mod.write_block_report(args.url, rows, args.report_dir)
    else:
        files = []
    if args.json:
        print(json.dumps({"url": args.url, "results": rows, "files": files}, indent=2))
    else:
        for row in rows:
            print(f"{row['country']}\t{'BLOCKED' if row['blocked'] else 'reachable'}")
        print(f"{len(blocked)} of {len(rows)} countries blocked")
        for path in files:
            print(f"wrote {path}")
    return EXIT_OK


def cmd_stats(args) -> int:
    engine = _engine(args)
    rows = engine.store.stats_by_country()
    if args.report_dir:
        from . import report as report_mod

        files = report_mod.write_country_stats(rows, args.report_dir)
    else:
        files = []
    if args.json:
        print(json.dumps({"countries": rows, "files": files}, indent=2))
    else:
        for row in rows:
            print(f"{row['country']}\t{row['count']}\t{row['percentage']:.2f}%")
        for path in files:
            print(f"wrote {path}")
    return EXIT_OK


def cmd_seal_batch(args) -> int:
    engine = _engine(args)
    engine.retry_sealed()
    batch = engine.seal_pending()
    if batch is None:
        _emit(args, {"sealed": None}, "nothing pending")
        return EXIT_OK
    doc = {
        "batch_id": batch.batch_id,
        "leaves": len(batch.leaves),
        "merkle_root": batch.merkle_root.hex,
        "anchor_address": batch.anchor_address,
        "status": batch.status.value,
        "txn_ref": batch.txn_ref,
    }
    _emit(
        args,
        doc,
        f"batch {batch.batch_id}: {len(batch.leaves)} stamp(s) under root"
        f" {batch.merkle_root.hex}\n  address {batch.anchor_address}"
        f" [{batch.status.value}]",
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    engine = _engine(args)
    uvicorn.run(create_app(engine), host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="webstamp",
        description="Trusted timestamping and change tracking for web pages.",
    )
    parser.add_argument("--config", help="KEY=VALUE settings file", default=None)
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stamp", help="fetch a page and timestamp its article text")
    p.add_argument("url")
    p.add_argument("--title", help="optional post title", default=None)
    p.add_argument("--receipt", help="write a verification receipt to this file")
    p.set_defaults(func=cmd_stamp)

    p = sub.add_parser("verify", help="re-verify a receipt file")
    p.add_argument("receipt")
    p.add_argument("--text", help="check this text file instead of the snapshot")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("verify-record", help="re-verify a stored record by id")
    p.add_argument("record_id", type=int)
    p.add_argument("--text", help="check this text file instead of the snapshot")
    p.set_defaults(func=cmd_verify_record)

    p = sub.add_parser("compare", help="diff two versions of a page")
    p.add_argument("old", type=int, help="old record id")
    p.add_argument("new", nargs="?", default=None,
                   help="new record id or 'current' (default)")
    p.add_argument("--country", help="compare against the view from a country")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("schedule", help="manage monitoring schedules")
    ssub = p.add_subparsers(dest="schedule_command", required=True)

    sp = ssub.add_parser("add", help="create a schedule (URL + frequency)")
    sp.add_argument("url")
    sp.add_argument("--frequency", type=int, required=True, help="days between runs, 1..30")
    sp.add_argument("--mode", choices=[m.value for m in ScheduleMode],
                    default=ScheduleMode.RESTAMP.value)
    sp.add_argument("--title", default=None)
    sp.add_argument("--email", default=None)
    sp.add_argument("--country", default=None)
    sp.set_defaults(func=cmd_schedule_add)

    sp = ssub.add_parser("list", help="list schedules")
    sp.set_defaults(func=cmd_schedule_list)

    sp = ssub.add_parser("remove", help="delete a schedule")
    sp.add_argument("schedule_id", type=int)
    sp.set_defaults(func=cmd_schedule_remove)

    sp = ssub.add_parser("run", help="run due tasks (optionally on a fake clock)")
    sp.add_argument("--ticks", type=int, default=None,
                    help="simulate this many clock steps")
    sp.add_argument("--step", type=float, default=1.0, help="days per tick")
    sp.set_defaults(func=cmd_schedule_run)

    p = sub.add_parser("block-check", help="probe a URL from many countries")
    p.add_argument("url")
    p.add_argument("--countries", help="comma-separated ISO codes", default=None)
    p.add_argument("--report-dir", help="write TSV + figure here", default=None)
    p.set_defaults(func=cmd_block_check)

    p = sub.add_parser("stats", help="stamped posts per country of origin")
    p.add_argument("--report-dir", help="write TSV + figure here", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("seal-batch", help="anchor all pending stamps as one batch")
    p.set_defaults(func=cmd_seal_batch)

    p = sub.add_parser("serve", help="run the REST API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MalformedUrlError, ValidationError, NotFound, FileNotFoundError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UpstreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except AuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_AUTH


if __name__ == "__main__":
    sys.exit(main())
