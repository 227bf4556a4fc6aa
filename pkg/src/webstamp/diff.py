"""Word-level difference between two article versions.

Texts are compared as whitespace-separated token streams.  The edit
script is LCS-minimal (Myers' greedy algorithm) and normalized so that
runs are maximal and every changed region lists its deleted tokens
before its inserted ones, which makes the output deterministic.

Comparison is hash-first: ``compare_texts`` short-circuits to an
unchanged view when both sides hash identically, so the quadratic path
only runs for texts that actually differ.
"""

from __future__ import annotations

import hashlib
from array import array
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence


class DiffError(Exception):
    """An edit script was applied to a text it does not belong to."""


class Kind(str, Enum):
    EQUAL = "equal"
    DELETE = "delete"
    INSERT = "insert"


def tokenize(text: str) -> list[str]:
    """Split on whitespace; punctuation stays attached to its word."""
    return text.split()


def join_tokens(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


@dataclass(frozen=True)
class DiffOp:
    kind: Kind
    tokens: tuple[str, ...]


@dataclass
class DiffScript:
    """Token-level edit script turning the old stream into the new one."""

    ops: list[DiffOp]
    old_label: str = ""
    new_label: str = ""

    @property
    def changed(self) -> bool:
        return any(op.kind != Kind.EQUAL for op in self.ops)

    @property
    def cost(self) -> int:
        """Number of deleted plus inserted tokens."""
        return sum(len(op.tokens) for op in self.ops if op.kind != Kind.EQUAL)

    def old_tokens(self) -> list[str]:
        out: list[str] = []
        for op in self.ops:
            if op.kind in (Kind.EQUAL, Kind.DELETE):
                out.extend(op.tokens)
        return out

    def new_tokens(self) -> list[str]:
        out: list[str] = []
        for op in self.ops:
            if op.kind in (Kind.EQUAL, Kind.INSERT):
                out.extend(op.tokens)
        return out

    def to_json(self) -> dict:
        return {
            "old_label": self.old_label,
            "new_label": self.new_label,
            "changed": self.changed,
            "ops": [{"kind": op.kind.value, "tokens": list(op.tokens)} for op in self.ops],
        }


# ---------------------------------------------------------------------------
# Myers shortest edit script


def _myers_raw(a: list[str], b: list[str]) -> list[tuple[str, str]]:
    """Minimal (kind, token) trace from a to b.

    Classic O((N+M)D) greedy search.  Snapshots one V slice per round
    for backtracking, so memory is O(D^2); article versions are close
    to each other in practice, which keeps D small.
    """
    n, m = len(a), len(b)
    max_d = n + m
    if max_d == 0:
        return []
    off = max_d
    v = array("i", [0] * (2 * max_d + 2))
    trace: list[array] = []
    found_d = -1
    for d in range(max_d + 1):
        trace.append(array("i", v))
        for k in range(-d, d + 1, 2):
            # ties prefer the deletion branch, keeping deletes first
            if k == -d or (k != d and v[off + k - 1] < v[off + k + 1]):
                x = v[off + k + 1]
            else:
                x = v[off + k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[off + k] = x
            if x >= n and y >= m:
                found_d = d
                break
        if found_d >= 0:
            break
    assert found_d >= 0

    ops: list[tuple[str, str]] = []
    x, y = n, m
    for d in range(found_d, 0, -1):
        pv = trace[d]
        k = x - y
        if k == -d or (k != d and pv[off + k - 1] < pv[off + k + 1]):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = pv[off + prev_k]
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            x -= 1
            y -= 1
            ops.append(("equal", a[x]))
        if x == prev_x:
            y -= 1
            ops.append(("insert", b[y]))
        else:
            x -= 1
            ops.append(("delete", a[x]))
    while x > 0 and y > 0:
        x -= 1
        y -= 1
        ops.append(("equal", a[x]))
    assert x == 0 and y == 0
    ops.reverse()
    return ops


def _normalize(raw: list[tuple[str, str]], prefix: list[str], suffix: list[str]) -> list[DiffOp]:
    """Merge into maximal runs with deletes ahead of inserts per region."""
    ops: list[DiffOp] = []
    equal_run: list[str] = list(prefix)
    deletes: list[str] = []
    inserts: list[str] = []

    def flush_change() -> None:
        nonlocal deletes, inserts
        if deletes:
            ops.append(DiffOp(Kind.DELETE, tuple(deletes)))
            deletes = []
        if inserts:
            ops.append(DiffOp(Kind.INSERT, tuple(inserts)))
            inserts = []

    def flush_equal() -> None:
        nonlocal equal_run
        if equal_run:
            ops.append(DiffOp(Kind.EQUAL, tuple(equal_run)))
            equal_run = []

    for kind, token in raw:
        if kind == "equal":
            flush_change()
            equal_run.append(token)
        else:
            flush_equal()
            (deletes if kind == "delete" else inserts).append(token)
    flush_change()
    equal_run.extend(suffix)
    flush_equal()
    return ops


def compute_diff(
    old: str, new: str, old_label: str = "", new_label: str = ""
) -> DiffScript:
    """LCS-minimal word diff from ``old`` to ``new``."""
    a = tokenize(old)
    b = tokenize(new)
    # trim common ends; the search cost depends only on the middle
    lo = 0
    while lo < len(a) and lo < len(b) and a[lo] == b[lo]:
        lo += 1
    hi = 0
    while (
        hi < len(a) - lo and hi < len(b) - lo and a[len(a) - 1 - hi] == b[len(b) - 1 - hi]
    ):
        hi += 1
    prefix, suffix = a[:lo], a[len(a) - hi :] if hi else []
    raw = _myers_raw(a[lo : len(a) - hi], b[lo : len(b) - hi])
    ops = _normalize(raw, prefix, suffix)
    return DiffScript(ops=ops, old_label=old_label, new_label=new_label)


def apply_diff(old: str, script: DiffScript) -> str:
    """Replay a script against the old text; raises if it disagrees."""
    a = tokenize(old)
    pos = 0
    out: list[str] = []
    for op in script.ops:
        if op.kind == Kind.INSERT:
            out.extend(op.tokens)
            continue
        expect = a[pos : pos + len(op.tokens)]
        if tuple(expect) != op.tokens:
            raise DiffError(
                f"script does not match old text at token {pos}: "
                f"expected {op.tokens[:3]}..., found {tuple(expect[:3])}..."
            )
        pos += len(op.tokens)
        if op.kind == Kind.EQUAL:
            out.extend(op.tokens)
    if pos != len(a):
        raise DiffError(f"script consumed {pos} of {len(a)} old tokens")
    return join_tokens(out)


# ---------------------------------------------------------------------------
# side-by-side rendering


@dataclass(frozen=True)
class ViewRow:
    kind: str  # "equal" | "deleted" | "inserted"
    text: str


@dataclass
class ComparisonView:
    """Two-column change view; rows hold marked token spans per side."""

    changed: bool
    old_label: str
    new_label: str
    old_rows: list[ViewRow] = field(default_factory=list)
    new_rows: list[ViewRow] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "changed": self.changed,
            "old_label": self.old_label,
            "new_label": self.new_label,
            "old_rows": [{"kind": r.kind, "text": r.text} for r in self.old_rows],
            "new_rows": [{"kind": r.kind, "text": r.text} for r in self.new_rows],
        }


def render_side_by_side(script: DiffScript) -> ComparisonView:
    """Project a script onto old/new columns.

    Every old-side token lands in the old column (equal or deleted) and
    every new-side token in the new column (equal or inserted), so both
    columns read as their full texts with changes marked.
    """
    old_rows: list[ViewRow] = []
    new_rows: list[ViewRow] = []
    for op in script.ops:
        text = join_tokens(op.tokens)
        if op.kind == Kind.EQUAL:
            old_rows.append(ViewRow("equal", text))
            new_rows.append(ViewRow("equal", text))
        elif op.kind == Kind.DELETE:
            old_rows.append(ViewRow("deleted", text))
        else:
            new_rows.append(ViewRow("inserted", text))
    return ComparisonView(
        changed=script.changed,
        old_label=script.old_label,
        new_label=script.new_label,
        old_rows=old_rows,
        new_rows=new_rows,
    )


def compare_texts(
    old: str, new: str, old_label: str = "", new_label: str = ""
) -> ComparisonView:
    """Hash-first comparison of two canonical texts."""
    old_digest = hashlib.sha256(old.encode("utf-8")).digest()
    new_digest = hashlib.sha256(new.encode("utf-8")).digest()
    if old_digest == new_digest:
        rows = [ViewRow("equal", join_tokens(tokenize(old)))] if old.strip() else []
        return ComparisonView(
            changed=False,
            old_label=old_label,
            new_label=new_label,
            old_rows=list(rows),
            new_rows=list(rows),
        )
    return render_side_by_side(compute_diff(old, new, old_label, new_label))
