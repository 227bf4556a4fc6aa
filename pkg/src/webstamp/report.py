"""Report files for the CLI: delimited tables plus rendered figures.

Each report writes a tab-separated ``.tsv`` next to a ``.png`` chart of
the same data, into a directory the caller picks.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

BLOCKED_COLOR = "#c0392b"
REACHABLE_COLOR = "#27ae60"
BAR_COLOR = "#2f6f9f"

FIG_WIDTH = 9.0


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_country_stats(rows: list[dict], outdir: str) -> list[str]:
    """Country share of stamped posts: TSV table + bar chart."""
    os.makedirs(outdir, exist_ok=True)
    tsv_path = os.path.join(outdir, "stats_countries.tsv")
    png_path = os.path.join(outdir, "stats_countries.png")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("country\tcount\tpercentage\n")
        for row in rows:
            fh.write(f"{row['country']}\t{row['count']}\t{row['percentage']:.2f}\n")

    countries = [r["country"] for r in rows]
    counts = [r["count"] for r in rows]
    height = max(2.5, 0.4 * len(rows) + 1.2)
    fig, ax = plt.subplots(figsize=(FIG_WIDTH, height))
    ax.barh(countries[::-1], counts[::-1], color=BAR_COLOR)
    ax.set_xlabel("stamped posts")
    ax.set_title("Stamped posts by country of origin")
    for i, row in enumerate(rows[::-1]):
        ax.text(row["count"], i, f" {row['percentage']:.2f}%", va="center", fontsize=8)
    _save(fig, png_path)
    return [tsv_path, png_path]


def write_block_report(url: str, rows: list[dict], outdir: str) -> list[str]:
    """Per-country reachability: TSV table + red/green bar chart."""
    os.makedirs(outdir, exist_ok=True)
    tsv_path = os.path.join(outdir, "block_check.tsv")
    png_path = os.path.join(outdir, "block_check.png")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("country\tblocked\tchecked_at\n")
        for row in rows:
            fh.write(
                f"{row['country']}\t{'yes' if row['blocked'] else 'no'}\t{row['checked_at']}\n"
            )

    countries = [r["country"] for r in rows]
    colors = [BLOCKED_COLOR if r["blocked"] else REACHABLE_COLOR for r in rows]
    height = max(2.5, 0.35 * len(rows) + 1.2)
    fig, ax = plt.subplots(figsize=(FIG_WIDTH, height))
    ax.barh(countries[::-1], [1] * len(rows), color=colors[::-1])
    ax.set_xlim(0, 1)
    ax.set_xticks([])
    ax.set_title(f"Reachability of {url}")
    handles = [
        plt.Rectangle((0, 0), 1, 1, color=REACHABLE_COLOR),
        plt.Rectangle((0, 0), 1, 1, color=BLOCKED_COLOR),
    ]
    ax.legend(handles, ["reachable", "blocked"], loc="lower right", fontsize=8)
    _save(fig, png_path)
    return [tsv_path, png_path]
