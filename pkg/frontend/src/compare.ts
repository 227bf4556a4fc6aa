/** Comparison screen model.
 *
 * The server already did the diffing; each payload row becomes exactly
 * one marked span per column.  Nothing here recomputes, merges or
 * reorders content.
 */

import type { ComparisonView, ViewRow } from "./types.js";

export type Mark = "none" | "deleted" | "inserted";

export interface MarkedSpan {
  text: string;
  mark: Mark;
}

export function columnSpans(rows: ViewRow[]): MarkedSpan[] {
  return rows.map((row) => ({
    text: row.text,
    mark: row.kind === "equal" ? "none" : row.kind,
  }));
}

export function compareBanner(view: ComparisonView): string {
  return view.changed
    ? "Change in the content found"
    : "No change in the content";
}

export interface CompareModel {
  banner: string;
  changed: boolean;
  oldLabel: string;
  newLabel: string;
  oldSpans: MarkedSpan[];
  newSpans: MarkedSpan[];
}

export function compareModel(view: ComparisonView): CompareModel {
  return {
    banner: compareBanner(view),
    changed: view.changed,
    oldLabel: view.old_label,
    newLabel: view.new_label,
    oldSpans: columnSpans(view.old_rows),
    newSpans: columnSpans(view.new_rows),
  };
}
