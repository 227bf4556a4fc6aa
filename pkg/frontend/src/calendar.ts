/** Calendar views over stamped posts.
 *
 * All stamp times are RFC 3339 UTC strings; slicing them keeps every
 * bucket in UTC and independent of the viewer's timezone.  A marker is
 * one date with at least one stamp (rendered as a green dot); clicking
 * through opens the posts of that date.
 */

import type { StampRecord } from "./types.js";

export interface DayMarker {
  date: string; // YYYY-MM-DD
  ids: number[];
}

export interface DayEntry {
  id: number;
  time: string; // HH:MM:SS
  title: string;
  url: string;
}

function dateOf(record: StampRecord): string {
  return record.core.stamped_at.slice(0, 10);
}

function timeOf(record: StampRecord): string {
  return record.core.stamped_at.slice(11, 19);
}

/** One marker per distinct stamp date, sorted ascending. */
export function markers(records: StampRecord[]): DayMarker[] {
  const byDate = new Map<string, number[]>();
  for (const record of records) {
    const date = dateOf(record);
    const ids = byDate.get(date) ?? [];
    ids.push(record.id);
    byDate.set(date, ids);
  }
  return [...byDate.entries()]
    .sort(([a], [b]) => (a < b ? -1 : 1))
    .map(([date, ids]) => ({ date, ids }));
}

/** Year view: stamp count per month, index 0 = January. */
export function yearView(records: StampRecord[], year: number): number[] {
  const months = new Array(12).fill(0);
  const prefix = `${String(year).padStart(4, "0")}-`;
  for (const record of records) {
    const date = dateOf(record);
    if (date.startsWith(prefix)) {
      months[Number(date.slice(5, 7)) - 1] += 1;
    }
  }
  return months;
}

/** Month view: every day of the month with its markers (empty or not). */
export function monthView(records: StampRecord[], year: number, month: number): DayMarker[] {
  const days = new Date(Date.UTC(year, month, 0)).getUTCDate();
  const prefix = `${String(year).padStart(4, "0")}-${String(month).padStart(2, "0")}-`;
  const marked = new Map(
    markers(records.filter((r) => dateOf(r).startsWith(prefix))).map((m) => [m.date, m.ids]),
  );
  const view: DayMarker[] = [];
  for (let day = 1; day <= days; day++) {
    const date = `${prefix}${String(day).padStart(2, "0")}`;
    view.push({ date, ids: marked.get(date) ?? [] });
  }
  return view;
}

/** Week view: the 7 days starting at the given YYYY-MM-DD. */
export function weekView(records: StampRecord[], startDate: string): DayMarker[] {
  const start = new Date(`${startDate}T00:00:00Z`);
  const marked = new Map(markers(records).map((m) => [m.date, m.ids]));
  const view: DayMarker[] = [];
  for (let offset = 0; offset < 7; offset++) {
    const day = new Date(start.getTime() + offset * 86_400_000);
    const date = day.toISOString().slice(0, 10);
    view.push({ date, ids: marked.get(date) ?? [] });
  }
  return view;
}

/** Day view: the stamps of one date listed with their times. */
export function dayView(records: StampRecord[], date: string): DayEntry[] {
  return records
    .filter((record) => dateOf(record) === date)
    .map((record) => ({
      id: record.id,
      time: timeOf(record),
      title: record.post_title ?? record.web_title,
      url: record.url,
    }))
    .sort((a, b) => (a.time < b.time ? -1 : a.time > b.time ? 1 : a.id - b.id));
}
