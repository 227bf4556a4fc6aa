/** Country-of-origin statistics: choropleth fills and the table. */

import type { CountryStat } from "./types.js";

// light to dark; picked by share of the maximum count
const SCALE = ["#d6e6f2", "#a8c8e4", "#7aa9d5", "#4c8bc7", "#2f6f9f"];

export function fillForShare(share: number): string {
  const clamped = Math.max(0, Math.min(1, share));
  const index = Math.min(SCALE.length - 1, Math.floor(clamped * SCALE.length));
  return SCALE[index];
}

/** Fill per ISO code; the "unknown" bucket has no geometry and is
 *  table-only. */
export function choroplethFills(stats: CountryStat[]): Record<string, string> {
  const counted = stats.filter((s) => s.country !== "unknown");
  const top = Math.max(1, ...counted.map((s) => s.count));
  const fills: Record<string, string> = {};
  for (const stat of counted) {
    fills[stat.country] = fillForShare(stat.count / top);
  }
  return fills;
}

export interface StatRow {
  country: string;
  count: number;
  percent: string;
}

export function tableRows(stats: CountryStat[]): StatRow[] {
  return stats.map((stat) => ({
    country: stat.country,
    count: stat.count,
    percent: `${stat.percentage.toFixed(2)}%`,
  }));
}
