/** Block map coloring: green where reachable, red where blocked.
 *
 * The API supplies only country codes and verdicts; geometry comes from
 * the static file.  The fill map is strictly one entry per result, so
 * the map can never show more or fewer verdicts than the payload holds.
 */

import type { BlockResult } from "./types.js";
import { COUNTRY_GEOMETRY, project, type Point } from "./geometry.js";

export const BLOCKED_FILL = "#c0392b";
export const REACHABLE_FILL = "#27ae60";
export const UNKNOWN_FILL = "#d5d8dc";

export function colorFor(results: BlockResult[]): Record<string, string> {
  const fills: Record<string, string> = {};
  for (const result of results) {
    fills[result.country] = result.blocked ? BLOCKED_FILL : REACHABLE_FILL;
  }
  return fills;
}

export interface Region {
  code: string;
  name: string;
  at: Point;
  fill: string;
  blocked: boolean | null;
}

/** Join verdicts with the static geometry for rendering.
 *
 * Countries present in the payload but missing from the geometry file
 * are dropped (nothing to draw); geometry without a verdict stays off
 * the map rather than guessing a color.
 */
export function regions(results: BlockResult[], width: number, height: number): Region[] {
  const out: Region[] = [];
  for (const result of results) {
    const geo = COUNTRY_GEOMETRY[result.country];
    if (!geo) continue;
    out.push({
      code: result.country,
      name: geo.name,
      at: project(geo.lat, geo.lon, width, height),
      fill: result.blocked ? BLOCKED_FILL : REACHABLE_FILL,
      blocked: result.blocked,
    });
  }
  return out;
}
