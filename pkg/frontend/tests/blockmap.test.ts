import { describe, expect, it } from "vitest";
import { BLOCKED_FILL, REACHABLE_FILL, colorFor, regions } from "../src/blockmap.js";
import { blockResult } from "./helpers.js";

describe("colorFor", () => {
  it("maps every verdict to exactly one fill", () => {
    const fills = colorFor([blockResult("CN", true), blockResult("DE", false)]);
    expect(Object.keys(fills).length).toBe(2);
    expect(fills.CN).toBe(BLOCKED_FILL);
    expect(fills.DE).toBe(REACHABLE_FILL);
  });

  it("is empty for an empty payload", () => {
    expect(colorFor([])).toEqual({});
  });
});

describe("regions", () => {
  it("paints exactly one red region for a payload with one blocked country", () => {
    const results = [blockResult("CN", true), blockResult("DE", false), blockResult("FR", false)];
    const drawn = regions(results, 720, 360);
    expect(drawn.length).toBe(3);
    const red = drawn.filter((r) => r.fill === BLOCKED_FILL);
    expect(red.length).toBe(1);
    expect(red[0].code).toBe("CN");
    expect(red[0].blocked).toBe(true);
  });

  it("drops verdicts without geometry instead of guessing a spot", () => {
    const drawn = regions([blockResult("XX", true), blockResult("DE", false)], 720, 360);
    expect(drawn.map((r) => r.code)).toEqual(["DE"]);
  });

  it("projects every country into the drawing area", () => {
    const drawn = regions(
      [blockResult("BR", false), blockResult("JP", true), blockResult("NO", false)],
      720,
      360,
    );
    for (const region of drawn) {
      expect(region.at.x).toBeGreaterThanOrEqual(0);
      expect(region.at.x).toBeLessThanOrEqual(720);
      expect(region.at.y).toBeGreaterThanOrEqual(0);
      expect(region.at.y).toBeLessThanOrEqual(360);
    }
  });
});
