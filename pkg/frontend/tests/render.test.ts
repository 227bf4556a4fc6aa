import { describe, expect, it } from "vitest";
import { compareModel } from "../src/compare.js";
import { regions } from "../src/blockmap.js";
import {
  bannerList,
  compareScreen,
  esc,
  receiptPanel,
  reportPanel,
  searchResults,
  tabBar,
  worldMap,
} from "../src/render.js";
import type { StampReceipt, VerificationReport } from "../src/types.js";
import { blockResult, record } from "./helpers.js";

function receipt(): StampReceipt {
  return {
    ...record(7, "2016-06-01T12:00:00Z"),
    created: true,
    verify_url: "/api/stamps/7/verify",
  };
}

describe("receiptPanel", () => {
  it("shows the hash exactly as the api returned it, with a verify link", () => {
    const doc = receipt();
    const html = receiptPanel(doc);
    expect(html).toContain(doc.core.content_hash);
    expect(html).toContain(`href="/api/stamps/7/verify"`);
    expect(html).toContain("Stamped:");
  });

  it("labels a deduplicated submit", () => {
    expect(receiptPanel({ ...receipt(), created: false })).toContain("Already stamped");
  });
});

describe("escaping", () => {
  it("keeps payload text from becoming markup", () => {
    expect(esc(`<img src="x">&`)).toBe("&lt;img src=&quot;x&quot;&gt;&amp;");
    const sly = record(1, "2016-06-01T12:00:00Z", { web_title: "<script>alert(1)</script>" });
    const html = searchResults([sly], "");
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("compareScreen", () => {
  it("renders the banner and one span per payload row", () => {
    const model = compareModel({
      changed: true,
      old_label: "v1",
      new_label: "v2",
      old_rows: [
        { kind: "equal", text: "same" },
        { kind: "deleted", text: "gone" },
      ],
      new_rows: [
        { kind: "equal", text: "same" },
        { kind: "inserted", text: "fresh" },
      ],
    });
    const html = compareScreen(model);
    expect(html).toContain("Change in the content found");
    expect(html).toContain(`<span class="deleted">gone</span>`);
    expect(html).toContain(`<span class="inserted">fresh</span>`);
    expect(html.match(/<span/g)?.length).toBe(4);
  });
});

describe("searchResults", () => {
  it("wraps query hits in mark tags", () => {
    const hit = record(3, "2016-06-01T12:00:00Z", { web_title: "World report 3" });
    const html = searchResults([hit], "world");
    expect(html).toContain("<mark>World</mark>");
  });

  it("says so when nothing matched", () => {
    expect(searchResults([], "world")).toContain("No stamped posts found");
  });
});

describe("worldMap", () => {
  it("draws one dot per verdict with its fill", () => {
    const drawn = regions([blockResult("CN", true), blockResult("DE", false)], 720, 360);
    const svg = worldMap(drawn);
    expect(svg.match(/<circle/g)?.length).toBe(2);
    expect(svg).toContain(`fill="#c0392b"`);
    expect(svg).toContain(`fill="#27ae60"`);
  });
});

describe("chrome", () => {
  it("marks the active tab among the seven", () => {
    const html = tabBar("Search");
    expect(html).toContain(`class="tab active" data-tab="Search"`);
    expect(html.match(/<button/g)?.length).toBe(7);
  });

  it("numbers dismiss buttons by banner position", () => {
    const html = bannerList([
      { code: "a", message: "first" },
      { code: "b", message: "second" },
    ]);
    expect(html).toContain(`data-banner="0"`);
    expect(html).toContain(`data-banner="1"`);
  });

  it("renders nothing when there are no banners", () => {
    expect(bannerList([])).toBe("");
  });
});

describe("reportPanel", () => {
  it("flags failing and skipped checks", () => {
    const report: VerificationReport = {
      content_hash_matches: false,
      stamp_hash_matches: true,
      signature_valid: true,
      chain_consistent: null,
      anchored: null,
      overall_valid: false,
    };
    const html = reportPanel(report);
    expect(html).toContain("FAIL");
    expect(html).toContain("not checked");
    expect(html).toContain("INVALID");
  });
});
