/** HTML renderers for every screen, as plain strings.
 *
 * Keeping these DOM-free makes them testable in node and keeps the
 * browser layer (app.ts) down to mounting and event wiring.  All
 * payload text passes through esc(); nothing from the API is ever
 * interpreted as markup.
 */

import type { CompareModel } from "./compare.js";
import type { DayEntry, DayMarker } from "./calendar.js";
import type { Region } from "./blockmap.js";
import type { Banner, Tab } from "./state.js";
import type { StampReceipt, StampRecord, VerificationReport } from "./types.js";
import type { StatRow } from "./stats.js";
import { TABS } from "./state.js";
import { highlight, type HighlightPiece } from "./search.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function tabBar(active: Tab): string {
  const items = TABS.map((tab) => {
    const cls = tab === active ? "tab active" : "tab";
    return `<button class="${cls}" data-tab="${esc(tab)}">${esc(tab)}</button>`;
  });
  return `<nav class="tabs">${items.join("")}</nav>`;
}

export function bannerList(banners: Banner[]): string {
  if (banners.length === 0) return "";
  const items = banners.map(
    (banner, i) =>
      `<div class="banner" data-code="${esc(banner.code)}">` +
      `${esc(banner.message)}` +
      `<button class="dismiss" data-banner="${i}">&times;</button></div>`,
  );
  return `<div class="banners">${items.join("")}</div>`;
}

/** Receipt panel after submitting: the hash exactly as returned, the
 *  stamp time, and a link to the verification route. */
export function receiptPanel(receipt: StampReceipt): string {
  const headline = receipt.created ? "Stamped" : "Already stamped";
  return [
    `<div class="receipt">`,
    `<h3>${headline}: ${esc(receipt.web_title)}</h3>`,
    `<dl>`,
    `<dt>URL</dt><dd>${esc(receipt.url)}</dd>`,
    `<dt>Content hash</dt><dd><code>${esc(receipt.core.content_hash)}</code></dd>`,
    `<dt>Stamped at</dt><dd>${esc(receipt.core.stamped_at)}</dd>`,
    `</dl>`,
    `<a class="verify" href="${esc(receipt.verify_url)}" data-verify="${receipt.id}">Verify</a>`,
    `</div>`,
  ].join("");
}

export function reportPanel(report: VerificationReport): string {
  const row = (label: string, value: boolean | null) => {
    const shown = value === null ? "not checked" : value ? "pass" : "FAIL";
    return `<tr><td>${esc(label)}</td><td class="${value === false ? "fail" : "ok"}">${shown}</td></tr>`;
  };
  return [
    `<table class="report">`,
    row("content hash", report.content_hash_matches),
    row("stamp hash", report.stamp_hash_matches),
    row("signature", report.signature_valid),
    row("chain", report.chain_consistent),
    row("anchored", report.anchored),
    `<tr><td>overall</td><td>${report.overall_valid ? "valid" : "INVALID"}</td></tr>`,
    `</table>`,
  ].join("");
}

function spanColumn(spans: { text: string; mark: string }[]): string {
  return spans
    .map((span) =>
      span.mark === "none"
        ? `<span>${esc(span.text)}</span>`
        : `<span class="${span.mark}">${esc(span.text)}</span>`,
    )
    .join(" ");
}

export function compareScreen(model: CompareModel): string {
  return [
    `<div class="compare">`,
    `<p class="compare-banner ${model.changed ? "changed" : "same"}">${esc(model.banner)}</p>`,
    `<div class="columns">`,
    `<div class="column"><h4>${esc(model.oldLabel)}</h4><p>${spanColumn(model.oldSpans)}</p></div>`,
    `<div class="column"><h4>${esc(model.newLabel)}</h4><p>${spanColumn(model.newSpans)}</p></div>`,
    `</div></div>`,
  ].join("");
}

function highlighted(text: string, query: string): string {
  return highlight(text, query)
    .map((piece: HighlightPiece) =>
      piece.hit ? `<mark>${esc(piece.text)}</mark>` : esc(piece.text),
    )
    .join("");
}

export function searchResults(records: StampRecord[], query: string): string {
  if (records.length === 0) return `<p class="empty">No stamped posts found.</p>`;
  const items = records.map(
    (record) =>
      `<li data-post="${record.id}">` +
      `<a href="#/stamps/${record.id}">${highlighted(record.post_title ?? record.web_title, query)}</a>` +
      `<span class="url">${highlighted(record.url, query)}</span>` +
      `<time>${esc(record.core.stamped_at)}</time></li>`,
  );
  return `<ul class="results">${items.join("")}</ul>`;
}

export function monthGrid(days: DayMarker[]): string {
  const cells = days.map((day) => {
    const dot = day.ids.length > 0 ? `<span class="dot" title="${day.ids.length} stamped"></span>` : "";
    return `<div class="day" data-date="${day.date}">${Number(day.date.slice(8))}${dot}</div>`;
  });
  return `<div class="calendar">${cells.join("")}</div>`;
}

export function dayList(entries: DayEntry[]): string {
  if (entries.length === 0) return `<p class="empty">Nothing stamped on this day.</p>`;
  const items = entries.map(
    (entry) =>
      `<li><time>${esc(entry.time)}</time> ` +
      `<a href="#/stamps/${entry.id}">${esc(entry.title)}</a></li>`,
  );
  return `<ol class="day-list">${items.join("")}</ol>`;
}

export function worldMap(mapRegions: Region[], width = 720, height = 360): string {
  const dots = mapRegions.map(
    (region) =>
      `<circle cx="${region.at.x.toFixed(1)}" cy="${region.at.y.toFixed(1)}" r="9" ` +
      `fill="${region.fill}" data-country="${esc(region.code)}">` +
      `<title>${esc(region.name)}</title></circle>`,
  );
  return (
    `<svg class="worldmap" viewBox="0 0 ${width} ${height}" role="img">` +
    `<rect width="${width}" height="${height}" fill="#eef3f7"/>` +
    dots.join("") +
    `</svg>`
  );
}

export function statsTable(rows: StatRow[]): string {
  const body = rows.map(
    (row) =>
      `<tr><td>${esc(row.country)}</td><td>${row.count}</td><td>${esc(row.percent)}</td></tr>`,
  );
  return (
    `<table class="stats"><thead><tr><th>country</th><th>stamps</th><th>share</th></tr></thead>` +
    `<tbody>${body.join("")}</tbody></table>`
  );
}

export const FAQ_ENTRIES: [string, string][] = [
  [
    "What does stamping do?",
    "The article text of the page is extracted, hashed, bound to the current time and signed. The hash joins a public chain and is later anchored in a batch, so the existence of exactly that text at that time stays provable.",
  ],
  [
    "Why did my submission come back as already stamped?",
    "Someone stamped identical content before. Unchanged content is never stamped twice; you get the original record, which is just as verifiable.",
  ],
  [
    "What do the two columns in a comparison mean?",
    "The left column is the older stamped text, the right one the newer. Red text exists only on the left (deleted), green text only on the right (inserted).",
  ],
  [
    "What does the block map show?",
    "Each checked country is probed through proxies located there. Green means the page was reachable, red means every proxy of that country failed while the page was fine elsewhere.",
  ],
  [
    "Why do I need to confirm my account?",
    "Stamping and scheduling write to the public archive, so they require a confirmed email address. The confirmation link arrives by mail and stays valid for an hour.",
  ],
];

export function faqScreen(): string {
  const items = FAQ_ENTRIES.map(
    ([q, a]) => `<details><summary>${esc(q)}</summary><p>${esc(a)}</p></details>`,
  );
  return `<div class="faq">${items.join("")}</div>`;
}
