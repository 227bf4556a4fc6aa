/** Browser shell: mounts the tabbed single-page client.
 *
 * Everything with logic worth testing lives in the pure modules; this
 * file holds DOM wiring, per-tab fetch triggers and screen composition.
 * The auth token is the only persisted thing; every screen re-fetches
 * its data from the API on entry.
 */

import { ApiError, Client, RequestGuard } from "./api.js";
import {
  dismissBanner,
  initialState,
  loggedIn,
  setGranularity,
  setSearch,
  showError,
  switchTab,
  type Granularity,
  type Tab,
  type ViewState,
} from "./state.js";
import {
  bannerList,
  compareScreen,
  dayList,
  esc,
  faqScreen,
  monthGrid,
  receiptPanel,
  reportPanel,
  searchResults,
  statsTable,
  tabBar,
  worldMap,
} from "./render.js";
import { compareModel, type CompareModel } from "./compare.js";
import { dayView, monthView, weekView, yearView } from "./calendar.js";
import { BLOCKED_FILL, REACHABLE_FILL, regions, type Region } from "./blockmap.js";
import { COUNTRY_GEOMETRY, project } from "./geometry.js";
import { choroplethFills, tableRows } from "./stats.js";
import { ScheduleRejected, submitSchedule, type ScheduleForm } from "./schedule.js";
import type {
  BlockResult,
  CountryStat,
  ScheduleMode,
  ScheduleTask,
  SearchPage,
  StampDetail,
  StampReceipt,
  User,
  VerificationReport,
} from "./types.js";

const TOKEN_KEY = "webstamp.token";
const MONTHS = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

interface ScreenData {
  receipt: StampReceipt | null;
  report: VerificationReport | null;
  page: SearchPage | null;
  detail: StampDetail | null;
  compare: CompareModel | null;
  cursor: string; // YYYY-MM-DD the calendar is looking at
  schedules: ScheduleTask[];
  scheduleProblems: string[];
  blockUrl: string;
  blockResults: BlockResult[] | null;
  stats: CountryStat[] | null;
  user: User | null;
}

function shiftCursor(cursor: string, granularity: Granularity, step: number): string {
  const d = new Date(`${cursor}T00:00:00Z`);
  if (granularity === "year") d.setUTCFullYear(d.getUTCFullYear() + step);
  else if (granularity === "month") d.setUTCMonth(d.getUTCMonth() + step);
  else if (granularity === "week") d.setUTCDate(d.getUTCDate() + step * 7);
  else d.setUTCDate(d.getUTCDate() + step);
  return d.toISOString().slice(0, 10);
}

export function mount(root: HTMLElement, client: Client = new Client()): void {
  let stored: string | null = null;
  try {
    stored = localStorage.getItem(TOKEN_KEY);
  } catch {
    // storage unavailable (private mode); the session just won't survive reloads
  }

  let state: ViewState = initialState(stored);
  const data: ScreenData = {
    receipt: null,
    report: null,
    page: null,
    detail: null,
    compare: null,
    cursor: new Date().toISOString().slice(0, 10),
    schedules: [],
    scheduleProblems: [],
    blockUrl: "",
    blockResults: null,
    stats: null,
    user: null,
  };
  const searchGuard = new RequestGuard();
  const blockGuard = new RequestGuard();

  function run(work: Promise<void>): void {
    work.catch((error: unknown) => {
      if (error instanceof ApiError) {
        state = showError(state, error);
      } else if (error instanceof ScheduleRejected) {
        data.scheduleProblems = error.problems;
      } else {
        state = {
          ...state,
          banners: [...state.banners, { code: "client_error", message: String(error) }],
        };
      }
      paint();
    });
  }

  // -- per-tab data loading

  async function runSearch(query: string, domain: string | null, page: number): Promise<void> {
    const ticket = searchGuard.issue();
    const result = await client.search(query, domain ?? undefined, page);
    if (!searchGuard.accept(ticket)) return; // a newer search already landed
    data.page = result;
    data.detail = null;
    data.compare = null;
    paint();
  }

  async function loadSchedules(): Promise<void> {
    const doc = await client.schedules();
    data.schedules = doc.schedules;
    paint();
  }

  async function loadStats(): Promise<void> {
    const doc = await client.countryStats();
    data.stats = doc.countries;
    paint();
  }

  async function runBlock(op: "map" | "check"): Promise<void> {
    const ticket = blockGuard.issue();
    const doc =
      op === "check" ? await client.blockCheck(data.blockUrl) : await client.blockMap(data.blockUrl);
    if (!blockGuard.accept(ticket)) return;
    data.blockResults = doc.results;
    paint();
  }

  function openTab(tab: Tab): void {
    state = switchTab(state, tab);
    paint();
    if (tab === "Schedule" && state.token) run(loadSchedules());
    if (tab === "Statistics") run(loadStats());
  }

  // -- screens

  function detailPanel(detail: StampDetail): string {
    const rec = detail.record;
    const versions = detail.versions
      .map((v) => {
        if (v.id === rec.id) return `<li>#${v.id} at ${esc(v.stamped_at)} (shown)</li>`;
        const older = Math.min(v.id, rec.id);
        const newer = Math.max(v.id, rec.id);
        return (
          `<li>#${v.id} at ${esc(v.stamped_at)} ` +
          `<button data-compare-old="${older}" data-compare-new="${newer}">compare</button></li>`
        );
      })
      .join("");
    return [
      `<div class="detail">`,
      `<h3>${esc(rec.post_title ?? rec.web_title)}</h3>`,
      `<p><a href="${esc(rec.url)}" rel="noopener">${esc(rec.url)}</a></p>`,
      `<dl>`,
      `<dt>content hash</dt><dd><code>${esc(rec.core.content_hash)}</code></dd>`,
      `<dt>stamped at</dt><dd>${esc(rec.core.stamped_at)}</dd>`,
      `<dt>domain</dt><dd>${esc(rec.domain)}</dd>`,
      `</dl>`,
      `<button data-verify="${rec.id}">Verify</button> `,
      `<button data-compare-old="${rec.id}" data-compare-new="current">Compare with the live page</button>`,
      `<h4>Versions</h4><ul class="versions">${versions}</ul>`,
      `<details><summary>Stamped text</summary><pre>${esc(detail.canonical_text)}</pre></details>`,
      `</div>`,
    ].join("");
  }

  function submitScreen(): string {
    return [
      `<form data-action="stamp">`,
      `<input name="url" placeholder="https://example.org/article" required>`,
      `<input name="post_title" placeholder="title for your records (optional)">`,
      `<input name="via_country" placeholder="fetch via country, ISO code (optional)" maxlength="2">`,
      `<button ${state.token ? "" : "disabled"}>Stamp it</button></form>`,
      state.token
        ? ""
        : `<p class="note">Stamping needs a confirmed account; head to the Account tab to sign in.</p>`,
      data.receipt ? receiptPanel(data.receipt) : "",
      data.receipt && data.report ? reportPanel(data.report) : "",
    ].join("");
  }

  function searchScreen(): string {
    const page = data.page;
    const records = page ? page.results : [];
    const year = Number(data.cursor.slice(0, 4));
    const month = Number(data.cursor.slice(5, 7));
    const granButtons = (["year", "month", "week", "day"] as Granularity[])
      .map(
        (g) =>
          `<button data-granularity="${g}" class="${g === state.granularity ? "active" : ""}">` +
          `${g[0].toUpperCase()}${g.slice(1)}</button>`,
      )
      .join("");
    let view: string;
    if (state.granularity === "year") {
      view =
        `<div class="yeargrid">` +
        yearView(records, year)
          .map((n, i) => `<button class="month" data-month="${i + 1}">${MONTHS[i]} <span>${n}</span></button>`)
          .join("") +
        `</div>`;
    } else if (state.granularity === "month") {
      view = monthGrid(monthView(records, year, month));
    } else if (state.granularity === "week") {
      view = monthGrid(weekView(records, data.cursor));
    } else {
      view = dayList(dayView(records, data.cursor));
    }
    const caption =
      state.granularity === "year"
        ? String(year)
        : state.granularity === "month"
          ? data.cursor.slice(0, 7)
          : state.granularity === "week"
            ? `week of ${data.cursor}`
            : data.cursor;
    const pager =
      page && page.pages > 1
        ? `<div class="pager">` +
          `<button data-page="${page.page - 1}" ${page.page <= 1 ? "disabled" : ""}>previous</button>` +
          ` page ${page.page} of ${page.pages} ` +
          `<button data-page="${page.page + 1}" ${page.page >= page.pages ? "disabled" : ""}>next</button>` +
          `</div>`
        : "";
    return [
      `<form data-action="search">`,
      `<input name="query" value="${esc(state.query)}" placeholder="search stamped posts">`,
      `<input name="domain" value="${esc(state.domain ?? "")}" placeholder="domain (optional)">`,
      `<button>Search</button></form>`,
      page ? `<p>${page.total} result(s)</p>` : "",
      `<div class="granularity">${granButtons}</div>`,
      `<div class="cursor"><button data-cursor-shift="-1">&lsaquo;</button> ` +
        `<span>${esc(caption)}</span> <button data-cursor-shift="1">&rsaquo;</button></div>`,
      view,
      searchResults(records, state.query),
      pager,
      data.detail ? detailPanel(data.detail) : "",
      data.detail && data.report ? reportPanel(data.report) : "",
      data.compare ? compareScreen(data.compare) : "",
    ].join("");
  }

  function scheduleScreen(): string {
    if (!state.token) {
      return `<p class="note">Scheduling needs a confirmed account; head to the Account tab to sign in.</p>`;
    }
    const problems = data.scheduleProblems.length
      ? `<ul class="problems">${data.scheduleProblems.map((p) => `<li>${esc(p)}</li>`).join("")}</ul>`
      : "";
    const rows = data.schedules
      .map(
        (task) =>
          `<tr><td>${esc(task.url)}</td><td>every ${task.frequency_days} day(s)</td>` +
          `<td>${esc(task.mode)}</td><td>${task.last_run ? esc(task.last_run) : "never"}</td>` +
          `<td><button data-unschedule="${task.id}">remove</button></td></tr>`,
      )
      .join("");
    return [
      `<form data-action="schedule">`,
      `<input name="url" placeholder="https://example.org/article" required>`,
      `<input name="frequency" type="number" min="1" max="30" value="7"> days between runs`,
      `<select name="mode">`,
      `<option value="restamp">re-stamp on change</option>`,
      `<option value="country_compare">compare from a country</option>`,
      `<option value="block_watch">watch for blocking</option>`,
      `</select>`,
      `<input name="post_title" placeholder="title (optional)">`,
      `<input name="email" type="email" placeholder="notify this address (optional)">`,
      `<input name="country" placeholder="country code" maxlength="2">`,
      `<button>Add schedule</button></form>`,
      problems,
      data.schedules.length
        ? `<table class="schedules"><thead><tr><th>url</th><th>frequency</th><th>mode</th>` +
          `<th>last run</th><th></th></tr></thead><tbody>${rows}</tbody></table>`
        : `<p class="empty">No schedules yet.</p>`,
    ].join("");
  }

  function blockScreen(): string {
    const results = data.blockResults;
    const summary = results
      ? `<p>${results.filter((r) => r.blocked).length} of ${results.length} countries blocked</p>`
      : "";
    return [
      `<form data-action="block">`,
      `<input name="url" value="${esc(data.blockUrl)}" placeholder="https://..." required>`,
      `<button name="op" value="map">Show last results</button>`,
      `<button name="op" value="check">Check now</button></form>`,
      summary,
      results ? worldMap(regions(results, 720, 360)) : "",
      `<p class="legend"><span class="swatch" style="background:${REACHABLE_FILL}"></span> reachable ` +
        `<span class="swatch" style="background:${BLOCKED_FILL}"></span> blocked</p>`,
    ].join("");
  }

  function statsRegions(fills: Record<string, string>): Region[] {
    const out: Region[] = [];
    for (const [code, fill] of Object.entries(fills)) {
      const geo = COUNTRY_GEOMETRY[code];
      if (!geo) continue;
      out.push({ code, name: geo.name, at: project(geo.lat, geo.lon, 720, 360), fill, blocked: null });
    }
    return out;
  }

  function statsScreen(): string {
    if (!data.stats) return `<p class="empty">Loading statistics...</p>`;
    if (data.stats.length === 0) return `<p class="empty">Nothing stamped yet.</p>`;
    return worldMap(statsRegions(choroplethFills(data.stats))) + statsTable(tableRows(data.stats));
  }

  function accountScreen(): string {
    if (state.token) {
      const who = data.user
        ? `<dl><dt>username</dt><dd>${esc(data.user.username)}</dd>` +
          `<dt>email</dt><dd>${esc(data.user.email)}</dd>` +
          `<dt>confirmed</dt><dd>${data.user.confirmed ? "yes" : "not yet"}</dd>` +
          `<dt>member since</dt><dd>${esc(data.user.member_since)}</dd></dl>`
        : `<p>Signed in.</p>`;
      return `<div class="account">${who}<button data-logout="1">Log out</button></div>`;
    }
    return [
      `<div class="account">`,
      `<h3>Log in</h3>`,
      `<form data-action="login">`,
      `<input name="username" placeholder="username or email" required>`,
      `<input name="password" type="password" placeholder="password" required>`,
      `<button>Log in</button></form>`,
      `<h3>Register</h3>`,
      `<form data-action="register">`,
      `<input name="username" placeholder="username" required>`,
      `<input name="email" type="email" placeholder="email" required>`,
      `<input name="password" type="password" minlength="6" placeholder="password (6+ characters)" required>`,
      `<button>Register</button></form>`,
      `<h3>Confirm</h3>`,
      `<form data-action="confirm">`,
      `<input name="token" placeholder="confirmation token from your email" required>`,
      `<button>Confirm</button></form>`,
      `</div>`,
    ].join("");
  }

  function paint(): void {
    client.setToken(state.token);
    try {
      if (state.token) localStorage.setItem(TOKEN_KEY, state.token);
      else localStorage.removeItem(TOKEN_KEY);
    } catch {
      // same storage caveat as above
    }
    const screen =
      state.tab === "Submit"
        ? submitScreen()
        : state.tab === "Search"
          ? searchScreen()
          : state.tab === "Schedule"
            ? scheduleScreen()
            : state.tab === "Where is it blocked?"
              ? blockScreen()
              : state.tab === "Statistics"
                ? statsScreen()
                : state.tab === "FAQ"
                  ? faqScreen()
                  : accountScreen();
    root.innerHTML =
      `<header><h1>WebStamp</h1>${tabBar(state.tab)}</header>` +
      bannerList(state.banners) +
      `<main>${screen}</main>`;
  }

  // -- event wiring, all delegated

  root.addEventListener("click", (event) => {
    const el = (event.target as HTMLElement).closest<HTMLElement>(
      "[data-tab],[data-banner],[data-verify],[data-post],[data-granularity]," +
        "[data-date],[data-month],[data-page],[data-cursor-shift],[data-unschedule]," +
        "[data-compare-old],[data-logout]",
    );
    if (!el) return;
    const d = el.dataset;
    if (d.tab !== undefined) {
      openTab(d.tab as Tab);
    } else if (d.banner !== undefined) {
      state = dismissBanner(state, Number(d.banner));
      paint();
    } else if (d.verify !== undefined) {
      event.preventDefault();
      const id = Number(d.verify);
      run(
        client.verifyStamp(id).then((doc) => {
          data.report = doc.report;
          paint();
        }),
      );
    } else if (d.post !== undefined) {
      event.preventDefault();
      run(
        client.stampDetail(Number(d.post)).then((doc) => {
          data.detail = doc;
          data.report = null;
          data.compare = null;
          paint();
        }),
      );
    } else if (d.granularity !== undefined) {
      state = setGranularity(state, d.granularity as Granularity);
      paint();
    } else if (d.month !== undefined) {
      data.cursor = `${data.cursor.slice(0, 4)}-${String(Number(d.month)).padStart(2, "0")}-01`;
      state = setGranularity(state, "month");
      paint();
    } else if (d.date !== undefined) {
      data.cursor = d.date;
      state = setGranularity(state, "day");
      paint();
    } else if (d.page !== undefined) {
      run(runSearch(state.query, state.domain, Number(d.page)));
    } else if (d.cursorShift !== undefined) {
      data.cursor = shiftCursor(data.cursor, state.granularity, Number(d.cursorShift));
      paint();
    } else if (d.unschedule !== undefined) {
      run(client.deleteSchedule(Number(d.unschedule)).then(() => loadSchedules()));
    } else if (d.compareOld !== undefined) {
      const target = d.compareNew ?? "current";
      run(
        client
          .compare({
            old: Number(d.compareOld),
            new: target === "current" ? "current" : Number(target),
          })
          .then((view) => {
            data.compare = compareModel(view);
            paint();
          }),
      );
    } else if (d.logout !== undefined) {
      client.logout();
      data.user = null;
      state = { ...state, token: null };
      paint();
    }
  });

  root.addEventListener("submit", (event) => {
    event.preventDefault();
    const form = event.target as HTMLFormElement;
    const fd = new FormData(form);
    const field = (name: string) => String(fd.get(name) ?? "").trim();
    switch (form.dataset.action) {
      case "stamp":
        run(
          client
            .submitStamp(field("url"), field("post_title") || undefined, field("via_country") || undefined)
            .then((receipt) => {
              data.receipt = receipt;
              data.report = null;
              paint();
            }),
        );
        break;
      case "search":
        state = setSearch(state, field("query"), field("domain") || null);
        run(runSearch(state.query, state.domain, 1));
        break;
      case "schedule": {
        const wanted: ScheduleForm = {
          url: field("url"),
          frequency: field("frequency"),
          mode: field("mode") as ScheduleMode,
          postTitle: field("post_title") || undefined,
          email: field("email") || undefined,
          country: field("country") || undefined,
        };
        data.scheduleProblems = [];
        run(submitSchedule(client, wanted).then(() => loadSchedules()));
        break;
      }
      case "block": {
        const submitter = event.submitter as HTMLButtonElement | null;
        data.blockUrl = field("url");
        run(runBlock(submitter && submitter.value === "check" ? "check" : "map"));
        break;
      }
      case "login":
        run(
          client.login(field("username"), field("password")).then((user) => {
            data.user = user;
            state = loggedIn(state, client.getToken() ?? "");
            paint();
          }),
        );
        break;
      case "register":
        run(
          client.register(field("username"), field("email"), field("password")).then((doc) => {
            data.user = doc.user;
            state = {
              ...state,
              banners: [
                ...state.banners,
                {
                  code: "registered",
                  message: "Account created. Paste the confirmation token from your email below.",
                },
              ],
            };
            paint();
          }),
        );
        break;
      case "confirm":
        run(
          client.confirm(field("token")).then((doc) => {
            data.user = doc.user;
            state = {
              ...state,
              banners: [
                ...state.banners,
                { code: "confirmed", message: "Account confirmed. You can log in now." },
              ],
            };
            paint();
          }),
        );
        break;
    }
  });

  paint();
}

const rootEl = typeof document === "undefined" ? null : document.getElementById("app");
if (rootEl) {
  mount(rootEl);
}
