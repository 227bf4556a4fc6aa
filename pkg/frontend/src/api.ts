/** Thin typed client for the service REST API.
 *
 * Every call goes through request(), which attaches the session token
 * and converts the server's error envelope into an ApiError, so screens
 * only ever deal with typed payloads or one exception shape.
 */

import type {
  BlockResult,
  ComparisonView,
  CountryStat,
  ScheduleMode,
  ScheduleTask,
  SearchPage,
  StampDetail,
  StampReceipt,
  User,
  VerificationReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface CompareTarget {
  old: number;
  new?: number | "current";
  country?: string;
}

export interface SchedulePayload {
  url: string;
  frequency_days: number;
  mode: ScheduleMode;
  post_title?: string;
  email?: string;
  country?: string;
}

export class Client {
  private token: string | null = null;

  constructor(
    private base: string = "",
    private fetcher: FetchLike = (url, init) => fetch(url, init),
  ) {}

  getToken(): string | null {
    return this.token;
  }

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const res = await this.fetcher(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let doc: unknown = null;
    try {
      doc = await res.json();
    } catch {
      // non-JSON body; the status check below still applies
    }
    if (!res.ok) {
      const envelope = doc as { error?: { code?: string; message?: string } } | null;
      throw new ApiError(
        res.status,
        envelope?.error?.code ?? "unknown",
        envelope?.error?.message ?? `HTTP ${res.status}`,
      );
    }
    return doc as T;
  }

  // -- auth

  register(username: string, email: string, password: string): Promise<{ user: User }> {
    return this.request("POST", "/api/auth/register", { username, email, password });
  }

  confirm(token: string): Promise<{ user: User }> {
    return this.request("POST", "/api/auth/confirm", { token });
  }

  async login(username: string, password: string): Promise<User> {
    const doc = await this.request<{ token: string; user: User }>(
      "POST", "/api/auth/login", { username, password },
    );
    this.token = doc.token;
    return doc.user;
  }

  logout(): void {
    this.token = null;
  }

  // -- stamps

  submitStamp(url: string, postTitle?: string, viaCountry?: string): Promise<StampReceipt> {
    return this.request("POST", "/api/stamps", {
      url,
      post_title: postTitle ?? null,
      via_country: viaCountry ?? null,
    });
  }

  search(query: string, domain?: string, page = 1): Promise<SearchPage> {
    const params = new URLSearchParams({ query, page: String(page) });
    if (domain) params.set("domain", domain);
    return this.request("GET", `/api/stamps?${params}`);
  }

  stampDetail(id: number): Promise<StampDetail> {
    return this.request("GET", `/api/stamps/${id}`);
  }

  verifyStamp(id: number): Promise<{ report: VerificationReport; receipt: unknown }> {
    return this.request("GET", `/api/stamps/${id}/verify`);
  }

  domains(): Promise<{ domains: string[] }> {
    return this.request("GET", "/api/domains");
  }

  compare(target: CompareTarget): Promise<ComparisonView> {
    const params = new URLSearchParams({ old: String(target.old) });
    if (target.country) params.set("country", target.country);
    else params.set("new", String(target.new ?? "current"));
    return this.request("GET", `/api/compare?${params}`);
  }

  // -- schedules

  addSchedule(payload: SchedulePayload): Promise<ScheduleTask> {
    return this.request("POST", "/api/schedules", payload);
  }

  schedules(): Promise<{ schedules: ScheduleTask[] }> {
    return this.request("GET", "/api/schedules");
  }

  deleteSchedule(id: number): Promise<{ deleted: number }> {
    return this.request("DELETE", `/api/schedules/${id}`);
  }

  // -- block checking and statistics

  blockCheck(url: string, countries?: string[]): Promise<{ url: string; results: BlockResult[] }> {
    return this.request("POST", "/api/block-check", {
      url,
      countries: countries ?? null,
    });
  }

  blockMap(url: string): Promise<{ url: string; results: BlockResult[] }> {
    return this.request("GET", `/api/block-map?${new URLSearchParams({ url })}`);
  }

  countryStats(): Promise<{ countries: CountryStat[] }> {
    return this.request("GET", "/api/stats/countries");
  }
}

/** Monotonic ticket counter guarding against stale response overwrites.
 *
 * Screens issue a ticket per outgoing request and only apply a response
 * whose ticket is still the newest, so a slow older reply can never
 * clobber a fresher one.
 */
export class RequestGuard {
  private latest = 0;

  issue(): number {
    return ++this.latest;
  }

  accept(ticket: number): boolean {
    return ticket === this.latest;
  }
}
