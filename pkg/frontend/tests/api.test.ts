import { describe, expect, it } from "vitest";
import { ApiError, Client, RequestGuard } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function stub(respond: () => Response) {
  const calls: Call[] = [];
  const fetcher = (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return Promise.resolve(respond());
  };
  return { calls, fetcher };
}

function ok(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("Client request plumbing", () => {
  it("sends no auth header and no content type on a bare read", async () => {
    const { calls, fetcher } = stub(() => ok({ domains: [] }));
    const client = new Client("", fetcher);
    await client.domains();
    const headers = calls[0].init?.headers as Record<string, string>;
    expect(headers.Authorization).toBeUndefined();
    expect(headers["Content-Type"]).toBeUndefined();
  });

  it("attaches the bearer token and a json content type on writes", async () => {
    const { calls, fetcher } = stub(() => ok({ id: 1 }, 201));
    const client = new Client("", fetcher);
    client.setToken("tok-1");
    await client.submitStamp("http://a.example/x");
    expect(calls[0].init?.method).toBe("POST");
    const headers = calls[0].init?.headers as Record<string, string>;
    expect(headers.Authorization).toBe("Bearer tok-1");
    expect(headers["Content-Type"]).toBe("application/json");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      url: "http://a.example/x",
      post_title: null,
      via_country: null,
    });
  });

  it("turns the error envelope into an ApiError", async () => {
    const { fetcher } = stub(() =>
      ok({ error: { code: "token_expired", message: "session token has expired" } }, 401),
    );
    const client = new Client("", fetcher);
    const failure = await client.domains().catch((e: unknown) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(401);
    expect((failure as ApiError).code).toBe("token_expired");
    expect((failure as ApiError).message).toBe("session token has expired");
  });

  it("copes with a non-json error body", async () => {
    const { fetcher } = stub(() => new Response("bad gateway", { status: 502 }));
    const client = new Client("", fetcher);
    const failure = (await client.domains().catch((e: unknown) => e)) as ApiError;
    expect(failure.code).toBe("unknown");
    expect(failure.message).toBe("HTTP 502");
  });

  it("stores the session token on login", async () => {
    const { fetcher } = stub(() => ok({ token: "tok-9", user: { id: 1, username: "ana" } }));
    const client = new Client("", fetcher);
    const user = await client.login("ana", "secret1");
    expect(client.getToken()).toBe("tok-9");
    expect(user.username).toBe("ana");
    client.logout();
    expect(client.getToken()).toBeNull();
  });

  it("builds search urls with the page and an optional domain", async () => {
    const { calls, fetcher } = stub(() =>
      ok({ results: [], page: 1, pages: 0, page_size: 20, total: 0 }),
    );
    const client = new Client("http://api.test", fetcher);
    await client.search("world");
    await client.search("world", "news.example", 2);
    expect(calls[0].url).toBe("http://api.test/api/stamps?query=world&page=1");
    expect(calls[1].url).toBe("http://api.test/api/stamps?query=world&page=2&domain=news.example");
  });

  it("aims compare at an id, the live page, or a country", async () => {
    const view = { changed: false, old_label: "a", new_label: "b", old_rows: [], new_rows: [] };
    const { calls, fetcher } = stub(() => ok(view));
    const client = new Client("", fetcher);
    await client.compare({ old: 3, new: 7 });
    await client.compare({ old: 3 });
    await client.compare({ old: 3, country: "CN" });
    expect(calls[0].url).toBe("/api/compare?old=3&new=7");
    expect(calls[1].url).toBe("/api/compare?old=3&new=current");
    expect(calls[2].url).toBe("/api/compare?old=3&country=CN");
  });
});

describe("RequestGuard", () => {
  it("rejects a stale ticket once a newer request went out", () => {
    const guard = new RequestGuard();
    const first = guard.issue();
    const second = guard.issue();
    // the slow first response must not overwrite the newer one
    expect(guard.accept(first)).toBe(false);
    expect(guard.accept(second)).toBe(true);
  });

  it("keeps accepting the newest ticket until another is issued", () => {
    const guard = new RequestGuard();
    const only = guard.issue();
    expect(guard.accept(only)).toBe(true);
    expect(guard.accept(only)).toBe(true);
  });
});
