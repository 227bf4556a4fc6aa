// Shared payload factories for the tests.

import type { BlockResult, StampRecord } from "../src/types.js";

export function record(id: number, stampedAt: string, over: Partial<StampRecord> = {}): StampRecord {
  return {
    id,
    url: `http://news.example/post/${id}`,
    domain: "news.example",
    web_title: `Post ${id}`,
    post_title: null,
    core: {
      content_hash: "aa".repeat(32),
      stamped_at: stampedAt,
      stamp_hash: "bb".repeat(32),
      signature: null,
      tsa_key_id: null,
      prev_chain: null,
      chain_hash: "cc".repeat(32),
    },
    owner: null,
    created_at: stampedAt,
    snapshot_ref: `snapshots/${id}.txt`,
    batch_id: null,
    country_of_origin: null,
    ...over,
  };
}

export function blockResult(country: string, blocked: boolean): BlockResult {
  return {
    id: 1,
    url: "http://news.example/post/1",
    country,
    blocked,
    checked_at: "2016-06-01T12:00:00Z",
    post_id: null,
  };
}
