// Shapes of the service API payloads, mirroring docs/api.md in the
// backend repository.  The client renders these verbatim; it computes
// no hashes and no diffs of its own.

export interface StampCore {
  content_hash: string;
  stamped_at: string;
  stamp_hash: string;
  signature: string | null;
  tsa_key_id: string | null;
  prev_chain: string | null;
  chain_hash: string | null;
}

export interface StampRecord {
  id: number;
  url: string;
  domain: string;
  web_title: string;
  post_title: string | null;
  core: StampCore;
  owner: number | null;
  created_at: string;
  snapshot_ref: string;
  batch_id: number | null;
  country_of_origin: string | null;
}

/** POST /api/stamps response: the record fields plus submit metadata. */
export interface StampReceipt extends StampRecord {
  created: boolean;
  verify_url: string;
}

export interface SearchPage {
  results: StampRecord[];
  page: number;
  pages: number;
  page_size: number;
  total: number;
}

export interface StampDetail {
  record: StampRecord;
  canonical_text: string;
  versions: { id: number; stamped_at: string }[];
}

export interface VerificationReport {
  content_hash_matches: boolean;
  stamp_hash_matches: boolean;
  signature_valid: boolean | null;
  chain_consistent: boolean | null;
  anchored: boolean | null;
  overall_valid: boolean;
}

export type RowKind = "equal" | "deleted" | "inserted";

export interface ViewRow {
  kind: RowKind;
  text: string;
}

export interface ComparisonView {
  changed: boolean;
  old_label: string;
  new_label: string;
  old_rows: ViewRow[];
  new_rows: ViewRow[];
}

export type ScheduleMode = "restamp" | "country_compare" | "block_watch";

export interface ScheduleTask {
  id: number;
  url: string;
  frequency_days: number;
  mode: ScheduleMode;
  post_title: string | null;
  email: string | null;
  country: string | null;
  last_run: string | null;
  owner: number | null;
  linked_post: number | null;
}

export interface BlockResult {
  id: number;
  url: string;
  country: string;
  blocked: boolean;
  checked_at: string;
  post_id: number | null;
}

export interface CountryStat {
  country: string;
  count: number;
  percentage: number;
}

export interface User {
  id: number;
  username: string;
  email: string;
  confirmed: boolean;
  permissions: number;
  member_since: string;
  last_seen: string;
}

export interface ErrorEnvelope {
  error: { code: string; message: string };
}
