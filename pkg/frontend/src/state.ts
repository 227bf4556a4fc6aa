/** Client view state and its pure transitions.
 *
 * The token is the only thing that survives a reload; every rendered
 * datum is re-fetched from the API, so state can stay this small.
 */

import { ApiError } from "./api.js";

export const TABS = [
  "Submit",
  "Search",
  "Schedule",
  "Where is it blocked?",
  "Statistics",
  "FAQ",
  "Account",
] as const;

export type Tab = (typeof TABS)[number];

export type Granularity = "year" | "month" | "week" | "day";

export interface Banner {
  code: string;
  message: string;
}

export interface ViewState {
  token: string | null;
  tab: Tab;
  granularity: Granularity;
  query: string;
  domain: string | null;
  banners: Banner[];
}

// token problems that mean the session is gone; anything else is shown
// on the current screen
const LOGIN_CODES = new Set(["token_expired", "missing_token", "bad_token", "ip_changed"]);

export function initialState(token: string | null = null): ViewState {
  return {
    token,
    tab: "Submit",
    granularity: "month",
    query: "",
    domain: null,
    banners: [],
  };
}

export function switchTab(state: ViewState, tab: Tab): ViewState {
  return { ...state, tab };
}

export function setGranularity(state: ViewState, granularity: Granularity): ViewState {
  return { ...state, granularity };
}

export function setSearch(state: ViewState, query: string, domain: string | null): ViewState {
  return { ...state, query, domain };
}

export function loggedIn(state: ViewState, token: string): ViewState {
  return { ...state, token };
}

/** Record an API failure: banner it, and on a dead session drop the
 *  token and send the user to the Account tab to log in again. */
export function showError(state: ViewState, error: ApiError): ViewState {
  const next: ViewState = {
    ...state,
    banners: [...state.banners, { code: error.code, message: error.message }],
  };
  if (LOGIN_CODES.has(error.code)) {
    next.token = null;
    next.tab = "Account";
  }
  return next;
}

export function dismissBanner(state: ViewState, index: number): ViewState {
  return { ...state, banners: state.banners.filter((_, i) => i !== index) };
}
