/** Schedule form handling: validate locally, then hand off to the API.
 *
 * Frequency bounds are enforced before any network call; everything the
 * server rejects anyway (duplicate URLs etc.) surfaces verbatim through
 * the usual error envelope.
 */

import type { Client, SchedulePayload } from "./api.js";
import type { ScheduleMode, ScheduleTask } from "./types.js";

export interface ScheduleForm {
  url: string;
  frequency: string;
  mode: ScheduleMode;
  postTitle?: string;
  email?: string;
  country?: string;
}

export const FREQUENCY_MIN = 1;
export const FREQUENCY_MAX = 30;

export function validateSchedule(form: ScheduleForm): string[] {
  const problems: string[] = [];
  const url = form.url.trim();
  if (!/^https?:\/\/.+/.test(url)) {
    problems.push("enter a full http(s) URL");
  }
  const freq = Number(form.frequency);
  if (!Number.isInteger(freq) || freq < FREQUENCY_MIN || freq > FREQUENCY_MAX) {
    problems.push(`frequency must be a whole number of days between ${FREQUENCY_MIN} and ${FREQUENCY_MAX}`);
  }
  if ((form.mode === "country_compare" || form.mode === "block_watch") && !form.country?.trim()) {
    problems.push("this mode needs a country code");
  }
  return problems;
}

export function toPayload(form: ScheduleForm): SchedulePayload {
  const payload: SchedulePayload = {
    url: form.url.trim(),
    frequency_days: Number(form.frequency),
    mode: form.mode,
  };
  if (form.postTitle?.trim()) payload.post_title = form.postTitle.trim();
  if (form.email?.trim()) payload.email = form.email.trim();
  if (form.country?.trim()) payload.country = form.country.trim().toUpperCase();
  return payload;
}

export class ScheduleRejected extends Error {
  constructor(public problems: string[]) {
    super(problems.join("; "));
    this.name = "ScheduleRejected";
  }
}

/** Validate and submit; an invalid form never reaches the network. */
export async function submitSchedule(client: Client, form: ScheduleForm): Promise<ScheduleTask> {
  const problems = validateSchedule(form);
  if (problems.length > 0) {
    throw new ScheduleRejected(problems);
  }
  return client.addSchedule(toPayload(form));
}
