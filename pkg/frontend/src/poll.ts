import type { DanceRecord } from "./types";

export interface PollOptions {
  intervalMs?: number;
  maxAttempts?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Poll the dance record until it leaves "generating".
 * Resolves with the terminal record (ready or failed); the caller decides
 * how to surface a failed status. Rejects only on transport errors or when
 * attempts run out.
 */
export async function pollDance(
  fetchRecord: () => Promise<DanceRecord>,
  { intervalMs = 500, maxAttempts = 120, sleep = defaultSleep }: PollOptions = {},
): Promise<DanceRecord> {
  for (let attempt = 0; attempt < maxAttempts; attempt++) {
    const record = await fetchRecord();
    if (record.status !== "generating") return record;
    await sleep(intervalMs);
  }
  throw new Error(`dance still generating after ${maxAttempts} polls`);
}
