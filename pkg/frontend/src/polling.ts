/** Poll a job until it reaches a terminal state.
 *
 * One-second interval with exponential backoff; concurrent polls for the
 * same job id are deduplicated onto one promise.
 */

import type { JobRecord } from './types.js';

export interface PollOptions {
  initialMs?: number;
  maxMs?: number;
  factor?: number;
  /** consecutive fetch failures tolerated before the poll rejects */
  maxFetchRetries?: number;
  onUpdate?: (job: JobRecord) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

const inFlight = new Map<string, Promise<JobRecord>>();

export function isTerminal(state: string): boolean {
  return state === 'done' || state === 'failed';
}

export function pollJob(
  jobId: string,
  fetchJob: (id: string) => Promise<JobRecord>,
  options: PollOptions = {},
): Promise<JobRecord> {
  const existing = inFlight.get(jobId);
  if (existing) {
    return existing;
  }
  const {
    initialMs = 1000,
    maxMs = 8000,
    factor = 1.5,
    maxFetchRetries = 3,
    onUpdate,
    sleep = defaultSleep,
  } = options;
  const promise = (async () => {
    let delay = initialMs;
    let consecutiveFailures = 0;
    for (;;) {
      try {
        const job = await fetchJob(jobId);
        consecutiveFailures = 0;
        onUpdate?.(job);
        if (isTerminal(job.state)) {
          return job;
        }
      } catch (err) {
        consecutiveFailures += 1;
        if (consecutiveFailures > maxFetchRetries) {
          throw err;
        }
      }
      await sleep(delay);
      delay = Math.min(maxMs, delay * factor);
    }
  })().finally(() => {
    inFlight.delete(jobId);
  });
  inFlight.set(jobId, promise);
  return promise;
}

/** Number of distinct jobs currently being polled (for tests). */
export function activePollCount(): number {
  return inFlight.size;
}
