import type { Api } from './api.js';
import type { JobView } from './types.js';

export interface PollOptions {
  intervalMs?: number;     // first wait, default 1s
  maxIntervalMs?: number;  // backoff ceiling, default 5s
  timeoutMs?: number;
  onUpdate?: (view: JobView) => void;
}

/** Poll a job until Validated or Failed, backing the interval off from
 * 1s toward 5s. Concurrent polls for one job are coalesced. */
const inFlight = new Map<string, Promise<JobView>>();

export function pollJob(api: Api, jobId: string, options: PollOptions = {}): Promise<JobView> {
  const existing = inFlight.get(jobId);
  if (existing) return existing;

  const { intervalMs = 1000, maxIntervalMs = 5000, timeoutMs = 120000, onUpdate } = options;
  const promise = (async () => {
    const deadline = Date.now() + timeoutMs;
    let wait = intervalMs;
    for (;;) {
      const view = await api.getJob(jobId);
      onUpdate?.(view);
      if (view.state === 'Validated' || view.state === 'Failed') return view;
      if (Date.now() > deadline) throw new Error(`job ${jobId} still ${view.state} after ${timeoutMs}ms`);
      await new Promise((resolve) => setTimeout(resolve, wait));
      wait = Math.min(Math.round(wait * 1.5), maxIntervalMs);
    }
  })();
  const tracked = promise.finally(() => inFlight.delete(jobId));
  inFlight.set(jobId, tracked);
  return tracked;
}
