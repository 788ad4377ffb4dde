// Long-poll driver: one in-flight request per endpoint, exponential backoff
// after a network failure, reset on the first healthy response.

import type { GatewayClient, PendingQuery, RunStatus } from "./api.js";

export interface PollerEvents {
  onQuery: (query: PendingQuery | null) => void;
  onStatus: (status: RunStatus) => void;
  onError: (reason: string) => void;
}

const INITIAL_BACKOFF_MS = 500;
const MAX_BACKOFF_MS = 10_000;

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class ConsolePoller {
  private running = false;
  private backoffMs = INITIAL_BACKOFF_MS;

  constructor(
    private readonly client: GatewayClient,
    private readonly events: PollerEvents,
    private readonly waitSeconds = 20,
    private readonly idleMs = 50, // paces the loop when the server answers instantly
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    void this.pollQueries();
    void this.pollStatus();
  }

  stop(): void {
    this.running = false;
  }

  private async pollQueries(): Promise<void> {
    while (this.running) {
      try {
        const query = await this.client.pendingQuery(this.waitSeconds);
        this.backoffMs = INITIAL_BACKOFF_MS;
        this.events.onQuery(query);
        await sleep(this.idleMs);
      } catch (err) {
        this.events.onError(err instanceof Error ? err.message : String(err));
        await sleep(this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, MAX_BACKOFF_MS);
      }
    }
  }

  private async pollStatus(): Promise<void> {
    while (this.running) {
      try {
        this.events.onStatus(await this.client.runStatus());
      } catch {
        // the query loop owns error reporting; status just retries
      }
      await sleep(1000);
    }
  }
}
