// Client for the labeling gateway's HTTP contract. All times are months.

export interface PendingQuery {
  query_id: number;
  candidate_id: string | number;
  original_features: Record<string, number | string>;
  censoring_time: number;
  round: number;
  c_index: number | null;
}

export interface RunStatus {
  round: number;
  c_index: number | null;
  history: [number, number][];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (typeof body?.detail === "string") return body.detail;
    return JSON.stringify(body?.detail ?? body);
  } catch {
    return response.statusText;
  }
}

export class GatewayClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  // Long-polls the server; resolves null when no query arrived within `waitSeconds`.
  async pendingQuery(waitSeconds = 20): Promise<PendingQuery | null> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/v1/queries/pending?wait=${waitSeconds}`,
    );
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    const body = await response.json();
    return (body.query as PendingQuery | null) ?? null;
  }

  async submitAnswer(queryId: number, eventTime: number): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/queries/${queryId}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ event_time: eventTime }),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
  }

  async runStatus(): Promise<RunStatus> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/run/status`);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as RunStatus;
  }
}
