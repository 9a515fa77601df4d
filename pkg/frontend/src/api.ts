import type {
  AgreementPayload,
  Progress,
  RatingRequest,
  ReviewItem,
  SessionInfo,
  UncertainPolicy,
} from "./types.js";

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class ServerRejection extends Error {
  constructor(
    public readonly code: string,
    public readonly detail: string,
    public readonly status: number,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function reject(resp: Response): Promise<never> {
  let code = `HTTP_${resp.status}`;
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") {
      code = body.error;
      detail = String(body.detail ?? "");
    }
  } catch {
    // non-JSON error body; keep the HTTP status
  }
  throw new ServerRejection(code, detail, resp.status);
}

/**
 * Thin client over the review-service HTTP API. Every number the UI shows
 * comes straight out of these payloads; the client computes nothing.
 *
 * Ratings that fail with a *network* error (server unreachable) are queued
 * and replayed in order by flushQueue(); server rejections are never queued.
 */
export class ApiClient {
  private queue: { sessionId: string; rating: RatingRequest }[] = [];

  constructor(
    private readonly fetchFn: FetchFn,
    private readonly base: string = "",
  ) {}

  get queuedCount(): number {
    return this.queue.length;
  }

  async listRuns(): Promise<{ run_id: string }[]> {
    const resp = await this.fetchFn(`${this.base}/api/runs`);
    if (!resp.ok) await reject(resp);
    return resp.json();
  }

  async createSession(body: {
    run_id: string;
    rater_id: string;
    sample_fraction?: number;
    seed?: number;
    blind_mode?: boolean;
  }): Promise<SessionInfo> {
    const resp = await this.fetchFn(`${this.base}/api/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await reject(resp);
    return (await resp.json()).session;
  }

  /** null means the session is exhausted (HTTP 204). */
  async nextItem(sessionId: string): Promise<ReviewItem | null> {
    const resp = await this.fetchFn(
      `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/next`,
    );
    if (resp.status === 204) return null;
    if (!resp.ok) await reject(resp);
    return (await resp.json()).item;
  }

  async submitRating(sessionId: string, rating: RatingRequest): Promise<Progress> {
    let resp: Response;
    try {
      resp = await this.fetchFn(
        `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/ratings`,
        {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(rating),
        },
      );
    } catch (err) {
      this.queue.push({ sessionId, rating });
      throw new OfflineQueued(this.queue.length);
    }
    if (!resp.ok) await reject(resp);
    return (await resp.json()).progress;
  }

  /** Replay queued ratings in order; stops at the first failure. Returns the
   * progress of the last acknowledged rating, if any. */
  async flushQueue(): Promise<Progress | null> {
    let last: Progress | null = null;
    while (this.queue.length > 0) {
      const { sessionId, rating } = this.queue[0];
      last = await this.submitRatingNoQueue(sessionId, rating);
      this.queue.shift();
    }
    return last;
  }

  private async submitRatingNoQueue(
    sessionId: string,
    rating: RatingRequest,
  ): Promise<Progress> {
    const resp = await this.fetchFn(
      `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/ratings`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(rating),
      },
    );
    if (!resp.ok) await reject(resp);
    return (await resp.json()).progress;
  }

  async agreement(
    sessionId: string,
    policy: UncertainPolicy,
  ): Promise<AgreementPayload> {
    const resp = await this.fetchFn(
      `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/agreement?policy=${policy}`,
    );
    if (!resp.ok) await reject(resp);
    return resp.json();
  }
}

export class OfflineQueued extends Error {
  constructor(public readonly queuedCount: number) {
    super(`rating queued offline (${queuedCount} pending)`);
  }
}
