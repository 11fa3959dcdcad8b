/** Typed client for the QC service endpoints.
 *
 * The fetch implementation is injectable so tests can run without a browser
 * or a live server. All methods reject with ApiError carrying the HTTP
 * status, letting the review loop distinguish conflicts (409) from transport
 * failures (status 0).
 */

import type { QualityStats, SamplePayload, VerdictPayload } from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown>; text(): Promise<string> }>;

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export class QueueEmpty {
  readonly empty = true;
}

export class QcClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) =>
      globalThis.fetch(...(args as Parameters<typeof globalThis.fetch>)),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async request(path: string, init?: Parameters<FetchLike>[1]) {
    try {
      return await this.fetchImpl(this.url(path), init);
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`, 0);
    }
  }

  async fetchNext(reviewerId: string): Promise<SamplePayload | QueueEmpty> {
    const response = await this.request(
      `/api/queue/next?reviewer=${encodeURIComponent(reviewerId)}`,
    );
    if (response.status === 204) return new QueueEmpty();
    if (response.status !== 200) {
      throw new ApiError(`queue/next returned ${response.status}`, response.status);
    }
    return (await response.json()) as SamplePayload;
  }

  async submitVerdict(payload: VerdictPayload): Promise<void> {
    const response = await this.request("/api/verdict", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (response.status !== 200) {
      throw new ApiError(await response.text(), response.status);
    }
  }

  async fetchStats(): Promise<QualityStats> {
    const response = await this.request("/api/stats");
    if (response.status !== 200) {
      throw new ApiError(`stats returned ${response.status}`, response.status);
    }
    return (await response.json()) as QualityStats;
  }
}
