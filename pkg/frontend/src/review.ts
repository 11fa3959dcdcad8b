/** Review-loop state machine: fetch next, collect toggles, submit, advance.
 *
 * Pure logic, no DOM. A conflict (409) skips forward with a notice; a
 * transport failure keeps the unsent verdict in an outbox so nothing is lost
 * and retry can re-submit it. MP is representable only for multi-frame
 * samples; toggling it on a single-frame sample is a no-op.
 */

import { ApiError, QcClient, QueueEmpty } from "./api.js";
import { buildVerdict } from "./schema.js";
import type { QualityStats, SamplePayload, VerdictPayload, VerdictToggles } from "./types.js";

export type Phase = "idle" | "reviewing" | "done" | "offline";

export interface ReviewView {
  phase: Phase;
  sample: SamplePayload | null;
  toggles: VerdictToggles;
  mpApplicable: boolean;
  notice: string | null;
  stats: QualityStats | null;
  outboxSize: number;
}

const DEFAULT_TOGGLES: VerdictToggles = { mg: false, ta: false, mp: null };

export class ReviewController {
  private phase: Phase = "idle";
  private sample: SamplePayload | null = null;
  private toggles: VerdictToggles = { ...DEFAULT_TOGGLES };
  private notice: string | null = null;
  private stats: QualityStats | null = null;
  private outbox: VerdictPayload[] = [];

  constructor(
    private readonly client: QcClient,
    private readonly reviewerId: string,
    private readonly onChange: (view: ReviewView) => void = () => {},
  ) {}

  view(): ReviewView {
    return {
      phase: this.phase,
      sample: this.sample,
      toggles: { ...this.toggles },
      mpApplicable: this.sample !== null && this.sample.n_frames > 1,
      notice: this.notice,
      stats: this.stats,
      outboxSize: this.outbox.length,
    };
  }

  private emit(): void {
    this.onChange(this.view());
  }

  async start(): Promise<void> {
    await this.refreshStats();
    await this.advance();
  }

  async refreshStats(): Promise<void> {
    try {
      this.stats = await this.client.fetchStats();
    } catch {
      this.stats = null;
    }
    this.emit();
  }

  private resetToggles(): void {
    const multiFrame = this.sample !== null && this.sample.n_frames > 1;
    this.toggles = { mg: false, ta: false, mp: multiFrame ? false : null };
  }

  async advance(): Promise<void> {
    try {
      const next = await this.client.fetchNext(this.reviewerId);
      if (next instanceof QueueEmpty) {
        this.phase = "done";
        this.sample = null;
      } else {
        this.phase = "reviewing";
        this.sample = next;
        this.resetToggles();
      }
    } catch (err) {
      this.phase = "offline";
      this.notice = `cannot reach the QC service: ${(err as Error).message}`;
    }
    this.emit();
  }

  toggle(dimension: "mg" | "ta" | "mp"): void {
    if (this.sample === null) return;
    if (dimension === "mp") {
      if (this.sample.n_frames <= 1) return; // never fabricate MP for images
      this.toggles.mp = !this.toggles.mp;
    } else {
      this.toggles[dimension] = !this.toggles[dimension];
    }
    this.emit();
  }

  /** Submit the current toggles, then advance; resolves to the new phase. */
  async submit(): Promise<Phase> {
    if (this.sample === null) return this.phase;
    const payload = buildVerdict(
      this.sample.sample.id,
      this.reviewerId,
      this.toggles,
      this.sample.n_frames,
    );
    try {
      await this.client.submitVerdict(payload);
      this.notice = null;
    } catch (err) {
      const apiError = err as ApiError;
      if (apiError.status === 409) {
        this.notice = `sample ${payload.sample_id} was already reviewed; skipping`;
      } else if (apiError.status === 0) {
        this.outbox.push(payload);
        this.phase = "offline";
        this.notice = "network failure: verdict kept locally, retry when online";
        this.emit();
        return this.phase;
      } else {
        this.notice = `verdict rejected (${apiError.status}): ${apiError.message}`;
        this.emit();
        return this.phase;
      }
    }
    await this.refreshStats();
    await this.advance();
    return this.phase;
  }

  /** Re-send queued verdicts after connectivity returns. */
  async retryPending(): Promise<void> {
    while (this.outbox.length > 0) {
      const payload = this.outbox[0]!;
      try {
        await this.client.submitVerdict(payload);
        this.outbox.shift();
      } catch (err) {
        if ((err as ApiError).status === 409) {
          this.outbox.shift(); // already accepted server-side
          continue;
        }
        this.emit();
        return; // still offline; keep the rest queued
      }
    }
    this.notice = null;
    await this.refreshStats();
    if (this.phase === "offline") await this.advance();
  }
}
