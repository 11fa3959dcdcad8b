/** Verdict payload validation mirroring the service-side record schema.
 *
 * The UI must never fabricate an MP verdict for a single-frame sample, and
 * must always carry one for multi-frame samples; both directions are rejected
 * here before anything reaches the network.
 */

import type { VerdictPayload } from "./types.js";

export class VerdictValidationError extends Error {}

export function buildVerdict(
  sampleId: string,
  reviewerId: string,
  toggles: { mg: boolean; ta: boolean; mp: boolean | null },
  nFrames: number,
): VerdictPayload {
  if (!sampleId) throw new VerdictValidationError("sample_id must be non-empty");
  if (!reviewerId) throw new VerdictValidationError("reviewer_id must be non-empty");
  if (!Number.isInteger(nFrames) || nFrames < 1) {
    throw new VerdictValidationError(`bad frame count ${nFrames}`);
  }
  const multiFrame = nFrames > 1;
  if (multiFrame && toggles.mp === null) {
    throw new VerdictValidationError("multi-frame sample requires an mp verdict");
  }
  if (!multiFrame && toggles.mp !== null) {
    throw new VerdictValidationError("single-frame sample must not carry mp");
  }
  const payload: VerdictPayload = {
    sample_id: sampleId,
    reviewer_id: reviewerId,
    mg: toggles.mg,
    ta: toggles.ta,
  };
  if (multiFrame) payload.mp = toggles.mp as boolean;
  return payload;
}
