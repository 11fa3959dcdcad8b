/** Live quality statistics rendering.
 *
 * The panel mirrors /api/stats exactly: rates rounded to two decimals, an
 * em dash where a rate is absent (e.g. MP with no multi-frame samples yet).
 */

import type { QualityStats } from "./types.js";

export function formatRate(rate: number | null): string {
  return rate === null ? "–" : rate.toFixed(2);
}

export function formatStats(stats: QualityStats | null): string {
  if (stats === null) return "stats unavailable";
  return [
    `MG ${formatRate(stats.mg_rate)}`,
    `MP ${formatRate(stats.mp_rate)}`,
    `TA ${formatRate(stats.ta_rate)}`,
    `HQ ${formatRate(stats.hq_rate)}`,
    `n=${stats.n_reviewed}`,
  ].join("  ");
}
