/** Assemble the comparison view between two result batches.
 *
 * Everything shown (correlation, deltas, interval bounds) comes straight
 * from service responses; this module only arranges them for rendering.
 */

import type {
  CorrResponse,
  DiscrepancyResponse,
  DiscrepancyRow,
  ScoreRow,
} from './types.js';

export interface IntervalBar {
  entity: string;
  year: number;
  score: number;
  ciLow: number | null;
  ciHigh: number | null;
  /** left/width as fractions of the shared axis, for drawing */
  left: number;
  width: number;
}

export interface ComparisonView {
  r: number;
  nShared: number;
  positive: DiscrepancyRow[];
  negative: DiscrepancyRow[];
  barsA: IntervalBar[];
  barsB: IntervalBar[];
}

export function buildComparison(
  corr: CorrResponse,
  discrepancies: DiscrepancyResponse,
  scoresA: ScoreRow[],
  scoresB: ScoreRow[],
): ComparisonView {
  const axis = sharedAxis([...scoresA, ...scoresB]);
  return {
    r: corr.r,
    nShared: corr.n_shared,
    positive: discrepancies.positive,
    negative: discrepancies.negative,
    barsA: scoresA.map((row) => toBar(row, axis)),
    barsB: scoresB.map((row) => toBar(row, axis)),
  };
}

export function sharedAxis(rows: ScoreRow[]): { min: number; max: number } {
  let min = Infinity;
  let max = -Infinity;
  for (const row of rows) {
    const lo = row.ci_low ?? row.score;
    const hi = row.ci_high ?? row.score;
    if (lo < min) min = lo;
    if (hi > max) max = hi;
  }
  if (!Number.isFinite(min) || !Number.isFinite(max)) {
    return { min: 0, max: 1 };
  }
  if (min === max) {
    return { min: min - 0.5, max: max + 0.5 };
  }
  return { min, max };
}

function toBar(row: ScoreRow, axis: { min: number; max: number }): IntervalBar {
  const span = axis.max - axis.min;
  const lo = row.ci_low ?? row.score;
  const hi = row.ci_high ?? row.score;
  return {
    entity: row.entity,
    year: row.year,
    score: row.score,
    ciLow: row.ci_low,
    ciHigh: row.ci_high,
    left: (lo - axis.min) / span,
    width: Math.max(0, (hi - lo) / span),
  };
}

/** Sort score rows for the results table: highest score first. */
export function sortByScore(rows: ScoreRow[]): ScoreRow[] {
  return [...rows].sort(
    (a, b) => b.score - a.score || a.entity.localeCompare(b.entity) || a.year - b.year,
  );
}
