import { describe, expect, it } from 'vitest';

import { buildComparison, sharedAxis, sortByScore } from '../src/compare.js';
import type { ScoreRow } from '../src/types.js';

function row(entity: string, score: number, lo: number | null = null, hi: number | null = null): ScoreRow {
  return { entity, year: 1993, score, std_error: null, ci_low: lo, ci_high: hi };
}

describe('buildComparison', () => {
  it('passes server numbers through untouched', () => {
    const corr = { r: 0.875, n_shared: 3 };
    const discreps = {
      positive: [{ entity: 'us', year: 1993, a: 2.0, b: 1.0, delta: 1.0 }],
      negative: [{ entity: 'fr', year: 1993, a: -1.0, b: 0.5, delta: -1.5 }],
    };
    const view = buildComparison(corr, discreps, [row('us', 1.0, 0.5, 1.5)], [row('us', 2.0, 1.0, 3.0)]);
    expect(view.r).toBe(0.875);
    expect(view.nShared).toBe(3);
    expect(view.positive).toBe(discreps.positive);
    expect(view.negative).toBe(discreps.negative);
  });

  it('lays interval bars onto a shared axis', () => {
    const view = buildComparison(
      { r: 1, n_shared: 2 },
      { positive: [], negative: [] },
      [row('a', 1.0, 0.0, 2.0)],
      [row('b', 3.0, 2.0, 4.0)],
    );
    // axis is [0, 4]
    expect(view.barsA[0].left).toBeCloseTo(0.0, 12);
    expect(view.barsA[0].width).toBeCloseTo(0.5, 12);
    expect(view.barsB[0].left).toBeCloseTo(0.5, 12);
    expect(view.barsB[0].width).toBeCloseTo(0.5, 12);
  });

  it('falls back to point scores when intervals are missing', () => {
    const view = buildComparison(
      { r: 1, n_shared: 1 },
      { positive: [], negative: [] },
      [row('a', 1.0)],
      [row('b', 2.0)],
    );
    expect(view.barsA[0].width).toBe(0);
  });
});

describe('sharedAxis', () => {
  it('spans all intervals', () => {
    const axis = sharedAxis([row('a', 0, -1, 1), row('b', 5, 4, 6)]);
    expect(axis).toEqual({ min: -1, max: 6 });
  });

  it('widens degenerate spans', () => {
    const axis = sharedAxis([row('a', 2, 2, 2)]);
    expect(axis.max).toBeGreaterThan(axis.min);
  });

  it('handles empty input', () => {
    expect(sharedAxis([])).toEqual({ min: 0, max: 1 });
  });
});

describe('sortByScore', () => {
  it('sorts descending without mutating the input', () => {
    const rows = [row('a', 1.0), row('b', 3.0), row('c', 2.0)];
    const sorted = sortByScore(rows);
    expect(sorted.map((r) => r.entity)).toEqual(['b', 'c', 'a']);
    expect(rows.map((r) => r.entity)).toEqual(['a', 'b', 'c']);
  });
});
