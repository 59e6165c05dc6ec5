/**
 * End-to-end flow against a live local service, driving the same client
 * modules the page uses: upload demo data, score with the base training
 * set, stage an edit through the view-state machinery, submit the clone,
 * watch the job finish, check that scores moved, and compare a batch with
 * itself.
 *
 * Gated on TEXTSCALE_E2E=1; scripts/e2e.sh starts the service, generates
 * demo data, and runs this suite with the right environment.
 */

import { readFileSync } from 'node:fs';
import { beforeAll, describe, expect, it } from 'vitest';

import { ServiceClient } from '../src/api.js';
import { pollJob } from '../src/polling.js';
import {
  cloneRequestPayload,
  initialState,
  isDirty,
  selectTrainingSet,
  stageEdit,
} from '../src/state.js';
import { buildComparison } from '../src/compare.js';
import type { ScoreRow } from '../src/types.js';

const enabled = process.env.TEXTSCALE_E2E === '1';
const suite = enabled ? describe : describe.skip;

const baseUrl = process.env.TEXTSCALE_URL ?? 'http://127.0.0.1:8321';
const matrixPath = process.env.TEXTSCALE_E2E_MATRIX ?? '';
const scoresPath = process.env.TEXTSCALE_E2E_SCORES ?? '';

const fastPoll = { initialMs: 150, maxMs: 1000 };

function keyed(rows: ScoreRow[]): Map<string, number> {
  return new Map(rows.map((r) => [`${r.entity}|${r.year}`, r.score]));
}

suite('textscale UI end-to-end', () => {
  const client = new ServiceClient(baseUrl);
  let corpusId: string;
  let baseSetId: string;

  beforeAll(async () => {
    const matrix = readFileSync(matrixPath, 'utf-8');
    const csv = readFileSync(scoresPath, 'utf-8');
    corpusId = (await client.uploadCorpus('demo corpus', matrix)).id;
    baseSetId = (await client.uploadTrainingSet('base scores', csv)).id;
  });

  it('edits one training score, resubmits, and sees scores change', async () => {
    // score with the untouched training set
    const baseJob = await client.submitJob(corpusId, baseSetId, { approach: 'wordscores' });
    const baseDone = await pollJob(baseJob.id, (id) => client.getJob(id), fastPoll);
    expect(baseDone.state).toBe('done');
    const baseScores = await client.jobScores(baseJob.id);
    expect(baseScores.length).toBeGreaterThan(0);

    // stage one edit exactly as the page would
    const rows = await client.trainingSetRows(baseSetId);
    let view = selectTrainingSet(initialState(), baseSetId, rows);
    const target = rows[0];
    view = stageEdit(view, target.entity, target.year, target.score + 2.5);
    expect(isDirty(view)).toBe(true);
    const payload = cloneRequestPayload(view);
    expect(payload).toEqual({
      set: [{ entity: target.entity, year: target.year, score: target.score + 2.5 }],
      remove: [],
    });

    // submit the clone and re-score
    const clone = await client.cloneTrainingSet(baseSetId, payload, 'edited scores');
    expect(clone.id).not.toBe(baseSetId);
    const cloneRows = await client.trainingSetRows(clone.id);
    const edited = cloneRows.find(
      (r) => r.entity === target.entity && r.year === target.year,
    );
    expect(edited?.score).toBeCloseTo(target.score + 2.5, 12);
    // the original set is untouched
    const originalRows = await client.trainingSetRows(baseSetId);
    expect(originalRows).toEqual(rows);

    const editedJob = await client.submitJob(corpusId, clone.id, { approach: 'wordscores' });
    const states: string[] = [];
    const editedDone = await pollJob(editedJob.id, (id) => client.getJob(id), {
      ...fastPoll,
      onUpdate: (job) => {
        states.push(job.state);
      },
    });
    expect(editedDone.state).toBe('done');
    expect(states[states.length - 1]).toBe('done');

    // at least one virgin document's rescaled score moved
    const editedScores = await client.jobScores(editedJob.id);
    const before = keyed(baseScores);
    const after = keyed(editedScores);
    expect([...after.keys()].sort()).toEqual([...before.keys()].sort());
    const changed = [...after.keys()].filter((k) => after.get(k) !== before.get(k));
    expect(changed.length).toBeGreaterThan(0);
  }, 120_000);

  it('comparing a batch with itself gives r = 1 and all-zero deltas', async () => {
    const job = await client.submitJob(corpusId, baseSetId, { approach: 'wordscores' });
    const done = await pollJob(job.id, (id) => client.getJob(id), fastPoll);
    expect(done.state).toBe('done');

    const [corr, discreps, scores] = await Promise.all([
      client.corr(job.id, job.id),
      client.discrepancies(job.id, job.id, 8),
      client.jobScores(job.id),
    ]);
    const view = buildComparison(corr, discreps, scores, scores);
    expect(view.r).toBeCloseTo(1.0, 12);
    expect(view.positive.length).toBeGreaterThan(0);
    for (const d of [...view.positive, ...view.negative]) {
      expect(d.delta).toBe(0);
    }
  }, 60_000);

  it('surfaces engine failures on degenerate training sets', async () => {
    const rows = await client.trainingSetRows(baseSetId);
    const clone = await client.cloneTrainingSet(baseSetId, {
      set: [],
      remove: rows.slice(1).map((r) => ({ entity: r.entity, year: r.year })),
    });
    const job = await client.submitJob(corpusId, clone.id, { approach: 'wordscores' });
    const done = await pollJob(job.id, (id) => client.getJob(id), fastPoll);
    expect(done.state).toBe('failed');
    expect(done.error).toMatch(/training documents/);
  }, 60_000);
});
