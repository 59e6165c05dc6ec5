/** HTML fragments for the page sections. Pure string builders so the
 * wiring layer stays thin. */

import type { ComparisonView } from './compare.js';
import type { JobRecord, ScoreRow } from './types.js';
import type { ViewState } from './state.js';
import { docKey } from './types.js';

function esc(text: string | number): string {
  return String(text).replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

function fmt(value: number | null, digits = 4): string {
  return value === null ? '' : value.toFixed(digits);
}

export function renderTrainingTable(state: ViewState): string {
  const staged = state.edits;
  const baseByKey = new Map(state.baseRows.map((r) => [docKey(r.entity, r.year), r]));
  const rows: string[] = [];
  const keys = new Set([...baseByKey.keys(), ...staged.keys()]);
  for (const key of [...keys].sort()) {
    const base = baseByKey.get(key);
    const edit = staged.get(key);
    const entity = base?.entity ?? (edit as { entity: string }).entity;
    const year = base?.year ?? (edit as { year: number }).year;
    const removed = edit?.kind === 'remove';
    const score = edit?.kind === 'set' ? edit.score : base?.score ?? 0;
    const marker = edit === undefined ? '' : removed ? ' removed' : ' edited';
    rows.push(`
      <tr class="training-row${marker}" data-entity="${esc(entity)}" data-year="${year}">
        <td>${esc(entity)}</td>
        <td>${year}</td>
        <td><input type="text" class="score-input" value="${removed ? '' : score}"
             ${removed ? 'disabled' : ''} data-entity="${esc(entity)}" data-year="${year}"></td>
        <td class="marker">${removed ? 'removed' : edit ? 'edited' : ''}</td>
        <td><button class="remove-btn" data-entity="${esc(entity)}" data-year="${year}">
          ${removed ? 'undo' : 'remove'}</button></td>
      </tr>`);
  }
  return `
    <table class="training-table">
      <thead><tr><th>entity</th><th>year</th><th>score</th><th></th><th></th></tr></thead>
      <tbody>${rows.join('')}</tbody>
    </table>`;
}

export function renderJobList(jobs: JobRecord[]): string {
  if (jobs.length === 0) {
    return '<p class="hint">no jobs yet</p>';
  }
  const rows = jobs.map(
    (job) => `
      <tr class="job-row state-${esc(job.state)}" data-job="${esc(job.id)}">
        <td><code>${esc(job.id)}</code></td>
        <td><span class="badge ${esc(job.state)}">${esc(job.state)}</span></td>
        <td>${esc(String(job.spec['approach'] ?? ''))}</td>
        <td>${job.error ? `<span class="error">${esc(job.error)}</span>` : ''}</td>
        <td><button class="show-scores" data-job="${esc(job.id)}"
             ${job.state === 'done' ? '' : 'disabled'}>scores</button></td>
        <td><input type="checkbox" class="compare-pick" data-job="${esc(job.id)}"
             ${job.state === 'done' ? '' : 'disabled'}></td>
      </tr>`,
  );
  return `
    <table class="job-table">
      <thead><tr><th>job</th><th>state</th><th>approach</th><th></th><th></th><th>compare</th></tr></thead>
      <tbody>${rows.join('')}</tbody>
    </table>`;
}

export function renderScoreTable(rows: ScoreRow[]): string {
  const body = rows.map(
    (row) => `
      <tr>
        <td>${esc(row.entity)}</td><td>${row.year}</td>
        <td class="num">${fmt(row.score)}</td>
        <td class="num">${fmt(row.std_error)}</td>
        <td class="num">${fmt(row.ci_low)}</td>
        <td class="num">${fmt(row.ci_high)}</td>
      </tr>`,
  );
  return `
    <table class="score-table">
      <thead><tr><th>entity</th><th>year</th><th>score</th><th>std err</th>
        <th>ci low</th><th>ci high</th></tr></thead>
      <tbody>${body.join('')}</tbody>
    </table>`;
}

export function renderComparison(view: ComparisonView): string {
  const deltaRows = (rows: typeof view.positive) =>
    rows
      .map(
        (d) => `
        <tr><td>${esc(d.entity)}${d.year}</td>
        <td class="num">${fmt(d.a)}</td><td class="num">${fmt(d.b)}</td>
        <td class="num">${fmt(d.delta)}</td></tr>`,
      )
      .join('');
  const bars = view.barsA
    .slice(0, 40)
    .map(
      (bar) => `
      <div class="bar-row">
        <span class="bar-label">${esc(bar.entity)}${bar.year}</span>
        <span class="bar-track">
          <span class="bar-fill" style="left:${(bar.left * 100).toFixed(2)}%;width:${Math.max(
            bar.width * 100,
            0.5,
          ).toFixed(2)}%"></span>
        </span>
      </div>`,
    )
    .join('');
  return `
    <p>correlation r = <strong id="corr-value">${view.r.toFixed(6)}</strong>
       over ${view.nShared} shared documents</p>
    <div class="delta-tables">
      <div><h4>largest positive differences</h4>
        <table><thead><tr><th>doc</th><th>a</th><th>b</th><th>delta</th></tr></thead>
        <tbody>${deltaRows(view.positive)}</tbody></table></div>
      <div><h4>largest negative differences</h4>
        <table><thead><tr><th>doc</th><th>a</th><th>b</th><th>delta</th></tr></thead>
        <tbody>${deltaRows(view.negative)}</tbody></table></div>
    </div>
    <h4>confidence intervals (batch a)</h4>
    <div class="bars">${bars}</div>`;
}
