/** View state for the training-set editor.
 *
 * Edits are staged locally against the selected (immutable) set and only
 * leave the browser as a clone request when submitted. Staging is keyed by
 * document, so repeated edits collapse and the submitted diff is
 * order-independent.
 */

import type { TrainingRow } from './types.js';
import { docKey } from './types.js';

export type StagedEdit =
  | { kind: 'set'; entity: string; year: number; score: number }
  | { kind: 'remove'; entity: string; year: number };

export interface ViewState {
  trainingSetId: string | null;
  baseRows: TrainingRow[];
  edits: Map<string, StagedEdit>;
  activeJobs: Map<string, string>; // job id -> last observed state
  comparison: { jobA: string; jobB: string } | null;
}

export function initialState(): ViewState {
  return {
    trainingSetId: null,
    baseRows: [],
    edits: new Map(),
    activeJobs: new Map(),
    comparison: null,
  };
}

export function selectTrainingSet(state: ViewState, id: string, rows: TrainingRow[]): ViewState {
  return { ...state, trainingSetId: id, baseRows: rows, edits: new Map() };
}

/** Stage a score change; throws for non-finite values so callers can show
 * the message inline. A value equal to the base score reverts the edit. */
export function stageEdit(state: ViewState, entity: string, year: number, value: number): ViewState {
  if (state.trainingSetId === null) {
    throw new Error('no training set selected');
  }
  if (typeof value !== 'number' || !Number.isFinite(value)) {
    throw new Error('score must be a finite number');
  }
  const key = docKey(entity, year);
  const edits = new Map(state.edits);
  const base = state.baseRows.find((r) => r.entity === entity && r.year === year);
  if (base !== undefined && base.score === value) {
    edits.delete(key); // editing back to the original is a revert
  } else {
    edits.set(key, { kind: 'set', entity, year, score: value });
  }
  return { ...state, edits };
}

export function stageRemove(state: ViewState, entity: string, year: number): ViewState {
  if (state.trainingSetId === null) {
    throw new Error('no training set selected');
  }
  const base = state.baseRows.find((r) => r.entity === entity && r.year === year);
  const key = docKey(entity, year);
  const edits = new Map(state.edits);
  if (base === undefined) {
    edits.delete(key); // removing a staged addition just un-stages it
  } else {
    edits.set(key, { kind: 'remove', entity, year });
  }
  return { ...state, edits };
}

export function revertEdit(state: ViewState, entity: string, year: number): ViewState {
  const edits = new Map(state.edits);
  edits.delete(docKey(entity, year));
  return { ...state, edits };
}

export function clearEdits(state: ViewState): ViewState {
  return { ...state, edits: new Map() };
}

export function isDirty(state: ViewState): boolean {
  return state.edits.size > 0;
}

/** Rows as they would look after the staged edits (for display only). */
export function effectiveRows(state: ViewState): TrainingRow[] {
  const rows = new Map<string, TrainingRow>();
  for (const row of state.baseRows) {
    rows.set(docKey(row.entity, row.year), row);
  }
  for (const edit of state.edits.values()) {
    const key = docKey(edit.entity, edit.year);
    if (edit.kind === 'remove') {
      rows.delete(key);
    } else {
      rows.set(key, { entity: edit.entity, year: edit.year, score: edit.score });
    }
  }
  return [...rows.values()].sort(
    (a, b) => a.entity.localeCompare(b.entity) || a.year - b.year,
  );
}

/** The exact payload for POST /training-sets/{id}/clone: staged diffs only. */
export function cloneRequestPayload(state: ViewState): {
  set: TrainingRow[];
  remove: { entity: string; year: number }[];
} {
  const set: TrainingRow[] = [];
  const remove: { entity: string; year: number }[] = [];
  const keys = [...state.edits.keys()].sort();
  for (const key of keys) {
    const edit = state.edits.get(key)!;
    if (edit.kind === 'set') {
      set.push({ entity: edit.entity, year: edit.year, score: edit.score });
    } else {
      remove.push({ entity: edit.entity, year: edit.year });
    }
  }
  return { set, remove };
}

export function trackJob(state: ViewState, jobId: string, jobState: string): ViewState {
  const activeJobs = new Map(state.activeJobs);
  activeJobs.set(jobId, jobState);
  return { ...state, activeJobs };
}

/** At most one comparison pair exists at a time. */
export function setComparison(state: ViewState, jobA: string, jobB: string): ViewState {
  return { ...state, comparison: { jobA, jobB } };
}

export function clearComparison(state: ViewState): ViewState {
  return { ...state, comparison: null };
}
